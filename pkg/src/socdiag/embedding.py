"""Unit-norm post vectors: binary/CSV store IO, deterministic fallback
embeddings, cosine, and the hashed syntactic feature space.

Store format (little-endian): magic ``MBEM``, u32 version = 1, u32 dim,
u64 count, then per record a u16 id byte-length, the UTF-8 id, and dim
f32 components. Records are sorted by id in byte order.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .lexical import _token_arrays, _window_matrix, tokenize
from .util import DataError, fnv64, splitmix64

MAGIC = b"MBEM"
VERSION = 1

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF

# Norms already this close to 1 are left untouched at load so that a
# write/load cycle is byte-stable.
_NORM_SKIP = 1e-6
_NORM_REJECT = 1e-8


@dataclass
class EmbeddingStore:
    """Immutable id -> unit vector map backed by one contiguous matrix."""

    dim: int
    ids: tuple[str, ...]
    matrix: np.ndarray  # (count, dim) float32, unit rows
    _index: dict[str, int] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self._index:
            self._index = {pid: i for i, pid in enumerate(self.ids)}

    @property
    def count(self) -> int:
        return len(self.ids)

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, post_id: str) -> bool:
        return post_id in self._index

    def vector(self, post_id: str) -> np.ndarray:
        return self.matrix[self._index[post_id]]

    def rows(self, post_ids) -> np.ndarray:
        """Matrix of vectors for the given ids, in the given order."""
        idx = np.fromiter((self._index[p] for p in post_ids), dtype=np.int64)
        return self.matrix[idx]

    def missing(self, post_ids) -> list[str]:
        return [p for p in post_ids if p not in self._index]


def _normalize_rows(matrix: np.ndarray, ids) -> np.ndarray:
    norms = np.linalg.norm(matrix.astype(np.float64), axis=1)
    bad = norms < _NORM_REJECT
    if np.any(bad):
        names = [ids[i] for i in np.flatnonzero(bad)[:10]]
        raise DataError(f"near-zero embedding vectors for ids: {', '.join(names)}")
    out = matrix.astype(np.float32, copy=True)
    fix = np.abs(norms - 1.0) > _NORM_SKIP
    if np.any(fix):
        out[fix] = out[fix] / norms[fix, None].astype(np.float32)
    return out


def store_from_vectors(vectors: dict[str, np.ndarray], dim: int | None = None) -> EmbeddingStore:
    """Build a store from an id -> vector map; rows are normalized."""
    ids = sorted(vectors, key=lambda s: s.encode("utf-8"))
    if not ids:
        return EmbeddingStore(dim=dim or 0, ids=(), matrix=np.empty((0, dim or 0), np.float32))
    matrix = np.stack([np.asarray(vectors[i], dtype=np.float32) for i in ids])
    if dim is not None and matrix.shape[1] != dim:
        raise DataError(f"expected dim {dim}, got {matrix.shape[1]}")
    return EmbeddingStore(dim=matrix.shape[1], ids=tuple(ids), matrix=_normalize_rows(matrix, ids))


def write_store(store: EmbeddingStore, path) -> None:
    parts = [MAGIC, struct.pack("<IIQ", VERSION, store.dim, store.count)]
    order = sorted(range(store.count), key=lambda i: store.ids[i].encode("utf-8"))
    for i in order:
        raw = store.ids[i].encode("utf-8")
        if len(raw) > 0xFFFF:
            raise DataError(f"id too long for store format: {store.ids[i][:40]}...")
        parts.append(struct.pack("<H", len(raw)))
        parts.append(raw)
        parts.append(store.matrix[i].astype("<f4").tobytes())
    from .util import atomic_write_bytes

    atomic_write_bytes(path, b"".join(parts))


def _load_binary(path) -> EmbeddingStore:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read embedding store {path}: {exc}") from exc
    if len(data) < 20 or data[:4] != MAGIC:
        raise DataError(f"bad magic in embedding store {path}")
    version, dim, count = struct.unpack_from("<IIQ", data, 4)
    if version != VERSION:
        raise DataError(f"unsupported embedding store version {version}")
    offset = 20
    ids: list[str] = []
    vectors = np.empty((count, dim), dtype=np.float32)
    vec_bytes = dim * 4
    for row in range(count):
        if offset + 2 > len(data):
            raise DataError(f"truncated embedding store {path} (record {row})")
        (id_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        if offset + id_len + vec_bytes > len(data):
            raise DataError(f"truncated embedding store {path} (record {row})")
        ids.append(data[offset : offset + id_len].decode("utf-8"))
        offset += id_len
        vectors[row] = np.frombuffer(data, dtype="<f4", count=dim, offset=offset)
        offset += vec_bytes
    if offset != len(data):
        raise DataError(f"trailing bytes in embedding store {path}")
    return EmbeddingStore(dim=dim, ids=tuple(ids), matrix=_normalize_rows(vectors, ids))


def _load_csv(path) -> EmbeddingStore:
    vectors: dict[str, np.ndarray] = {}
    dim = None
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                cells = line.split(",")
                if lineno == 1 and cells[0] == "id":
                    continue  # optional header
                if len(cells) < 2:
                    raise DataError(f"{path}:{lineno}: too few columns")
                if dim is None:
                    dim = len(cells) - 1
                elif len(cells) - 1 != dim:
                    raise DataError(
                        f"{path}:{lineno}: dim mismatch ({len(cells) - 1} != {dim})"
                    )
                try:
                    vec = np.array([float(c) for c in cells[1:]], dtype=np.float32)
                except ValueError as exc:
                    raise DataError(f"{path}:{lineno}: bad float") from exc
                if cells[0] in vectors:
                    raise DataError(f"{path}:{lineno}: duplicate id {cells[0]}")
                vectors[cells[0]] = vec
    except OSError as exc:
        raise DataError(f"cannot read embedding store {path}: {exc}") from exc
    return store_from_vectors(vectors, dim)


def load_store(path, fmt: str = "mbem") -> EmbeddingStore:
    """Load a store, re-normalizing every vector to unit L2 norm."""
    if fmt == "mbem":
        return _load_binary(path)
    if fmt == "csv":
        return _load_csv(path)
    raise ValueError(f"unknown store format: {fmt}")


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity, clamped to [-1, 1] against rounding."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine undefined for zero-norm vector (degenerate centroid)")
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def _gram_hash_scalar(token_hashes: list[int]) -> int:
    h = _FNV_OFFSET
    for th in token_hashes:
        h = ((h ^ th) * _FNV_PRIME) & _MASK64
    return h


def fallback_embed(text: str, dim: int = 384, seed: int = 0) -> np.ndarray:
    """Deterministic stand-in embedding: signed random projection of hashed
    unigram+bigram counts, L2-normalized. Same (text, dim, seed) always
    yields the same vector; empty text maps to the axis-0 unit vector.
    """
    if dim < 2:
        raise ValueError("dim must be >= 2")
    tokens = tokenize(text)
    acc = np.zeros(dim, dtype=np.float64)
    if not tokens:
        acc[0] = 1.0
        return acc
    seed_mix = splitmix64(seed & _MASK64)
    token_hashes = [fnv64(t) for t in tokens]
    grams: list[int] = list(token_hashes)
    for a, b in zip(token_hashes, token_hashes[1:]):
        grams.append(_gram_hash_scalar([a, b]))
    for g in grams:
        h = splitmix64(g ^ seed_mix)
        idx = h % dim
        acc[idx] += 1.0 if (h >> 63) == 0 else -1.0
    norm = np.linalg.norm(acc)
    if norm == 0.0:
        acc[:] = 0.0
        acc[0] = 1.0
        return acc
    return acc / norm


def fallback_store(posts_texts: dict[str, str], dim: int = 384, seed: int = 0) -> EmbeddingStore:
    """Fallback embeddings for a whole corpus, keyed by post id."""
    return store_from_vectors(
        {pid: fallback_embed(text, dim, seed) for pid, text in posts_texts.items()}, dim
    )


def syntactic_vector(text: str, dim: int = 4096, n_max: int = 3) -> np.ndarray:
    """L2-normalized hashed 1..n_max-gram counts (dense)."""
    tokens = tokenize(text)
    acc = np.zeros(dim, dtype=np.float64)
    if not tokens:
        acc[0] = 1.0
        return acc
    token_hashes = [fnv64(t) for t in tokens]
    for n in range(1, n_max + 1):
        for i in range(len(tokens) - n + 1):
            acc[_gram_hash_scalar(token_hashes[i : i + n]) % dim] += 1.0
    norm = np.linalg.norm(acc)
    if norm == 0.0:
        acc[0] = 1.0
        return acc
    return acc / norm


def syntactic_matrix(texts: list[str], dim: int = 4096, n_max: int = 3) -> sparse.csr_matrix:
    """Row-per-text hashed n-gram matrix; rows L2-normalized.

    Agrees exactly with `syntactic_vector` applied text by text; the batch
    path exists because per-post hashing in Python is too slow for large
    corpora.
    """
    ids, lengths, vocab = _token_arrays(texts)
    token_hashes = np.array([fnv64(t) for t in vocab], dtype=np.uint64)
    prime = np.uint64(_FNV_PRIME)
    offset = np.uint64(_FNV_OFFSET)

    rows_parts: list[np.ndarray] = []
    buckets_parts: list[np.ndarray] = []
    for n in range(1, n_max + 1):
        gm, row_of = _window_matrix(ids, lengths, n)
        if gm.shape[0] == 0:
            continue
        h = np.full(gm.shape[0], offset, dtype=np.uint64)
        for c in range(n):
            h = (h ^ token_hashes[gm[:, c]]) * prime
        rows_parts.append(row_of)
        buckets_parts.append((h % np.uint64(dim)).astype(np.int64))

    n_texts = len(texts)
    if rows_parts:
        row_all = np.concatenate(rows_parts)
        bucket_all = np.concatenate(buckets_parts)
    else:
        row_all = np.empty(0, dtype=np.int64)
        bucket_all = np.empty(0, dtype=np.int64)

    # Texts with no grams get the axis-0 unit row.
    has_grams = np.zeros(n_texts, dtype=bool)
    has_grams[row_all] = True
    empties = np.flatnonzero(~has_grams)
    if empties.size:
        row_all = np.concatenate([row_all, empties])
        bucket_all = np.concatenate([bucket_all, np.zeros(empties.size, dtype=np.int64)])

    key = row_all * dim + bucket_all
    uniq, counts = np.unique(key, return_counts=True)
    rows = (uniq // dim).astype(np.int64)
    cols = (uniq % dim).astype(np.int64)
    data = counts.astype(np.float64)
    if empties.size:
        # The injected axis-0 marker must be exactly 1 regardless of count.
        marker = np.isin(rows, empties)
        data[marker] = 1.0
    indptr = np.zeros(n_texts + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n_texts), out=indptr[1:])
    mat = sparse.csr_matrix((data, cols, indptr), shape=(n_texts, dim))
    norms = np.asarray(mat.multiply(mat).sum(axis=1)).ravel() ** 0.5
    inv = np.divide(1.0, norms, out=np.zeros_like(norms), where=norms > 0)
    return sparse.diags(inv) @ mat


class SemanticFeatures:
    """Per-post feature access backed by an embedding store."""

    name = "semantic"

    def __init__(self, store: EmbeddingStore):
        self.store = store
        self.dim = store.dim

    def __contains__(self, post_id: str) -> bool:
        return post_id in self.store

    def rows(self, post_ids) -> np.ndarray:
        return self.store.rows(post_ids).astype(np.float64)

    def vector(self, post_id: str) -> np.ndarray:
        return self.store.vector(post_id).astype(np.float64)


class SyntacticFeatures:
    """Per-post hashed n-gram features, precomputed for a post collection."""

    name = "syntactic"

    def __init__(self, posts, dim: int = 4096, n_max: int = 3):
        from .corpus import post_text

        self._ids = {p.id: i for i, p in enumerate(posts)}
        self._matrix = syntactic_matrix([post_text(p) for p in posts], dim, n_max)
        self.dim = dim

    def __contains__(self, post_id: str) -> bool:
        return post_id in self._ids

    def rows(self, post_ids) -> np.ndarray:
        idx = np.fromiter((self._ids[p] for p in post_ids), dtype=np.int64)
        return np.asarray(self._matrix[idx].todense(), dtype=np.float64)

    def vector(self, post_id: str) -> np.ndarray:
        return self.rows([post_id])[0]
