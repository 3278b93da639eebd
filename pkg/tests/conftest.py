"""Shared fixture builders for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from socdiag.corpus import CommentRecord, CorpusSnapshot, PostRecord
from socdiag.embedding import EmbeddingStore, store_from_vectors

BASE_EPOCH = 1769558400  # 2026-01-28T00:00:00Z


def make_post(
    pid: str,
    author: str = "alice",
    day: int = 0,
    second: int = 0,
    submolt: str = "general",
    title: str = "",
    content: str = "hello world",
    score: int = 0,
) -> PostRecord:
    return PostRecord(
        id=pid,
        author=author,
        submolt=submolt,
        created_at=BASE_EPOCH + day * 86400 + second,
        title=title,
        content=content,
        score=score,
    )


def make_comment(
    cid: str,
    post_id: str,
    author: str = "bob",
    day: int = 0,
    second: int = 0,
    content: str = "nice",
    parent_id: str | None = None,
) -> CommentRecord:
    return CommentRecord(
        id=cid,
        post_id=post_id,
        author=author,
        created_at=BASE_EPOCH + day * 86400 + second,
        content=content,
        parent_id=parent_id,
    )


def build_snapshot(posts, comments=()) -> CorpusSnapshot:
    posts = sorted(posts, key=lambda p: (p.created_at, p.id))
    comments = sorted(comments, key=lambda c: (c.created_at, c.id))
    post_ids = {p.id for p in posts}
    return CorpusSnapshot(
        posts=posts,
        comments=list(comments),
        author_registry=frozenset(p.author for p in posts)
        | frozenset(c.author for c in comments),
        dangling_comment_ids=frozenset(
            c.id for c in comments if c.post_id not in post_ids
        ),
    )


def store_of(vectors: dict[str, list[float]]) -> EmbeddingStore:
    return store_from_vectors({k: np.asarray(v, dtype=np.float64) for k, v in vectors.items()})


def random_orthogonal(dim: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    return q * np.sign(np.diag(r))


@pytest.fixture
def tiny_snapshot():
    posts = [
        make_post("p1", author="alice", day=0, second=10, content="alpha beta"),
        make_post("p2", author="bob", day=0, second=20, content="beta gamma"),
        make_post("p3", author="alice", day=1, second=30, content="alpha delta"),
    ]
    comments = [make_comment("c1", "p1", author="bob", day=0, second=100)]
    return build_snapshot(posts, comments)
