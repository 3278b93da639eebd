"""Society-level semantic metrics: daily centroids, centroid and pairwise
similarity matrices, local-neighborhood density, and day-over-day JS
divergence of the density distributions.

Centroids are plain means of unit post vectors and are left unnormalized;
cosine absorbs the magnitude. For unit vectors the cross-day mean pairwise
similarity collapses to a dot product of day means, which is what makes
the full matrix tractable; the diagonal uses the self-pair-excluded form.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date, timedelta

import numpy as np

from .corpus import DailyPartition
from .embedding import EmbeddingStore
from .util import DataError

DEGENERATE_NORM = 1e-12


@dataclass
class DailyCentroids:
    days: list[date]
    counts: np.ndarray  # posts per day
    matrix: np.ndarray  # (n_days, dim) means; NaN rows for empty days
    global_centroid: np.ndarray
    total_posts: int
    missing_skipped: int = 0

    def centroid(self, d: date) -> np.ndarray:
        return self.matrix[self.days.index(d)]

    def degenerate_days(self) -> list[date]:
        """Days with posts whose mean collapsed to (numerically) zero."""
        norms = np.linalg.norm(np.nan_to_num(self.matrix), axis=1)
        return [
            d
            for i, d in enumerate(self.days)
            if self.counts[i] > 0 and norms[i] < DEGENERATE_NORM
        ]


def _day_matrix(partition, store, d, allow_missing):
    ids = partition.posts_by_day[d]
    if allow_missing:
        present = [p for p in ids if p in store]
        skipped = len(ids) - len(present)
        ids = present
    else:
        missing = store.missing(ids)
        if missing:
            shown = ", ".join(missing[:10])
            raise DataError(f"posts without embeddings on {d}: {shown}")
        skipped = 0
    return ids, skipped


def daily_centroids(
    partition: DailyPartition, store: EmbeddingStore, allow_missing: bool = False
) -> DailyCentroids:
    """Mean embedding per day plus the global mean over all posts."""
    dim = store.dim
    n = partition.day_count
    counts = np.zeros(n, dtype=np.int64)
    matrix = np.full((n, dim), np.nan)
    total_sum = np.zeros(dim)
    total_count = 0
    skipped = 0
    for i, d in enumerate(partition.days):
        ids, day_skipped = _day_matrix(partition, store, d, allow_missing)
        skipped += day_skipped
        if not ids:
            continue
        rows = store.rows(ids).astype(np.float64)
        counts[i] = len(ids)
        matrix[i] = rows.mean(axis=0)
        total_sum += rows.sum(axis=0)
        total_count += len(ids)
    global_centroid = total_sum / total_count if total_count else np.zeros(dim)
    return DailyCentroids(
        days=list(partition.days),
        counts=counts,
        matrix=matrix,
        global_centroid=global_centroid,
        total_posts=total_count,
        missing_skipped=skipped,
    )


@dataclass
class SimilarityMatrix:
    days: list[date]
    values: np.ndarray  # square, symmetric, in [-1, 1] (NaN = absent)
    kind: str  # "centroid" | "pairwise"
    excluded_days: list[date]


def centroid_similarity(centroids: DailyCentroids) -> SimilarityMatrix:
    """Cosine similarity between day centroids; degenerate days excluded."""
    norms = np.linalg.norm(np.nan_to_num(centroids.matrix), axis=1)
    keep = [
        i
        for i in range(len(centroids.days))
        if centroids.counts[i] > 0 and norms[i] >= DEGENERATE_NORM
    ]
    excluded = [d for i, d in enumerate(centroids.days) if i not in set(keep)]
    if not keep:
        raise DataError("all days have degenerate centroids")
    sub = centroids.matrix[keep]
    unit = sub / np.linalg.norm(sub, axis=1, keepdims=True)
    values = np.clip(unit @ unit.T, -1.0, 1.0)
    np.fill_diagonal(values, 1.0)
    return SimilarityMatrix(
        days=[centroids.days[i] for i in keep],
        values=values,
        kind="centroid",
        excluded_days=excluded,
    )


def pairwise_similarity(
    partition: DailyPartition, store: EmbeddingStore, allow_missing: bool = False
) -> SimilarityMatrix:
    """Mean cosine over all cross-day post pairs, for every day pair.

    Off-diagonal entries equal the dot product of the two day means, which
    is algebraically identical to the explicit double sum because all post
    vectors are unit-norm. Diagonal entries exclude self-pairs and are
    absent (NaN) for days with fewer than two posts.
    """
    day_ids = []
    for d in partition.days:
        ids, _ = _day_matrix(partition, store, d, allow_missing)
        day_ids.append(ids)
    keep = [i for i, ids in enumerate(day_ids) if ids]
    excluded = [partition.days[i] for i in range(partition.day_count) if i not in set(keep)]
    if not keep:
        raise DataError("no days with embedded posts")
    dim = store.dim
    sums = np.zeros((len(keep), dim))
    counts = np.zeros(len(keep))
    for row, i in enumerate(keep):
        rows = store.rows(day_ids[i]).astype(np.float64)
        sums[row] = rows.sum(axis=0)
        counts[row] = rows.shape[0]
    means = sums / counts[:, None]
    values = np.clip(means @ means.T, -1.0, 1.0)
    for row in range(len(keep)):
        n_t = counts[row]
        if n_t >= 2:
            sq = float(sums[row] @ sums[row])
            values[row, row] = np.clip((sq - n_t) / (n_t * (n_t - 1)), -1.0, 1.0)
        else:
            values[row, row] = np.nan
    return SimilarityMatrix(
        days=[partition.days[i] for i in keep],
        values=values,
        kind="pairwise",
        excluded_days=excluded,
    )


@dataclass
class DensityDistribution:
    """Per-day samples of mean cosine to the K nearest same-day neighbors."""

    k: int
    days: list[date]
    samples: dict[date, np.ndarray]
    skipped: list[tuple[date, int]]  # days with fewer than K+1 posts


def local_density(
    partition: DailyPartition,
    store: EmbeddingStore,
    k: int = 10,
    allow_missing: bool = False,
    threads: int = 1,
) -> DensityDistribution:
    """Exact K-nearest-neighbor mean similarity for every post, per day.

    Days with fewer than K+1 posts are skipped and reported. Neighbor sets
    are computed by full same-day similarity; tied boundary similarities
    contribute the same value to the mean either way, so the result does
    not depend on which tied neighbor is picked.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    day_ids: dict[date, list[str]] = {}
    skipped: list[tuple[date, int]] = []
    for d in partition.days:
        ids, _ = _day_matrix(partition, store, d, allow_missing)
        if len(ids) >= k + 1:
            day_ids[d] = ids
        elif len(ids) > 0:
            skipped.append((d, len(ids)))

    def one_day(d: date) -> tuple[date, np.ndarray]:
        rows = store.rows(day_ids[d]).astype(np.float64)
        sims = rows @ rows.T
        np.clip(sims, -1.0, 1.0, out=sims)
        np.fill_diagonal(sims, -2.0)  # exclude self
        top = np.partition(sims, -k, axis=1)[:, -k:]
        return d, top.mean(axis=1)

    days = sorted(day_ids)
    if threads > 1 and len(days) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = dict(pool.map(one_day, days))
    else:
        results = dict(one_day(d) for d in days)
    return DensityDistribution(k=k, days=days, samples=results, skipped=skipped)


def js_divergence(p: np.ndarray, q: np.ndarray) -> float:
    """Jensen-Shannon divergence (log base 2) of two probability vectors."""
    m = 0.5 * (p + q)
    kl_pm = float(np.sum(p * np.log2(p / m, where=p > 0, out=np.zeros_like(p))))
    kl_qm = float(np.sum(q * np.log2(q / m, where=q > 0, out=np.zeros_like(q))))
    return float(np.clip(0.5 * kl_pm + 0.5 * kl_qm, 0.0, 1.0))


def _smoothed_histogram(samples: np.ndarray, bins: int, epsilon: float) -> np.ndarray:
    hist, _ = np.histogram(samples, bins=bins, range=(-1.0, 1.0))
    smoothed = hist.astype(np.float64) + epsilon
    return smoothed / smoothed.sum()


@dataclass
class JsdSeries:
    entries: list[tuple[date, date, float]]
    bins: int
    epsilon: float


def density_shift(
    density: DensityDistribution, bins: int = 50, epsilon: float = 1e-12
) -> JsdSeries:
    """JS divergence between consecutive days' density distributions.

    The chain breaks wherever a calendar-consecutive day is missing from
    the density output (no entry is emitted for that link).
    """
    available = set(density.days)
    entries = []
    for d in density.days:
        nxt = d + timedelta(days=1)
        if nxt not in available:
            continue
        p = _smoothed_histogram(density.samples[d], bins, epsilon)
        q = _smoothed_histogram(density.samples[nxt], bins, epsilon)
        entries.append((d, nxt, js_divergence(p, q)))
    return JsdSeries(entries=entries, bins=bins, epsilon=epsilon)
