"""Agent-level drift: magnitude, direction consistency, and movement toward
the societal centroid.

Each qualifying agent's post history is split chronologically into two
halves (the early half gets floor(m/2) posts). Drift magnitude is the
cosine distance between the half centroids; direction consistency is the
cosine between the agent's drift vector and the population mean drift
vector; movement toward the societal centroid compares late-vs-early
proximity to the global post centroid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .corpus import CorpusSnapshot
from .embedding import EmbeddingStore, cosine
from .semantic import DEGENERATE_NORM


@dataclass
class AgentDriftRecord:
    agent: str
    post_count: int
    early_centroid: np.ndarray
    late_centroid: np.ndarray
    drift_vector: np.ndarray
    drift_magnitude: float  # NaN when degenerate
    consistency: float  # NaN when undefined
    toward_center: float
    degenerate: bool = False


@dataclass
class DriftResult:
    records: list[AgentDriftRecord]
    mean_drift: np.ndarray | None  # None when no usable drift vectors
    global_centroid: np.ndarray


def _safe_cos(u: np.ndarray, v: np.ndarray) -> float:
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu < DEGENERATE_NORM or nv < DEGENERATE_NORM:
        return math.nan
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def agent_drift(
    snapshot: CorpusSnapshot,
    store: EmbeddingStore,
    min_posts: int = 10,
    leave_one_out: bool = False,
) -> DriftResult:
    """Drift metrics for every agent with at least `min_posts` posts.

    `leave_one_out=True` scores each agent's consistency against the mean
    drift of the other agents (sensitivity variant); the default includes
    the agent itself, as the consistency definition is written.
    """
    by_agent: dict[str, list] = {}
    for post in snapshot.posts:  # posts are chronologically sorted
        by_agent.setdefault(post.author, []).append(post)

    all_rows = store.rows([p.id for p in snapshot.posts]).astype(np.float64)
    global_centroid = (
        all_rows.mean(axis=0) if len(all_rows) else np.zeros(store.dim)
    )

    prelim = []
    for agent in sorted(by_agent):
        posts = by_agent[agent]
        m = len(posts)
        if m < min_posts:
            continue
        half = m // 2
        early = store.rows([p.id for p in posts[:half]]).astype(np.float64).mean(axis=0)
        late = store.rows([p.id for p in posts[half:]]).astype(np.float64).mean(axis=0)
        degenerate = (
            np.linalg.norm(early) < DEGENERATE_NORM
            or np.linalg.norm(late) < DEGENERATE_NORM
        )
        prelim.append((agent, m, early, late, degenerate))

    usable = [p for p in prelim if not p[4]]
    mean_drift = None
    if usable:
        drifts = np.stack([late - early for _, _, early, late, _ in usable])
        mean_drift = drifts.mean(axis=0)
        if np.linalg.norm(mean_drift) < DEGENERATE_NORM and not leave_one_out:
            mean_drift_valid = False
        else:
            mean_drift_valid = True
    else:
        mean_drift_valid = False

    n_usable = len(usable)
    records = []
    for agent, m, early, late, degenerate in prelim:
        d_vec = late - early
        if degenerate:
            records.append(
                AgentDriftRecord(
                    agent=agent,
                    post_count=m,
                    early_centroid=early,
                    late_centroid=late,
                    drift_vector=d_vec,
                    drift_magnitude=math.nan,
                    consistency=math.nan,
                    toward_center=math.nan,
                    degenerate=True,
                )
            )
            continue
        magnitude = 1.0 - _safe_cos(early, late)
        if mean_drift is None or not mean_drift_valid:
            consistency = math.nan
        elif leave_one_out and n_usable > 1:
            loo = (mean_drift * n_usable - d_vec) / (n_usable - 1)
            consistency = _safe_cos(d_vec, loo)
        else:
            consistency = _safe_cos(d_vec, mean_drift)
        if np.linalg.norm(global_centroid) < DEGENERATE_NORM:
            toward = math.nan
        else:
            toward = _safe_cos(late, global_centroid) - _safe_cos(early, global_centroid)
        records.append(
            AgentDriftRecord(
                agent=agent,
                post_count=m,
                early_centroid=early,
                late_centroid=late,
                drift_vector=d_vec,
                drift_magnitude=magnitude,
                consistency=consistency,
                toward_center=toward,
            )
        )
    return DriftResult(records=records, mean_drift=mean_drift, global_centroid=global_centroid)


_QUANTS = (0.05, 0.25, 0.50, 0.75, 0.95)


@dataclass
class DriftCohortSummary:
    label: str
    lo: int
    hi: int | None  # None = unbounded
    count: int
    stats: dict[str, dict[str, float]]  # metric -> {mean, q05..q95}


def _summary(values: list[float]) -> dict[str, float]:
    clean = np.array([v for v in values if not math.isnan(v)])
    if clean.size == 0:
        return {"mean": math.nan, **{f"q{int(q * 100):02d}": math.nan for q in _QUANTS}}
    out = {"mean": float(clean.mean())}
    for q in _QUANTS:
        out[f"q{int(q * 100):02d}"] = float(np.quantile(clean, q))
    return out


def drift_by_activity(
    records: list[AgentDriftRecord], bucket_edges: list[int]
) -> list[DriftCohortSummary]:
    """Cohort summaries over half-open post-count buckets.

    Edges [10, 20, 50] produce [10,20), [20,50), [50,inf). Records below
    the first edge (possible when min_posts < edges[0]) land in an extra
    leading bucket so the buckets always partition the records.
    """
    if not bucket_edges or sorted(bucket_edges) != list(bucket_edges):
        raise ValueError("bucket_edges must be non-empty and ascending")
    ranges: list[tuple[int, int | None]] = []
    if any(r.post_count < bucket_edges[0] for r in records):
        ranges.append((0, bucket_edges[0]))
    for lo, hi in zip(bucket_edges, bucket_edges[1:]):
        ranges.append((lo, hi))
    ranges.append((bucket_edges[-1], None))

    summaries = []
    for lo, hi in ranges:
        members = [
            r
            for r in records
            if r.post_count >= lo and (hi is None or r.post_count < hi)
        ]
        label = f"[{lo},{hi})" if hi is not None else f"[{lo},inf)"
        summaries.append(
            DriftCohortSummary(
                label=label,
                lo=lo,
                hi=hi,
                count=len(members),
                stats={
                    "drift_magnitude": _summary([r.drift_magnitude for r in members]),
                    "consistency": _summary([r.consistency for r in members]),
                    "toward_center": _summary([r.toward_center for r in members]),
                },
            )
        )
    return summaries
