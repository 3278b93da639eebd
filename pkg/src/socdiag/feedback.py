"""Feedback-adaptation event study: Net Progress of an agent's next window
relative to the top- and bottom-scored posts of the current window, with a
score-permutation baseline that severs the content-feedback link.

Windows are adjacent, non-overlapping, and of fixed size; the trailing
partial window is dropped. Within a window, posts are ranked by net score
descending with ties broken by timestamp then id, and the top/bottom sets
have size max(1, floor(quantile * w)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .corpus import CorpusSnapshot, PostRecord
from .semantic import DEGENERATE_NORM
from .util import fnv64


@dataclass
class FeedbackWindowPair:
    agent: str
    window_index: int
    current_posts: tuple[PostRecord, ...]
    next_posts: tuple[PostRecord, ...]
    top_ids: tuple[str, ...]
    bot_ids: tuple[str, ...]

    @property
    def current_ids(self) -> tuple[str, ...]:
        return tuple(p.id for p in self.current_posts)

    @property
    def next_ids(self) -> tuple[str, ...]:
        return tuple(p.id for p in self.next_posts)


def _select_top_bot(
    posts: tuple[PostRecord, ...], scores, size: int
) -> tuple[tuple[str, ...], tuple[str, ...]]:
    order = sorted(
        range(len(posts)),
        key=lambda i: (-scores[i], posts[i].created_at, posts[i].id),
    )
    top = tuple(posts[i].id for i in order[:size])
    bot = tuple(posts[i].id for i in order[len(posts) - size :])
    return top, bot


def build_windows(
    timeline: list[PostRecord], w: int = 10, quantile: float = 0.3
) -> list[FeedbackWindowPair]:
    """Adjacent window pairs over one agent's chronological post history."""
    if w < 4:
        raise ValueError("window size must be >= 4 so top and bottom sets stay disjoint")
    if not 0 < quantile <= 0.5:
        raise ValueError("quantile must be in (0, 0.5]")
    size = max(1, math.floor(quantile * w))
    if 2 * size > w:
        raise ValueError(f"top/bottom sets of size {size} would overlap in a window of {w}")
    n_windows = len(timeline) // w
    pairs = []
    for k in range(n_windows - 1):
        current = tuple(timeline[k * w : (k + 1) * w])
        nxt = tuple(timeline[(k + 1) * w : (k + 2) * w])
        scores = [p.score for p in current]
        top, bot = _select_top_bot(current, scores, size)
        pairs.append(
            FeedbackWindowPair(
                agent=current[0].author,
                window_index=k,
                current_posts=current,
                next_posts=nxt,
                top_ids=top,
                bot_ids=bot,
            )
        )
    return pairs


@dataclass
class NetProgressRecord:
    agent: str
    window_index: int
    feature_space: str
    delta_top: float
    delta_bot: float
    net_progress: float
    baseline_np: tuple[float, ...] = field(default_factory=tuple)
    degenerate: bool = False


def _centroid(features, ids) -> np.ndarray:
    return features.rows(ids).mean(axis=0)


def _cos_dist(u: np.ndarray, v: np.ndarray) -> float:
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu < DEGENERATE_NORM or nv < DEGENERATE_NORM:
        return math.nan
    return 1.0 - float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def _np_for_sets(features, pair, top_ids, bot_ids) -> tuple[float, float, float]:
    c_top = _centroid(features, top_ids)
    c_bot = _centroid(features, bot_ids)
    c_curr = _centroid(features, pair.current_ids)
    c_next = _centroid(features, pair.next_ids)
    delta_top = _cos_dist(c_next, c_top) - _cos_dist(c_curr, c_top)
    delta_bot = _cos_dist(c_next, c_bot) - _cos_dist(c_curr, c_bot)
    return delta_top, delta_bot, delta_bot - delta_top


def net_progress(pair: FeedbackWindowPair, features) -> NetProgressRecord:
    """Observed Net Progress for one window pair in one feature space."""
    delta_top, delta_bot, np_value = _np_for_sets(features, pair, pair.top_ids, pair.bot_ids)
    degenerate = math.isnan(np_value)
    return NetProgressRecord(
        agent=pair.agent,
        window_index=pair.window_index,
        feature_space=features.name,
        delta_top=delta_top,
        delta_bot=delta_bot,
        net_progress=np_value,
        degenerate=degenerate,
    )


def permutation_baseline(
    pair: FeedbackWindowPair, features, n_perms: int = 1, seed: int = 0
) -> list[float]:
    """Net Progress under shuffled scores within the current window.

    Each run re-shuffles the scores with a generator keyed by (seed, agent,
    window index, run), re-derives the top/bottom sets under the same
    tie-break rule, and recomputes NP with content vectors untouched. The
    output is independent of evaluation order.
    """
    w = len(pair.current_posts)
    size = len(pair.top_ids)
    scores = [p.score for p in pair.current_posts]
    values = []
    for run in range(n_perms):
        rng = np.random.default_rng(
            np.random.SeedSequence([seed & 0xFFFFFFFF, fnv64(pair.agent), pair.window_index, run])
        )
        shuffled = [scores[i] for i in rng.permutation(w)]
        top, bot = _select_top_bot(pair.current_posts, shuffled, size)
        _, _, np_value = _np_for_sets(features, pair, top, bot)
        values.append(np_value)
    return values


def agent_timelines(snapshot: CorpusSnapshot) -> dict[str, list[PostRecord]]:
    """Chronological post list per author (snapshot order is already total)."""
    timelines: dict[str, list[PostRecord]] = {}
    for post in snapshot.posts:
        timelines.setdefault(post.author, []).append(post)
    return timelines


def feedback_run(
    snapshot: CorpusSnapshot,
    feature_spaces: list,
    w: int = 10,
    quantile: float = 0.3,
    n_perms: int = 1,
    seed: int = 0,
) -> list[NetProgressRecord]:
    """All window pairs for all agents, across the given feature spaces."""
    records = []
    timelines = agent_timelines(snapshot)
    for agent in sorted(timelines):
        pairs = build_windows(timelines[agent], w=w, quantile=quantile)
        for pair in pairs:
            for features in feature_spaces:
                rec = net_progress(pair, features)
                rec.baseline_np = tuple(
                    permutation_baseline(pair, features, n_perms=n_perms, seed=seed)
                )
                records.append(rec)
    return records
