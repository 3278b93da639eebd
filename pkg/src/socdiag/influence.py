"""Interaction-influence event study: does commenting on a post pull the
commenter's subsequent content toward it?

An event is one (agent, target post) engagement, timestamped at the
agent's earliest comment on that post; self-comments are excluded. The
pre/post windows are the agent's w nearest authored posts strictly before
and after the event. The random baseline rescoring draws, per event with a
fixed probability, one same-day post the agent neither authored nor
commented on that day.
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass

import numpy as np

from .corpus import CorpusSnapshot, DailyPartition
from .util import day_to_date, epoch_day, fnv64


@dataclass(frozen=True)
class InteractionEvent:
    agent: str
    time: int  # epoch seconds of the earliest comment
    target_post_id: str
    pre_ids: tuple[str, ...]
    post_ids: tuple[str, ...]


@dataclass
class InfluenceRecord:
    agent: str
    time: int
    target_post_id: str
    feature_space: str
    s_pre: float
    s_post: float
    delta: float
    is_baseline: bool = False


def collect_events(snapshot: CorpusSnapshot, w: int = 20) -> list[InteractionEvent]:
    """All qualifying interaction events, in (time, agent, target) order."""
    if w < 1:
        raise ValueError("w must be >= 1")
    authored: dict[str, list] = {}
    for post in snapshot.posts:
        authored.setdefault(post.author, []).append(post)
    times = {a: [p.created_at for p in posts] for a, posts in authored.items()}

    earliest: dict[tuple[str, str], int] = {}
    for comment in snapshot.comments:  # chronological, so first seen wins
        target = snapshot.post_by_id(comment.post_id)
        if target is None or target.author == comment.author:
            continue
        key = (comment.author, comment.post_id)
        if key not in earliest:
            earliest[key] = comment.created_at

    events = []
    for (agent, post_id), t in earliest.items():
        agent_posts = authored.get(agent)
        if not agent_posts:
            continue
        ts = times[agent]
        before = bisect_left(ts, t)
        after_start = bisect_right(ts, t)
        n_after = len(ts) - after_start
        if before < w or n_after < w:
            continue
        pre = tuple(p.id for p in agent_posts[before - w : before])
        post = tuple(p.id for p in agent_posts[after_start : after_start + w])
        events.append(
            InteractionEvent(
                agent=agent, time=t, target_post_id=post_id, pre_ids=pre, post_ids=post
            )
        )
    events.sort(key=lambda e: (e.time, e.agent, e.target_post_id))
    return events


def _window_similarity(features, ids, target_vec: np.ndarray) -> float:
    rows = features.rows(ids)
    norms = np.linalg.norm(rows, axis=1) * np.linalg.norm(target_vec)
    sims = np.divide(rows @ target_vec, norms, out=np.zeros(len(ids)), where=norms > 0)
    return float(np.clip(sims, -1.0, 1.0).mean())


def interaction_influence(
    event: InteractionEvent, features, target_post_id: str | None = None
) -> InfluenceRecord | None:
    """Similarity shift of the agent's windows relative to the target.

    Returns None when the target has no feature vector (callers count the
    skip). `target_post_id` overrides the event's own target for baseline
    rescoring.
    """
    target = target_post_id or event.target_post_id
    if target not in features:
        return None
    v_target = features.vector(target)
    if np.linalg.norm(v_target) == 0.0:
        return None
    s_pre = _window_similarity(features, event.pre_ids, v_target)
    s_post = _window_similarity(features, event.post_ids, v_target)
    return InfluenceRecord(
        agent=event.agent,
        time=event.time,
        target_post_id=target,
        feature_space=features.name,
        s_pre=s_pre,
        s_post=s_post,
        delta=s_post - s_pre,
        is_baseline=target_post_id is not None,
    )


def random_baseline(
    events: list[InteractionEvent],
    snapshot: CorpusSnapshot,
    partition: DailyPartition,
    features,
    sample_prob: float = 0.3,
    seed: int = 0,
) -> tuple[list[InfluenceRecord], int]:
    """Hypothetical influence against randomly drawn non-interacted posts.

    Per event, with probability `sample_prob` (generator keyed by the
    event), one same-day post neither authored nor commented on by the
    agent that day is drawn uniformly and scored as if it were the target.
    Returns (records, skipped_for_no_candidate).
    """
    if not 0.0 <= sample_prob <= 1.0:
        raise ValueError("sample_prob must be in [0, 1]")
    author_of = {p.id: p.author for p in snapshot.posts}
    commented: dict[tuple[str, int], set[str]] = {}
    for comment in snapshot.comments:
        key = (comment.author, epoch_day(comment.created_at))
        commented.setdefault(key, set()).add(comment.post_id)

    records: list[InfluenceRecord] = []
    skipped = 0
    for event in events:
        rng = np.random.default_rng(
            np.random.SeedSequence(
                [seed & 0xFFFFFFFF, fnv64(event.agent), fnv64(event.target_post_id), event.time]
            )
        )
        if rng.random() >= sample_prob:
            continue
        day = day_to_date(epoch_day(event.time))
        day_posts = partition.posts_by_day.get(day, [])
        excluded = commented.get((event.agent, epoch_day(event.time)), set())
        exclude_positions = [
            i
            for i, pid in enumerate(day_posts)
            if author_of[pid] == event.agent or pid in excluded
        ]
        n_eligible = len(day_posts) - len(exclude_positions)
        if n_eligible <= 0:
            skipped += 1
            continue
        j = int(rng.integers(n_eligible))
        for pos in exclude_positions:  # order-statistics skip over exclusions
            if pos <= j:
                j += 1
            else:
                break
        record = interaction_influence(event, features, target_post_id=day_posts[j])
        if record is None:
            skipped += 1
            continue
        records.append(record)
    return records, skipped


def influence_run(
    snapshot: CorpusSnapshot,
    partition: DailyPartition,
    feature_spaces: list,
    w: int = 20,
    sample_prob: float = 0.3,
    seed: int = 0,
) -> tuple[list[InfluenceRecord], dict]:
    """Observed and baseline records for all events and feature spaces."""
    events = collect_events(snapshot, w=w)
    records: list[InfluenceRecord] = []
    counters = {"events": len(events), "missing_target": 0, "baseline_skipped": 0}
    for features in feature_spaces:
        for event in events:
            rec = interaction_influence(event, features)
            if rec is None:
                counters["missing_target"] += 1
                continue
            records.append(rec)
        base, skipped = random_baseline(
            events, snapshot, partition, features, sample_prob=sample_prob, seed=seed
        )
        counters["baseline_skipped"] += skipped
        records.extend(base)
    return records, counters
