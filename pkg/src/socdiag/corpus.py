"""Platform dump ingestion, spam filtering, day partitioning, macro activity.

Input dumps are line-delimited JSON. Posts carry `id`, `author`, `submolt`,
`created_at` (ISO-8601 UTC), optional `title`, `content`, and an integer
net `score`. Comments carry `id`, `post_id`, `author`, `created_at`,
`content`, and optionally `parent_id` when the platform exposes thread
structure.

Snapshots are immutable once built; every downstream module treats them as
read-only, which makes them safe to share across threads.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from datetime import date
from typing import Iterable

from .util import DataError, day_to_date, epoch_day, format_utc, parse_utc


@dataclass(frozen=True, slots=True)
class PostRecord:
    id: str
    author: str
    submolt: str
    created_at: int  # epoch seconds, UTC
    title: str
    content: str
    score: int


@dataclass(frozen=True, slots=True)
class CommentRecord:
    id: str
    post_id: str
    author: str
    created_at: int
    content: str
    parent_id: str | None = None


def post_text(post: PostRecord) -> str:
    """Composed text used by every text-analysis module.

    Title and content are joined by a newline when the title is non-empty;
    otherwise the content stands alone.
    """
    if post.title:
        return post.title + "\n" + post.content
    return post.content


@dataclass
class IngestStats:
    posts_read: int = 0
    comments_read: int = 0
    malformed_posts: int = 0
    malformed_comments: int = 0
    dangling_comments: int = 0
    spam_removed: int = 0


@dataclass
class CorpusSnapshot:
    """Sorted, validated view of one dump.

    Posts are ordered by (created_at, id) and comments likewise, so every
    derived artifact is deterministic. The author registry is the union of
    post and comment authors.
    """

    posts: list[PostRecord]
    comments: list[CommentRecord]
    author_registry: frozenset[str]
    dangling_comment_ids: frozenset[str]
    _post_index: dict[str, PostRecord] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self._post_index:
            self._post_index = {p.id: p for p in self.posts}

    def post_by_id(self, post_id: str) -> PostRecord | None:
        return self._post_index.get(post_id)

    @property
    def post_ids(self) -> set[str]:
        return set(self._post_index)


_POST_SORT = lambda p: (p.created_at, p.id)  # noqa: E731
_COMMENT_SORT = lambda c: (c.created_at, c.id)  # noqa: E731


def _parse_post(obj: dict) -> PostRecord:
    pid = obj["id"]
    author = obj["author"]
    submolt = obj["submolt"]
    content = obj["content"]
    score = obj["score"]
    title = obj.get("title", "")
    if not isinstance(pid, str) or not pid:
        raise ValueError("bad id")
    if not isinstance(author, str) or not author:
        raise ValueError("bad author")
    if not isinstance(submolt, str):
        raise ValueError("bad submolt")
    if not isinstance(content, str):
        raise ValueError("bad content")
    if not isinstance(title, str):
        raise ValueError("bad title")
    if isinstance(score, bool) or not isinstance(score, int):
        raise ValueError("bad score")
    return PostRecord(
        id=pid,
        author=author,
        submolt=submolt,
        created_at=parse_utc(obj["created_at"]),
        title=title,
        content=content,
        score=score,
    )


def _parse_comment(obj: dict) -> CommentRecord:
    cid = obj["id"]
    post_id = obj["post_id"]
    author = obj["author"]
    content = obj["content"]
    parent_id = obj.get("parent_id")
    if not isinstance(cid, str) or not cid:
        raise ValueError("bad id")
    if not isinstance(post_id, str) or not post_id:
        raise ValueError("bad post_id")
    if not isinstance(author, str) or not author:
        raise ValueError("bad author")
    if not isinstance(content, str):
        raise ValueError("bad content")
    if parent_id is not None and not isinstance(parent_id, str):
        raise ValueError("bad parent_id")
    return CommentRecord(
        id=cid,
        post_id=post_id,
        author=author,
        created_at=parse_utc(obj["created_at"]),
        content=content,
        parent_id=parent_id,
    )


def _read_lines(source) -> Iterable[str]:
    if hasattr(source, "read"):
        yield from source
        return
    try:
        with open(source, "r", encoding="utf-8") as fh:
            yield from fh
    except OSError as exc:
        raise DataError(f"cannot read input {source}: {exc}") from exc


def ingest(
    posts_source,
    comments_source=None,
    max_malformed_fraction: float = 0.01,
) -> tuple[CorpusSnapshot, IngestStats]:
    """Ingest line-delimited post and comment dumps into a sorted snapshot.

    Malformed lines are counted and skipped; the run is rejected when more
    than `max_malformed_fraction` of either stream is malformed. Duplicate
    ids are always fatal.
    """
    stats = IngestStats()
    posts: list[PostRecord] = []
    seen_posts: set[str] = set()
    total_post_lines = 0
    for line in _read_lines(posts_source):
        line = line.strip()
        if not line:
            continue
        total_post_lines += 1
        try:
            rec = _parse_post(json.loads(line))
        except (ValueError, KeyError, TypeError):
            stats.malformed_posts += 1
            continue
        if rec.id in seen_posts:
            raise DataError(f"duplicate post id: {rec.id}")
        seen_posts.add(rec.id)
        posts.append(rec)

    comments: list[CommentRecord] = []
    seen_comments: set[str] = set()
    total_comment_lines = 0
    if comments_source is not None:
        for line in _read_lines(comments_source):
            line = line.strip()
            if not line:
                continue
            total_comment_lines += 1
            try:
                rec = _parse_comment(json.loads(line))
            except (ValueError, KeyError, TypeError):
                stats.malformed_comments += 1
                continue
            if rec.id in seen_comments:
                raise DataError(f"duplicate comment id: {rec.id}")
            seen_comments.add(rec.id)
            comments.append(rec)

    if total_post_lines and stats.malformed_posts / total_post_lines > max_malformed_fraction:
        raise DataError(
            f"{stats.malformed_posts}/{total_post_lines} malformed post lines "
            f"exceeds the {max_malformed_fraction:.0%} tolerance"
        )
    if total_comment_lines and stats.malformed_comments / total_comment_lines > max_malformed_fraction:
        raise DataError(
            f"{stats.malformed_comments}/{total_comment_lines} malformed comment lines "
            f"exceeds the {max_malformed_fraction:.0%} tolerance"
        )

    posts.sort(key=_POST_SORT)
    comments.sort(key=_COMMENT_SORT)
    stats.posts_read = len(posts)
    stats.comments_read = len(comments)

    dangling = frozenset(c.id for c in comments if c.post_id not in seen_posts)
    stats.dangling_comments = len(dangling)
    registry = frozenset(p.author for p in posts) | frozenset(c.author for c in comments)
    snapshot = CorpusSnapshot(
        posts=posts,
        comments=comments,
        author_registry=registry,
        dangling_comment_ids=dangling,
    )
    return snapshot, stats


def post_to_json(post: PostRecord) -> str:
    return json.dumps(
        {
            "id": post.id,
            "author": post.author,
            "submolt": post.submolt,
            "created_at": format_utc(post.created_at),
            "title": post.title,
            "content": post.content,
            "score": post.score,
        },
        ensure_ascii=False,
        separators=(",", ":"),
    )


def comment_to_json(comment: CommentRecord) -> str:
    obj = {
        "id": comment.id,
        "post_id": comment.post_id,
        "author": comment.author,
        "created_at": format_utc(comment.created_at),
        "content": comment.content,
    }
    if comment.parent_id is not None:
        obj["parent_id"] = comment.parent_id
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def serialize_snapshot(snapshot: CorpusSnapshot) -> tuple[str, str]:
    """Render the snapshot back to (posts_jsonl, comments_jsonl) text."""
    posts = "".join(post_to_json(p) + "\n" for p in snapshot.posts)
    comments = "".join(comment_to_json(c) + "\n" for c in snapshot.comments)
    return posts, comments


def apply_spam_filter(
    snapshot: CorpusSnapshot, repeat_threshold: int = 1000
) -> tuple[CorpusSnapshot, int]:
    """Drop every post whose exact content string repeats more than
    `repeat_threshold` times corpus-wide; returns the filtered snapshot and
    the removal count. Strictly-greater rule: exactly `repeat_threshold`
    copies survive.
    """
    counts = Counter(p.content for p in snapshot.posts)
    spam = {content for content, n in counts.items() if n > repeat_threshold}
    if not spam:
        return snapshot, 0
    kept = [p for p in snapshot.posts if p.content not in spam]
    removed = len(snapshot.posts) - len(kept)
    kept_ids = {p.id for p in kept}
    dangling = frozenset(c.id for c in snapshot.comments if c.post_id not in kept_ids)
    registry = frozenset(p.author for p in kept) | frozenset(
        c.author for c in snapshot.comments
    )
    return (
        CorpusSnapshot(
            posts=kept,
            comments=snapshot.comments,
            author_registry=registry,
            dangling_comment_ids=dangling,
        ),
        removed,
    )


@dataclass
class DailyPartition:
    """Posts bucketed by UTC calendar date, gap days included as empties."""

    days: list[date]
    posts_by_day: dict[date, list[str]]
    day_count: int

    def day_index(self, d: date) -> int:
        return self._index[d]

    def __post_init__(self):
        self._index = {d: i for i, d in enumerate(self.days)}


def partition_by_day(snapshot: CorpusSnapshot) -> DailyPartition:
    if not snapshot.posts:
        return DailyPartition(days=[], posts_by_day={}, day_count=0)
    first = epoch_day(snapshot.posts[0].created_at)
    last = epoch_day(snapshot.posts[-1].created_at)
    days = [day_to_date(d) for d in range(first, last + 1)]
    buckets: dict[date, list[str]] = {d: [] for d in days}
    for post in snapshot.posts:
        buckets[day_to_date(epoch_day(post.created_at))].append(post.id)
    return DailyPartition(days=days, posts_by_day=buckets, day_count=len(days))


@dataclass
class MacroActivitySeries:
    days: list[date]
    post_volume: list[int]
    unique_posting_users: list[int]
    new_posting_users: list[int]
    active_submolts: list[int]
    posts_per_active_submolt: list[float]
    total_comments: list[int]
    total_upvotes: list[int]

    def rows(self):
        for i, d in enumerate(self.days):
            yield (
                d,
                self.post_volume[i],
                self.unique_posting_users[i],
                self.new_posting_users[i],
                self.active_submolts[i],
                self.posts_per_active_submolt[i],
                self.total_comments[i],
                self.total_upvotes[i],
            )


def macro_activity(snapshot: CorpusSnapshot, partition: DailyPartition) -> MacroActivitySeries:
    """Seven per-day activity panels.

    `new_posting_users(t)` counts authors whose first-ever post lands on
    day t. `total_upvotes` sums the positive part of net scores so the
    series stays a count. Comments are bucketed by their own timestamp and
    only counted within the partition's day range.
    """
    n = partition.day_count
    volume = [0] * n
    authors_per_day: list[set[str]] = [set() for _ in range(n)]
    submolts_per_day: list[set[str]] = [set() for _ in range(n)]
    upvotes = [0] * n
    comments = [0] * n
    first_post_day: dict[str, int] = {}

    for post in snapshot.posts:
        i = partition.day_index(day_to_date(epoch_day(post.created_at)))
        volume[i] += 1
        authors_per_day[i].add(post.author)
        submolts_per_day[i].add(post.submolt)
        upvotes[i] += max(post.score, 0)
        if post.author not in first_post_day:
            first_post_day[post.author] = i

    new_users = [0] * n
    for i in first_post_day.values():
        new_users[i] += 1

    if n:
        index = {d: i for i, d in enumerate(partition.days)}
        for comment in snapshot.comments:
            d = day_to_date(epoch_day(comment.created_at))
            i = index.get(d)
            if i is not None:
                comments[i] += 1

    per_submolt = [
        (volume[i] / len(submolts_per_day[i])) if submolts_per_day[i] else 0.0
        for i in range(n)
    ]
    return MacroActivitySeries(
        days=list(partition.days),
        post_volume=volume,
        unique_posting_users=[len(s) for s in authors_per_day],
        new_posting_users=new_users,
        active_submolts=[len(s) for s in submolts_per_day],
        posts_per_active_submolt=per_submolt,
        total_comments=comments,
        total_upvotes=upvotes,
    )
