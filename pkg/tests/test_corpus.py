import io
import json
from datetime import date, timedelta

import pytest

from socdiag import corpus
from socdiag.util import DataError

from conftest import BASE_EPOCH, build_snapshot, make_comment, make_post


def _post_line(pid, created="2026-01-28T00:00:00Z", **kw):
    obj = {
        "id": pid,
        "author": kw.get("author", "alice"),
        "submolt": kw.get("submolt", "general"),
        "created_at": created,
        "title": kw.get("title", ""),
        "content": kw.get("content", "hello"),
        "score": kw.get("score", 1),
    }
    obj.update({k: v for k, v in kw.items() if k in obj})
    return json.dumps(obj)


def _ingest(post_lines, comment_lines=()):
    return corpus.ingest(
        io.StringIO("\n".join(post_lines) + "\n"),
        io.StringIO("\n".join(comment_lines) + "\n") if comment_lines else None,
    )


def test_ingest_three_posts_builds_registry():
    snap, stats = _ingest(
        [
            _post_line("p1", author="a1"),
            _post_line("p2", author="a2"),
            _post_line("p3", author="a3"),
        ]
    )
    assert len(snap.posts) == 3
    assert snap.author_registry == {"a1", "a2", "a3"}
    assert stats.malformed_posts == 0


def test_ingest_missing_created_at_is_malformed_not_fatal():
    line = json.dumps({"id": "px", "author": "a", "submolt": "s", "content": "x", "score": 0})
    snap, stats = _ingest([_post_line(f"p{i}") for i in range(100)] + [line])
    assert stats.malformed_posts == 1
    assert "px" not in snap.post_ids


def test_ingest_adjacent_midnight_ordering():
    # Reference sort of the fixture: explicit (created_at, id) sort of parsed lines.
    lines = [
        _post_line("pb", created="2026-01-31T00:00:00Z"),
        _post_line("pa", created="2026-01-30T23:59:59Z"),
    ]
    snap, _ = _ingest(lines)
    parsed = sorted(
        [("pa", "2026-01-30T23:59:59Z"), ("pb", "2026-01-31T00:00:00Z")],
        key=lambda t: (corpus.parse_utc(t[1]), t[0]),
    )
    assert [p.id for p in snap.posts] == [t[0] for t in parsed]
    assert snap.posts[1].created_at - snap.posts[0].created_at == 1


def test_ingest_duplicate_post_id_fatal():
    with pytest.raises(DataError, match="p1"):
        _ingest([_post_line("p1"), _post_line("p1")])


def test_ingest_duplicate_comment_id_fatal():
    comment = json.dumps(
        {"id": "c1", "post_id": "p1", "author": "b", "created_at": "2026-01-28T01:00:00Z", "content": "x"}
    )
    with pytest.raises(DataError, match="c1"):
        _ingest([_post_line("p1")], [comment, comment])


def test_ingest_malformed_fraction_above_threshold_fatal():
    good = [_post_line(f"p{i}") for i in range(50)]
    bad = ["{not json"] * 5
    with pytest.raises(DataError, match="malformed"):
        _ingest(good + bad)


def test_ingest_unreadable_input_fatal(tmp_path):
    with pytest.raises(DataError, match="cannot read"):
        corpus.ingest(tmp_path / "missing.jsonl")


def test_ingest_flags_dangling_comments():
    comment = json.dumps(
        {"id": "c1", "post_id": "nope", "author": "b", "created_at": "2026-01-28T01:00:00Z", "content": "x"}
    )
    snap, stats = _ingest([_post_line("p1")], [comment])
    assert snap.dangling_comment_ids == {"c1"}
    assert stats.dangling_comments == 1
    assert "b" in snap.author_registry


def test_roundtrip_serialize_reingest_identity(tiny_snapshot):
    posts_text, comments_text = corpus.serialize_snapshot(tiny_snapshot)
    snap2, _ = corpus.ingest(io.StringIO(posts_text), io.StringIO(comments_text))
    assert snap2.posts == tiny_snapshot.posts
    assert snap2.comments == tiny_snapshot.comments
    assert snap2.author_registry == tiny_snapshot.author_registry


def test_post_text_composition():
    titled = make_post("p1", title="Heads up", content="body text")
    untitled = make_post("p2", content="body only")
    assert corpus.post_text(titled) == "Heads up\nbody text"
    assert corpus.post_text(untitled) == "body only"


def test_post_text_matches_shared_fixture():
    # Same fixture is exercised by the embedding sidecar's test suite, so
    # the composition rule is pinned by data across the language boundary.
    import os

    path = os.path.join(os.path.dirname(__file__), "fixtures", "text_composition.json")
    with open(path, "r", encoding="utf-8") as fh:
        fixture = json.load(fh)
    for case in fixture["cases"]:
        post = make_post("px", title=case["title"], content=case["content"])
        assert corpus.post_text(post) == case["composed"]


# --- spam filter ---


def test_spam_filter_removes_over_threshold():
    posts = [make_post(f"p{i}", second=i, content="same spam") for i in range(1001)]
    snap = build_snapshot(posts)
    filtered, removed = corpus.apply_spam_filter(snap, repeat_threshold=1000)
    assert removed == 1001
    assert len(filtered.posts) == 0


def test_spam_filter_boundary_keeps_exactly_threshold():
    posts = [make_post(f"p{i}", second=i, content="same") for i in range(1000)]
    snap = build_snapshot(posts)
    filtered, removed = corpus.apply_spam_filter(snap, repeat_threshold=1000)
    assert removed == 0
    assert len(filtered.posts) == 1000


def test_spam_filter_mixed_corpus_hand_count():
    posts = [make_post(f"a{i:04d}", second=i, content="copy A") for i in range(1001)]
    posts += [make_post(f"b{i}", second=5000 + i, content="copy B") for i in range(5)]
    snap = build_snapshot(posts)
    filtered, removed = corpus.apply_spam_filter(snap, repeat_threshold=1000)
    assert removed == 1001
    assert sorted(p.id for p in filtered.posts) == [f"b{i}" for i in range(5)]


def test_spam_filter_idempotent():
    posts = [make_post(f"p{i}", second=i, content="x" if i % 2 else "y") for i in range(20)]
    snap = build_snapshot(posts)
    once, _ = corpus.apply_spam_filter(snap, repeat_threshold=5)
    twice, removed2 = corpus.apply_spam_filter(once, repeat_threshold=5)
    assert removed2 == 0
    assert twice.posts == once.posts


def test_spam_filter_empty_corpus():
    snap = build_snapshot([])
    filtered, removed = corpus.apply_spam_filter(snap)
    assert removed == 0 and filtered.posts == []


# --- partition ---


def test_partition_single_day():
    snap = build_snapshot([make_post("p1"), make_post("p2", second=5)])
    part = corpus.partition_by_day(snap)
    assert part.day_count == 1
    assert part.posts_by_day[part.days[0]] == ["p1", "p2"]


def test_partition_gap_days_present_and_empty():
    snap = build_snapshot([make_post("p1", day=0), make_post("p2", day=2)])
    part = corpus.partition_by_day(snap)
    assert part.day_count == 3
    assert part.days == [date(2026, 1, 28), date(2026, 1, 29), date(2026, 1, 30)]
    assert part.posts_by_day[date(2026, 1, 29)] == []


def test_partition_eleven_active_dates_with_one_gap():
    # Active dates span 2026-01-28..2026-02-08 with 02-01 silent: the gap
    # day is present but empty, and the active-day list matches the fixture.
    active = [0, 1, 2, 3, 5, 6, 7, 8, 9, 10, 11]  # offsets from Jan 28
    snap = build_snapshot([make_post(f"p{i}", day=d) for i, d in enumerate(active)])
    part = corpus.partition_by_day(snap)
    assert part.day_count == 12
    nonempty = [d for d in part.days if part.posts_by_day[d]]
    assert nonempty == [date(2026, 1, 28) + timedelta(days=d) for d in active]
    assert part.posts_by_day[date(2026, 2, 1)] == []


def test_partition_total_posts_conserved():
    posts = [make_post(f"p{i}", day=i % 4, second=i) for i in range(37)]
    snap = build_snapshot(posts)
    part = corpus.partition_by_day(snap)
    assert sum(len(v) for v in part.posts_by_day.values()) == 37


# --- macro activity ---


def test_macro_new_users_first_post_rule():
    posts = [make_post("p1", author="a", day=0), make_post("p2", author="a", day=1)]
    snap = build_snapshot(posts)
    series = corpus.macro_activity(snap, corpus.partition_by_day(snap))
    assert series.new_posting_users == [1, 0]
    assert series.unique_posting_users == [1, 1]


def test_macro_twenty_post_fixture_hand_tally():
    # Hand-enumerated fixture: day0 = 12 posts (3 authors, 2 submolts),
    # day1 = 8 posts (2 authors incl. 1 new, 1 submolt).
    posts = []
    for i in range(12):
        posts.append(
            make_post(
                f"d0_{i:02d}",
                author=["a", "b", "c"][i % 3],
                day=0,
                second=i,
                submolt=["s1", "s2"][i % 2],
                score=i - 3,  # some negatives
            )
        )
    for i in range(8):
        posts.append(
            make_post(
                f"d1_{i:02d}",
                author=["a", "d"][i % 2],
                day=1,
                second=i,
                submolt="s1",
                score=2,
            )
        )
    comments = [make_comment(f"c{i}", "d0_00", day=1, second=100 + i) for i in range(5)]
    snap = build_snapshot(posts, comments)
    series = corpus.macro_activity(snap, corpus.partition_by_day(snap))
    assert series.post_volume == [12, 8]
    assert series.unique_posting_users == [3, 2]
    assert series.new_posting_users == [3, 1]
    assert series.active_submolts == [2, 1]
    assert series.posts_per_active_submolt == [6.0, 8.0]
    assert series.total_comments == [0, 5]
    # positive parts: day0 scores are -3..8 -> sum(max(s,0)) = 0+0+0+0+1+..+8 = 36
    assert series.total_upvotes == [sum(max(i - 3, 0) for i in range(12)), 16]


def test_macro_sums_match_totals():
    posts = [make_post(f"p{i}", author=f"a{i % 5}", day=i % 3, second=i) for i in range(30)]
    snap = build_snapshot(posts)
    series = corpus.macro_activity(snap, corpus.partition_by_day(snap))
    assert sum(series.post_volume) == 30
    assert sum(series.new_posting_users) == 5
