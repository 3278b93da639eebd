import math

import numpy as np
import pytest

from socdiag import corpus, influence
from socdiag.embedding import SemanticFeatures, store_from_vectors

from conftest import BASE_EPOCH, build_snapshot, make_comment, make_post, random_orthogonal


def _society(agent_posts, comments):
    posts = []
    vectors = {}
    for agent, entries in agent_posts.items():
        for i, (day, second, vec) in enumerate(entries):
            pid = f"{agent}{i:03d}"
            posts.append(make_post(pid, author=agent, day=day, second=second))
            vectors[pid] = np.asarray(vec, dtype=np.float64)
    snap = build_snapshot(posts, comments)
    return snap, store_from_vectors(vectors)


def _spread(agent, n, vec, start_day=0):
    """n posts, one per day, constant embedding."""
    return {agent: [(start_day + i, 10, vec) for i in range(n)]}


# --- collect_events ---


def test_collect_event_windows_around_median_comment():
    entries = {"A": [(i, 10, [1, 0]) for i in range(50)]}
    entries.update(_spread("B", 1, [0, 1], start_day=25))
    comments = [make_comment("c1", "B000", author="A", day=25, second=50)]
    snap, store = _society(entries, comments)
    events = influence.collect_events(snap, w=20)
    assert len(events) == 1
    ev = events[0]
    assert len(ev.pre_ids) == 20 and len(ev.post_ids) == 20
    # A's day-25 post (second 10) precedes the comment (second 50)
    assert ev.pre_ids[-1] == "A025"
    assert ev.post_ids[0] == "A026"
    assert ev.target_post_id == "B000"


def test_collect_no_events_for_thin_history():
    entries = {"A": [(i, 10, [1, 0]) for i in range(10)]}
    entries.update(_spread("B", 1, [0, 1], start_day=5))
    comments = [make_comment("c1", "B000", author="A", day=5, second=50)]
    snap, store = _society(entries, comments)
    assert influence.collect_events(snap, w=20) == []


def test_collect_excludes_self_comments():
    entries = {"A": [(i, 10, [1, 0]) for i in range(50)]}
    comments = [make_comment("c1", "A025", author="A", day=25, second=50)]
    snap, store = _society(entries, comments)
    assert influence.collect_events(snap, w=20) == []


def test_collect_dedupes_repeat_comments_to_earliest():
    entries = {"A": [(i, 10, [1, 0]) for i in range(50)]}
    entries.update(_spread("B", 1, [0, 1], start_day=25))
    comments = [
        make_comment("c1", "B000", author="A", day=25, second=50),
        make_comment("c2", "B000", author="A", day=26, second=50),
    ]
    snap, store = _society(entries, comments)
    events = influence.collect_events(snap, w=20)
    assert len(events) == 1
    assert events[0].time == BASE_EPOCH + 25 * 86400 + 50


def test_collect_windows_strictly_around_t():
    # posts at the exact comment second are excluded from both windows
    entries = {"A": [(0, s, [1, 0]) for s in range(100, 160)]}
    entries.update({"B": [(0, 1, [0, 1])]})
    comments = [make_comment("c1", "B000", author="A", day=0, second=130)]
    snap, store = _society(entries, comments)
    (ev,) = influence.collect_events(snap, w=20)
    assert "A030" not in ev.pre_ids and "A030" not in ev.post_ids  # second == 130


# --- interaction_influence ---


def test_influence_identical_windows_zero_delta():
    entries = {"A": [(i, 10, [0.6, 0.8]) for i in range(50)]}
    entries.update(_spread("B", 1, [0, 1], start_day=25))
    comments = [make_comment("c1", "B000", author="A", day=25, second=50)]
    snap, store = _society(entries, comments)
    (ev,) = influence.collect_events(snap, w=20)
    rec = influence.interaction_influence(ev, SemanticFeatures(store))
    assert rec.delta == pytest.approx(0.0, abs=1e-6)


def test_influence_orthogonal_target_zero_everything():
    entries = {"A": [(i, 10, [1, 0]) for i in range(50)]}
    entries.update(_spread("B", 1, [0, 1], start_day=25))
    comments = [make_comment("c1", "B000", author="A", day=25, second=50)]
    snap, store = _society(entries, comments)
    (ev,) = influence.collect_events(snap, w=20)
    rec = influence.interaction_influence(ev, SemanticFeatures(store))
    assert rec.s_pre == pytest.approx(0.0, abs=1e-7)
    assert rec.s_post == pytest.approx(0.0, abs=1e-7)
    assert rec.delta == pytest.approx(0.0, abs=1e-7)


def test_influence_hand_arithmetic():
    # pre at e0, post at e1, target e1 -> delta = 1 - 0 = 1
    entries = {"A": [(i, 10, [1, 0]) for i in range(20)] + [(20 + i, 10, [0, 1]) for i in range(20)]}
    entries = {"A": entries["A"]}
    entries.update(_spread("B", 1, [0, 1], start_day=19))
    comments = [make_comment("c1", "B000", author="A", day=19, second=70000)]
    snap, store = _society(entries, comments)
    (ev,) = influence.collect_events(snap, w=20)
    rec = influence.interaction_influence(ev, SemanticFeatures(store))
    assert rec.s_pre == pytest.approx(0.0, abs=1e-7)
    assert rec.s_post == pytest.approx(1.0, abs=1e-6)
    assert rec.delta == pytest.approx(1.0, abs=1e-6)


def test_influence_swap_windows_negates_delta():
    rng = np.random.default_rng(12)
    entries = {"A": [(i, 10, list(rng.standard_normal(4))) for i in range(50)]}
    entries.update({"B": [(25, 1, list(rng.standard_normal(4)))]})
    comments = [make_comment("c1", "B000", author="A", day=25, second=50)]
    snap, store = _society(entries, comments)
    (ev,) = influence.collect_events(snap, w=20)
    feats = SemanticFeatures(store)
    rec = influence.interaction_influence(ev, feats)
    swapped = influence.InteractionEvent(
        agent=ev.agent,
        time=ev.time,
        target_post_id=ev.target_post_id,
        pre_ids=ev.post_ids,
        post_ids=ev.pre_ids,
    )
    rec2 = influence.interaction_influence(swapped, feats)
    assert rec2.delta == pytest.approx(-rec.delta, abs=1e-12)


def test_influence_orthogonal_transform_invariance():
    rng = np.random.default_rng(13)
    entries = {"A": [(i, 10, list(rng.standard_normal(5))) for i in range(50)]}
    entries.update({"B": [(25, 1, list(rng.standard_normal(5)))]})
    comments = [make_comment("c1", "B000", author="A", day=25, second=50)]
    snap, store = _society(entries, comments)
    (ev,) = influence.collect_events(snap, w=20)
    q = random_orthogonal(5, seed=6)
    rotated = store_from_vectors({pid: q @ store.vector(pid).astype(np.float64) for pid in store.ids})
    r1 = influence.interaction_influence(ev, SemanticFeatures(store))
    r2 = influence.interaction_influence(ev, SemanticFeatures(rotated))
    assert r1.delta == pytest.approx(r2.delta, abs=1e-6)


# --- random baseline ---


def _baseline_fixture(n_events=40, seed=0):
    rng = np.random.default_rng(seed)
    entries = {}
    comments = []
    # commenting agent with a long history
    entries["A"] = [(i, 10, list(rng.standard_normal(3))) for i in range(120)]
    # target agents posting daily
    for b in range(3):
        entries[f"B{b}"] = [(i, 20 + b, list(rng.standard_normal(3))) for i in range(120)]
    cid = 0
    for day in range(30, 30 + n_events):
        comments.append(
            make_comment(f"c{cid:03d}", f"B{day % 3}{day:03d}", author="A", day=day, second=1000)
        )
        cid += 1
    snap, store = _society(entries, comments)
    part = corpus.partition_by_day(snap)
    events = influence.collect_events(snap, w=20)
    return snap, part, store, events


def test_baseline_prob_zero_empty():
    snap, part, store, events = _baseline_fixture()
    records, skipped = influence.random_baseline(
        events, snap, part, SemanticFeatures(store), sample_prob=0.0, seed=1
    )
    assert records == []


def test_baseline_prob_one_forced_draw_is_eligible():
    snap, part, store, events = _baseline_fixture()
    records, skipped = influence.random_baseline(
        events, snap, part, SemanticFeatures(store), sample_prob=1.0, seed=1
    )
    assert len(records) == len(events) - skipped
    author_of = {p.id: p.author for p in snap.posts}
    for rec in records:
        assert rec.is_baseline
        assert author_of[rec.target_post_id] != rec.agent


def test_baseline_deterministic_given_seed():
    snap, part, store, events = _baseline_fixture()
    feats = SemanticFeatures(store)
    r1, _ = influence.random_baseline(events, snap, part, feats, sample_prob=0.5, seed=3)
    r2, _ = influence.random_baseline(events, snap, part, feats, sample_prob=0.5, seed=3)
    assert [(r.agent, r.target_post_id, r.delta) for r in r1] == [
        (r.agent, r.target_post_id, r.delta) for r in r2
    ]


def test_baseline_count_within_binomial_bound():
    # ~1000 events at prob 0.3: expect 300 +/- 3*sigma (sigma ~= 14.5)
    rng = np.random.default_rng(99)
    entries = {}
    comments = []
    for a in range(10):
        entries[f"A{a}"] = [(i, 10 + a, list(rng.standard_normal(3))) for i in range(150)]
    cid = 0
    for day in range(25, 125):
        for a in range(10):
            target_agent = f"A{(a + 1) % 10}"
            comments.append(
                make_comment(
                    f"c{cid:04d}", f"{target_agent}{day:03d}", author=f"A{a}", day=day, second=50000
                )
            )
            cid += 1
    snap, store = _society(entries, comments)
    part = corpus.partition_by_day(snap)
    events = influence.collect_events(snap, w=20)
    assert len(events) == 1000
    records, _ = influence.random_baseline(
        events, snap, part, SemanticFeatures(store), sample_prob=0.3, seed=5
    )
    sigma = math.sqrt(1000 * 0.3 * 0.7)
    assert abs(len(records) - 300) <= 3 * sigma


def test_pull_regime_orders_observed_above_baseline():
    # Societies where commenting pulls the agent's subsequent posts toward
    # the target (pull > 0) must show mean observed delta above the
    # baseline mean; a pull of 0 must not.
    def society_with_pull(pull, seed=21):
        rng = np.random.default_rng(seed)
        n_agents, days, dim = 12, 60, 8
        personas = rng.standard_normal((n_agents, dim))
        personas /= np.linalg.norm(personas, axis=1, keepdims=True)
        entries = {f"ag{a:02d}": [] for a in range(n_agents)}
        comments = []
        vectors = {}
        posts = []
        serial = 0
        cid = 0
        post_of_day = {}
        for day in range(days):
            todays = []
            for a in range(n_agents):
                pid = f"p{serial:05d}"
                serial += 1
                vec = personas[a] + 0.05 * rng.standard_normal(dim)
                posts.append(make_post(pid, author=f"ag{a:02d}", day=day, second=a * 100))
                vectors[pid] = vec
                todays.append((pid, a))
            post_of_day[day] = todays
            # each agent comments on one random other-agent post, then is
            # pulled toward it
            for a in range(n_agents):
                others = [(pid, who) for pid, who in todays if who != a]
                pid, _ = others[int(rng.integers(len(others)))]
                comments.append(
                    make_comment(f"c{cid:05d}", pid, author=f"ag{a:02d}", day=day, second=a * 100 + 50)
                )
                cid += 1
                if pull > 0:
                    target_vec = vectors[pid] / np.linalg.norm(vectors[pid])
                    personas[a] = personas[a] + pull * (target_vec - personas[a])
                    personas[a] /= np.linalg.norm(personas[a])
        snap = build_snapshot(posts, comments)
        store = store_from_vectors(vectors)
        part = corpus.partition_by_day(snap)
        return snap, part, store

    def means(snap, part, store):
        feats = SemanticFeatures(store)
        events = influence.collect_events(snap, w=20)
        observed = [influence.interaction_influence(e, feats).delta for e in events]
        baseline, _ = influence.random_baseline(events, snap, part, feats, sample_prob=0.5, seed=2)
        return float(np.mean(observed)), float(np.mean([r.delta for r in baseline]))

    obs_pull, base_pull = means(*society_with_pull(0.25))
    assert obs_pull > base_pull
    obs_null, base_null = means(*society_with_pull(0.0))
    assert abs(obs_null - base_null) < abs(obs_pull - base_pull)
