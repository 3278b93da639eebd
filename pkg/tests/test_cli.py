import json
import os

import pytest

from socdiag import cli, synthsoc

from conftest import build_snapshot, make_comment, make_post


def run(*argv) -> int:
    return cli.main(list(argv))


@pytest.fixture(scope="module")
def society_dir(tmp_path_factory):
    outdir = tmp_path_factory.mktemp("society")
    config = synthsoc.RegimeConfig(
        regime="feedback_adaptive",
        agents=30,
        days=14,
        posts_per_agent_per_day=2.0,
        comments_per_agent_per_day=1.5,
        dim=8,
        adaptation_rate=0.4,
        seed=5,
    )
    synthsoc.write_society(synthsoc.generate(config), outdir)
    return outdir


def test_no_arguments_usage_exit_1(capsys):
    assert run() == 1
    assert "usage" in capsys.readouterr().err.lower()


def test_unknown_flag_exit_1(capsys):
    assert run("stats", "--nope") == 1


def test_missing_file_exit_2(tmp_path, capsys):
    assert run("stats", "--posts", str(tmp_path / "missing.jsonl"), "--out", str(tmp_path / "o")) == 2
    assert "missing.jsonl" in capsys.readouterr().err


def test_stats_writes_activity_totals_manifest(society_dir, tmp_path):
    out = tmp_path / "stats"
    code = run(
        "stats",
        "--posts", str(society_dir / "posts.jsonl"),
        "--comments", str(society_dir / "comments.jsonl"),
        "--out", str(out),
    )
    assert code == 0
    assert (out / "activity.csv").exists()
    totals = json.loads((out / "totals.json").read_text())
    assert totals["total_posts"] > 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "stats"
    assert len(manifest["inputs"]) == 2
    assert manifest["tool"]["name"] == "socdiag"


def test_stats_expected_totals_delta(society_dir, tmp_path):
    out = tmp_path / "stats"
    run(
        "stats",
        "--posts", str(society_dir / "posts.jsonl"),
        "--out", str(out),
        "--expect-posts", "100",
    )
    totals = json.loads((out / "totals.json").read_text())
    assert totals["total_posts_expected"] == 100
    assert totals["total_posts_delta"] == totals["total_posts"] - 100


def test_simulate_threads_and_seed_byte_identical(tmp_path):
    args = ["simulate", "--regime", "inert_turnover", "--agents", "25", "--days", "6",
            "--rate", "1.5", "--dim", "8", "--seed", "9"]
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert run(*args, "--out", str(out1), "--threads", "1") == 0
    assert run(*args, "--out", str(out2), "--threads", "8") == 0
    for name in ("posts.jsonl", "comments.jsonl", "embeddings.mbem", "truth.json", "manifest.json"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name


def test_semantic_threads_byte_identical(society_dir, tmp_path):
    base = [
        "semantic", "all",
        "--posts", str(society_dir / "posts.jsonl"),
        "--embeddings", str(society_dir / "embeddings.mbem"),
        "--k", "5",
    ]
    out1, out2 = tmp_path / "s1", tmp_path / "s2"
    assert run(*base, "--out", str(out1), "--threads", "1") == 0
    assert run(*base, "--out", str(out2), "--threads", "8") == 0
    for name in (
        "centroid_similarity.csv",
        "pairwise_similarity.csv",
        "density_samples.csv",
        "density_jsd.csv",
    ):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name


def test_probes_generate_deterministic(tmp_path):
    out1, out2 = tmp_path / "p1", tmp_path / "p2"
    assert run("probes", "generate", "--out", str(out1)) == 0
    assert run("probes", "generate", "--out", str(out2)) == 0
    assert (out1 / "probes.jsonl").read_bytes() == (out2 / "probes.jsonl").read_bytes()
    lines = (out1 / "probes.jsonl").read_text().splitlines()
    assert len(lines) == 45
    first = json.loads(lines[0])
    assert set(first) == {"id", "submolt", "title", "content"}


def test_probes_classify_pipeline(tmp_path):
    from socdiag import corpus as corpus_mod

    posts = [make_post("p1", author="meridian_7", day=0)]
    snapshot = build_snapshot(posts)
    posts_text, comments_text = corpus_mod.serialize_snapshot(snapshot)
    (tmp_path / "posts.jsonl").write_text(posts_text)
    probes_out = tmp_path / "probes"
    assert run("probes", "generate", "--out", str(probes_out)) == 0
    probe_id = json.loads((probes_out / "probes.jsonl").read_text().splitlines()[0])["id"]
    responses = [
        {
            "id": "r1",
            "probe_id": probe_id,
            "author": "someone",
            "created_at": "2026-01-28T10:00:00Z",
            "content": "definitely follow @meridian_7",
        }
    ]
    (tmp_path / "responses.jsonl").write_text(
        "\n".join(json.dumps(r) for r in responses) + "\n"
    )
    out = tmp_path / "classified"
    code = run(
        "probes", "classify",
        "--probes", str(probes_out / "probes.jsonl"),
        "--responses", str(tmp_path / "responses.jsonl"),
        "--posts", str(tmp_path / "posts.jsonl"),
        "--out", str(out),
    )
    assert code == 0
    summary = json.loads((out / "probe_summary.json").read_text())
    assert summary["breakdown"] == [44, 0, 0, 1]
    assert summary["distinct_targets"] == 1


def test_full_pipeline_report_has_nine_sections(society_dir, tmp_path):
    out = tmp_path / "run"
    posts = str(society_dir / "posts.jsonl")
    comments = str(society_dir / "comments.jsonl")
    store = str(society_dir / "embeddings.mbem")
    assert run("stats", "--posts", posts, "--comments", comments, "--out", str(out)) == 0
    assert run("lexical", "--posts", posts, "--out", str(out)) == 0
    assert run("semantic", "all", "--posts", posts, "--embeddings", store, "--k", "5", "--out", str(out)) == 0
    assert run("drift", "--posts", posts, "--embeddings", store, "--out", str(out)) == 0
    assert run("feedback", "--posts", posts, "--embeddings", store, "--out", str(out)) == 0
    assert (
        run(
            "influence",
            "--posts", posts, "--comments", comments, "--embeddings", store,
            "--w", "5", "--out", str(out),
        )
        == 0
    )
    assert run("graph", "--posts", posts, "--comments", comments, "--mode", "both", "--out", str(out)) == 0

    # probes: generate + classify with no responses
    assert run("probes", "generate", "--out", str(out)) == 0
    (out / "responses.jsonl").write_text("")
    assert (
        run(
            "probes", "classify",
            "--probes", str(out / "probes.jsonl"),
            "--responses", str(out / "responses.jsonl"),
            "--posts", posts,
            "--out", str(out),
        )
        == 0
    )

    assert run("report", "--dir", str(out)) == 0
    summary = json.loads((out / "report" / "summary.json").read_text())
    assert set(summary["sections"]) == {
        "activity",
        "lexical_turnover",
        "semantic_distribution",
        "cluster_tightening",
        "agent_drift",
        "feedback_adaptation",
        "interaction_influence",
        "influence_structure",
        "probing",
    }

    # report on a single-module directory has only that section
    solo = tmp_path / "solo"
    assert run("lexical", "--posts", posts, "--out", str(solo)) == 0
    assert run("report", "--dir", str(solo)) == 0
    solo_summary = json.loads((solo / "report" / "summary.json").read_text())
    assert set(solo_summary["sections"]) == {"lexical_turnover"}

    # idempotent re-run
    before = (out / "report" / "summary.json").read_bytes()
    assert run("report", "--dir", str(out)) == 0
    assert (out / "report" / "summary.json").read_bytes() == before


def test_report_empty_dir_exit_2(tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    assert run("report", "--dir", str(empty)) == 2


def test_ingest_roundtrip_outputs(society_dir, tmp_path):
    out = tmp_path / "ingested"
    assert (
        run(
            "ingest",
            "--posts", str(society_dir / "posts.jsonl"),
            "--comments", str(society_dir / "comments.jsonl"),
            "--out", str(out),
        )
        == 0
    )
    # serialized snapshot re-ingests identically (files were generator-sorted)
    assert (out / "posts.jsonl").read_bytes() == (society_dir / "posts.jsonl").read_bytes()
    info = json.loads((out / "ingest.json").read_text())
    assert info["malformed_posts"] == 0


def test_simulate_preset(tmp_path):
    out = tmp_path / "preset"
    assert run("simulate", "--preset", "inert_turnover", "--out", str(out)) == 0
    truth = json.loads((out / "truth.json").read_text())
    assert truth["regime"] == "inert_turnover"
    assert truth["config"]["agents"] == 500
