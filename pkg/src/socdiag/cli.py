"""Single command-line entry point.

Subcommands: ingest, stats, lexical, semantic, drift, feedback, influence,
graph, probes, simulate, report. Every run writes its outputs plus a
manifest.json (input hashes, parameters, tool version) into the output
directory, using write-then-rename so failures never leave partial files.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__, corpus, drift, feedback, graph, influence, lexical
from . import probing, semantic, synthsoc
from .embedding import (
    SemanticFeatures,
    SyntacticFeatures,
    fallback_store,
    load_store,
)
from .util import DataError, atomic_write_text, fmt_float, parse_utc, sha256_file

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _csv(path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for cell in row:
            if isinstance(cell, float):
                cells.append(fmt_float(cell))
            elif cell is None:
                cells.append("")
            else:
                cells.append(str(cell))
        lines.append(",".join(cells))
    atomic_write_text(path, "\n".join(lines) + "\n")


def _write_manifest(outdir, command: str, params: dict, inputs: list) -> None:
    manifest = {
        "command": command,
        "parameters": {k: params[k] for k in sorted(params)},
        "inputs": {
            str(p): sha256_file(p) for p in sorted(str(x) for x in inputs if x)
        },
        "tool": {"name": "socdiag", "version": __version__},
    }
    atomic_write_text(
        os.path.join(outdir, "manifest.json"),
        json.dumps(manifest, sort_keys=True, indent=2) + "\n",
    )


def _ensure_outdir(args) -> str:
    outdir = args.out
    os.makedirs(outdir, exist_ok=True)
    return outdir


def _add_corpus_args(p) -> None:
    p.add_argument("--posts", required=True, help="posts JSONL file")
    p.add_argument("--comments", default=None, help="comments JSONL file")
    p.add_argument("--spam-threshold", type=int, default=1000)


def _add_store_args(p) -> None:
    p.add_argument("--embeddings", default=None, help="embedding store path")
    p.add_argument("--format", dest="embeddings_format", choices=("mbem", "csv"), default="mbem")
    p.add_argument("--fallback-dim", type=int, default=384)
    p.add_argument("--fallback-seed", type=int, default=0)
    p.add_argument("--allow-missing", action="store_true")


def _load_corpus(args):
    if not os.path.exists(args.posts):
        raise DataError(f"posts file not found: {args.posts}")
    if args.comments and not os.path.exists(args.comments):
        raise DataError(f"comments file not found: {args.comments}")
    snapshot, stats = corpus.ingest(args.posts, args.comments)
    snapshot, removed = corpus.apply_spam_filter(snapshot, args.spam_threshold)
    stats.spam_removed = removed
    return snapshot, stats


def _load_embedding_store(args, snapshot):
    if args.embeddings:
        if not os.path.exists(args.embeddings):
            raise DataError(f"embedding store not found: {args.embeddings}")
        return load_store(args.embeddings, args.embeddings_format)
    print(
        f"note: no --embeddings given; using deterministic fallback embeddings "
        f"(dim={args.fallback_dim}, seed={args.fallback_seed})",
        file=sys.stderr,
    )
    return fallback_store(
        {p.id: corpus.post_text(p) for p in snapshot.posts},
        dim=args.fallback_dim,
        seed=args.fallback_seed,
    )


def _corpus_inputs(args) -> list:
    return [args.posts, args.comments, getattr(args, "embeddings", None)]


def _feature_spaces(args, snapshot, store) -> list:
    spaces = []
    for name in args.features.split(","):
        name = name.strip()
        if name == "semantic":
            spaces.append(SemanticFeatures(store))
        elif name == "syntactic":
            spaces.append(SyntacticFeatures(snapshot.posts, dim=args.syntactic_dim))
        elif name:
            raise UsageError(f"unknown feature space: {name}")
    if not spaces:
        raise UsageError("no feature spaces selected")
    return spaces


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------


def cmd_ingest(args) -> int:
    outdir = _ensure_outdir(args)
    snapshot, stats = _load_corpus(args)
    posts_text, comments_text = corpus.serialize_snapshot(snapshot)
    atomic_write_text(os.path.join(outdir, "posts.jsonl"), posts_text)
    atomic_write_text(os.path.join(outdir, "comments.jsonl"), comments_text)
    atomic_write_text(
        os.path.join(outdir, "ingest.json"),
        json.dumps(
            {
                "posts": len(snapshot.posts),
                "comments": len(snapshot.comments),
                "authors": len(snapshot.author_registry),
                "malformed_posts": stats.malformed_posts,
                "malformed_comments": stats.malformed_comments,
                "dangling_comments": stats.dangling_comments,
                "spam_removed": stats.spam_removed,
            },
            sort_keys=True,
            indent=2,
        )
        + "\n",
    )
    _write_manifest(outdir, "ingest", {"spam_threshold": args.spam_threshold}, _corpus_inputs(args))
    return EXIT_OK


def cmd_stats(args) -> int:
    outdir = _ensure_outdir(args)
    snapshot, stats = _load_corpus(args)
    partition = corpus.partition_by_day(snapshot)
    series = corpus.macro_activity(snapshot, partition)
    _csv(
        os.path.join(outdir, "activity.csv"),
        [
            "day",
            "post_volume",
            "unique_posting_users",
            "new_posting_users",
            "active_submolts",
            "posts_per_active_submolt",
            "total_comments",
            "total_upvotes",
        ],
        series.rows(),
    )
    totals = {
        "total_posts": len(snapshot.posts),
        "total_comments": len(snapshot.comments),
        "unique_post_authors": len({p.author for p in snapshot.posts}),
        "unique_comment_authors": len({c.author for c in snapshot.comments}),
        "spam_removed": stats.spam_removed,
    }
    posts_with_comments = len(
        {c.post_id for c in snapshot.comments} & snapshot.post_ids
    )
    totals["posts_with_comments"] = posts_with_comments
    if snapshot.posts:
        totals["avg_comments_per_post"] = round(len(snapshot.comments) / len(snapshot.posts), 4)
    for name, expected in (
        ("total_posts", args.expect_posts),
        ("total_comments", args.expect_comments),
        ("unique_post_authors", args.expect_post_authors),
    ):
        if expected is not None:
            totals[f"{name}_expected"] = expected
            totals[f"{name}_delta"] = totals[name] - expected
    atomic_write_text(
        os.path.join(outdir, "totals.json"), json.dumps(totals, sort_keys=True, indent=2) + "\n"
    )
    _write_manifest(outdir, "stats", {"spam_threshold": args.spam_threshold}, _corpus_inputs(args))
    return EXIT_OK


def cmd_lexical(args) -> int:
    outdir = _ensure_outdir(args)
    snapshot, _ = _load_corpus(args)
    partition = corpus.partition_by_day(snapshot)
    timeline = lexical.build_timeline(
        snapshot, partition, n_max=args.n_max, min_global_frequency=args.min_freq
    )
    series = lexical.birth_death_series(timeline)
    _csv(
        os.path.join(outdir, "birthdeath.csv"),
        ["day", "n", "birth_rate", "death_rate", "active", "born", "dead"],
        series.rows(),
    )
    _write_manifest(
        outdir,
        "lexical",
        {"n_max": args.n_max, "min_freq": args.min_freq, "spam_threshold": args.spam_threshold},
        _corpus_inputs(args),
    )
    return EXIT_OK


def _write_matrix(path, matrix: semantic.SimilarityMatrix) -> None:
    header = ["day"] + [str(d) for d in matrix.days]
    rows = ([str(d)] + list(matrix.values[i]) for i, d in enumerate(matrix.days))
    _csv(path, header, rows)


def cmd_semantic(args) -> int:
    outdir = _ensure_outdir(args)
    snapshot, _ = _load_corpus(args)
    partition = corpus.partition_by_day(snapshot)
    store = _load_embedding_store(args, snapshot)
    what = args.what
    wanted = ("centroid", "pairwise", "density", "jsd") if what == "all" else (what,)

    if "centroid" in wanted:
        centroids = semantic.daily_centroids(partition, store, args.allow_missing)
        matrix = semantic.centroid_similarity(centroids)
        _write_matrix(os.path.join(outdir, "centroid_similarity.csv"), matrix)
    if "pairwise" in wanted:
        matrix = semantic.pairwise_similarity(partition, store, args.allow_missing)
        _write_matrix(os.path.join(outdir, "pairwise_similarity.csv"), matrix)
    if "density" in wanted or "jsd" in wanted:
        density = semantic.local_density(
            partition, store, k=args.k, allow_missing=args.allow_missing, threads=args.threads
        )
        if "density" in wanted:
            rows = []
            for d in density.days:
                for value in density.samples[d]:
                    rows.append([str(d), float(value)])
            _csv(os.path.join(outdir, "density_samples.csv"), ["day", "s_k"], rows)
        if "jsd" in wanted:
            shifts = semantic.density_shift(density, bins=args.bins)
            _csv(
                os.path.join(outdir, "density_jsd.csv"),
                ["day", "next_day", "jsd"],
                ([str(a), str(b), v] for a, b, v in shifts.entries),
            )
    _write_manifest(
        outdir,
        "semantic",
        {
            "what": what,
            "k": args.k,
            "bins": args.bins,
            "spam_threshold": args.spam_threshold,
            "fallback_dim": args.fallback_dim,
            "fallback_seed": args.fallback_seed,
        },
        _corpus_inputs(args),
    )
    return EXIT_OK


def cmd_drift(args) -> int:
    outdir = _ensure_outdir(args)
    snapshot, _ = _load_corpus(args)
    store = _load_embedding_store(args, snapshot)
    result = drift.agent_drift(
        snapshot, store, min_posts=args.min_posts, leave_one_out=args.leave_one_out
    )
    _csv(
        os.path.join(outdir, "drift.csv"),
        ["agent", "post_count", "drift_magnitude", "consistency", "toward_center", "degenerate"],
        (
            [
                r.agent,
                r.post_count,
                r.drift_magnitude,
                r.consistency,
                r.toward_center,
                int(r.degenerate),
            ]
            for r in result.records
        ),
    )
    edges = [int(x) for x in args.buckets.split(",")] if args.buckets else [args.min_posts]
    cohorts = drift.drift_by_activity(result.records, edges)
    rows = []
    for c in cohorts:
        for metric, stats in sorted(c.stats.items()):
            rows.append(
                [c.label, c.count, metric]
                + [stats[k] for k in ("mean", "q05", "q25", "q50", "q75", "q95")]
            )
    _csv(
        os.path.join(outdir, "drift_cohorts.csv"),
        ["bucket", "count", "metric", "mean", "q05", "q25", "q50", "q75", "q95"],
        rows,
    )
    _write_manifest(
        outdir,
        "drift",
        {
            "min_posts": args.min_posts,
            "buckets": args.buckets,
            "leave_one_out": args.leave_one_out,
            "spam_threshold": args.spam_threshold,
            "fallback_dim": args.fallback_dim,
            "fallback_seed": args.fallback_seed,
        },
        _corpus_inputs(args),
    )
    return EXIT_OK


def cmd_feedback(args) -> int:
    outdir = _ensure_outdir(args)
    snapshot, _ = _load_corpus(args)
    store = _load_embedding_store(args, snapshot)
    spaces = _feature_spaces(args, snapshot, store)
    records = feedback.feedback_run(
        snapshot, spaces, w=args.w, quantile=args.quantile, n_perms=args.perms, seed=args.seed
    )
    _csv(
        os.path.join(outdir, "np.csv"),
        [
            "agent",
            "window_index",
            "feature_space",
            "delta_top",
            "delta_bot",
            "net_progress",
            "baseline_np",
            "degenerate",
        ],
        (
            [
                r.agent,
                r.window_index,
                r.feature_space,
                r.delta_top,
                r.delta_bot,
                r.net_progress,
                "|".join(fmt_float(v) for v in r.baseline_np),
                int(r.degenerate),
            ]
            for r in records
        ),
    )
    _write_manifest(
        outdir,
        "feedback",
        {
            "w": args.w,
            "quantile": args.quantile,
            "perms": args.perms,
            "seed": args.seed,
            "features": args.features,
            "spam_threshold": args.spam_threshold,
            "fallback_dim": args.fallback_dim,
            "fallback_seed": args.fallback_seed,
        },
        _corpus_inputs(args),
    )
    return EXIT_OK


def cmd_influence(args) -> int:
    outdir = _ensure_outdir(args)
    snapshot, _ = _load_corpus(args)
    partition = corpus.partition_by_day(snapshot)
    store = _load_embedding_store(args, snapshot)
    spaces = _feature_spaces(args, snapshot, store)
    records, counters = influence.influence_run(
        snapshot, partition, spaces, w=args.w, sample_prob=args.sample_prob, seed=args.seed
    )
    _csv(
        os.path.join(outdir, "influence.csv"),
        ["agent", "time", "target_post_id", "feature_space", "s_pre", "s_post", "delta", "is_baseline"],
        (
            [r.agent, r.time, r.target_post_id, r.feature_space, r.s_pre, r.s_post, r.delta, int(r.is_baseline)]
            for r in records
        ),
    )
    atomic_write_text(
        os.path.join(outdir, "influence_counters.json"),
        json.dumps(counters, sort_keys=True, indent=2) + "\n",
    )
    _write_manifest(
        outdir,
        "influence",
        {
            "w": args.w,
            "sample_prob": args.sample_prob,
            "seed": args.seed,
            "features": args.features,
            "spam_threshold": args.spam_threshold,
            "fallback_dim": args.fallback_dim,
            "fallback_seed": args.fallback_seed,
        },
        _corpus_inputs(args),
    )
    return EXIT_OK


def cmd_graph(args) -> int:
    outdir = _ensure_outdir(args)
    snapshot, _ = _load_corpus(args)
    partition = corpus.partition_by_day(snapshot)
    ks = tuple(int(k) for k in args.topk.split(","))
    modes = ("independent", "cumulative") if args.mode == "both" else (args.mode,)
    for mode in modes:
        graphs, build_stats = graph.build_graphs(snapshot, partition, mode=mode)
        results = []
        reports = []
        pr_rows = []
        for g in graphs:
            if g.node_count == 0:
                reports.append(None)
                results.append(graph.PageRankResult(day=g.day, scores={}, iterations=0, residual=0.0))
                continue
            result = graph.pagerank(g, damping=args.damping)
            results.append(result)
            reports.append(graph.detect_supernodes(result))
            for agent, score in sorted(result.scores.items()):
                pr_rows.append([str(g.day), agent, score])
        _csv(os.path.join(outdir, f"{mode}_pagerank.csv"), ["day", "agent", "score"], pr_rows)

        conc = graph.concentration_series(results, reports, ks)
        _csv(
            os.path.join(outdir, f"{mode}_topk_mass.csv"),
            ["day"] + [f"mass_top{k}" for k in sorted(ks)] + ["supernode_count", "jaccard_prev"],
            (
                [str(c.day)]
                + [c.mass[k] for k in sorted(ks)]
                + [c.supernode_count if c.supernode_count is not None else "",
                   c.jaccard_prev if c.jaccard_prev is not None else ""]
                for c in conc
            ),
        )
        _csv(
            os.path.join(outdir, f"{mode}_supernodes.csv"),
            ["day", "k_star", "max_gap", "members"],
            (
                [str(r.day), r.k_star, r.max_gap, "|".join(r.members)]
                for r in reports
                if r is not None
            ),
        )
        _csv(
            os.path.join(outdir, f"{mode}_persistence.csv"),
            ["day", "next_day", "jaccard"],
            (
                [str(a), str(b), v]
                for a, b, v in graph.persistence([r for r in reports if r is not None])
            ),
        )
        final = graphs[-1] if graphs else None
        if final is not None:
            in_rows, out_rows = graph.degree_tables(final, top_n=args.top_n)
            _csv(os.path.join(outdir, f"{mode}_degrees_in.csv"), ["agent", "weighted_in_degree"], in_rows)
            _csv(os.path.join(outdir, f"{mode}_degrees_out.csv"), ["agent", "weighted_out_degree"], out_rows)
        _csv(
            os.path.join(outdir, f"{mode}_stats.csv"),
            ["period", "nodes", "edges", "total_weight"],
            ([str(d), n, e, w] for d, n, e, w in graph.graph_stats_rows(graphs)),
        )
    _write_manifest(
        outdir,
        "graph",
        {
            "mode": args.mode,
            "damping": args.damping,
            "topk": args.topk,
            "top_n": args.top_n,
            "spam_threshold": args.spam_threshold,
        },
        _corpus_inputs(args),
    )
    return EXIT_OK


def cmd_probes(args) -> int:
    outdir = _ensure_outdir(args)
    if args.probes_command == "generate":
        atomic_write_text(
            os.path.join(outdir, "probes.jsonl"), probing.probes_to_jsonl(probing.generate_probes())
        )
        _write_manifest(outdir, "probes generate", {}, [])
        return EXIT_OK

    # classify
    if not os.path.exists(args.probes_file):
        raise DataError(f"probes file not found: {args.probes_file}")
    if not os.path.exists(args.responses):
        raise DataError(f"responses file not found: {args.responses}")
    snapshot, _ = _load_corpus(args)
    catalog = {p.id: p for p in probing.generate_probes()}
    with open(args.probes_file, "r", encoding="utf-8") as fh:
        probe_ids = [json.loads(line)["id"] for line in fh if line.strip()]
    responses: dict[str, list] = {pid: [] for pid in probe_ids}
    with open(args.responses, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            probe_ref = obj.get("probe_id")
            if probe_ref not in responses:
                continue
            responses[probe_ref].append(
                corpus.CommentRecord(
                    id=obj["id"],
                    post_id=obj.get("post_id", probe_ref),
                    author=obj["author"],
                    created_at=parse_utc(obj["created_at"]),
                    content=obj["content"],
                )
            )
    outcomes = []
    for pid in probe_ids:
        probe = catalog.get(pid)
        if probe is None:
            category, paraphrase, submolt = probing.parse_probe_id(pid)
            probe = probing.ProbePost(pid, category, submolt, paraphrase, "", "")
        outcomes.append(probing.classify_responses(probe, responses[pid], snapshot))
    summary = probing.consensus_summary(outcomes, expected_ids=probe_ids)
    _csv(
        os.path.join(outdir, "outcomes.csv"),
        ["probe_id", "comment_count", "has_external_reference", "n_references", "n_valid"],
        (
            [
                o.probe_id,
                o.comment_count,
                int(o.has_external_reference),
                len(o.references),
                sum(1 for r in o.references if r.valid),
            ]
            for o in outcomes
        ),
    )
    atomic_write_text(
        os.path.join(outdir, "probe_summary.json"),
        json.dumps(
            {
                "breakdown": summary.breakdown,
                "missing_probe_ids": list(summary.missing_probe_ids),
                "distinct_targets": summary.distinct_targets,
                "max_target_share": summary.max_target_share,
            },
            sort_keys=True,
            indent=2,
        )
        + "\n",
    )
    _write_manifest(
        outdir,
        "probes classify",
        {"spam_threshold": args.spam_threshold},
        [args.probes_file, args.responses, args.posts, args.comments],
    )
    return EXIT_OK


def cmd_simulate(args) -> int:
    outdir = _ensure_outdir(args)
    presets = synthsoc.regime_presets()
    if args.preset:
        if args.preset not in presets:
            raise UsageError(f"unknown preset: {args.preset}")
        config = presets[args.preset]
    else:
        if not args.regime:
            raise UsageError("either --preset or --regime is required")
        base = presets.get(args.regime, synthsoc.RegimeConfig(regime=args.regime))
        overrides = {}
        for flag, field in (
            ("agents", "agents"),
            ("days", "days"),
            ("rate", "posts_per_agent_per_day"),
            ("comment_rate", "comments_per_agent_per_day"),
            ("dim", "dim"),
            ("seed", "seed"),
            ("convergence_rate", "convergence_rate"),
            ("adaptation_rate", "adaptation_rate"),
            ("attachment_exponent", "attachment_exponent"),
            ("vocab_birth", "vocab_birth_rate"),
            ("vocab_death", "vocab_death_rate"),
            ("sigma", "noise_sigma"),
            ("topics", "topics"),
        ):
            value = getattr(args, flag)
            if value is not None:
                overrides[field] = value
        from dataclasses import replace

        config = replace(base, **overrides)
    try:
        society = synthsoc.generate(config)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    synthsoc.write_society(society, outdir)
    from dataclasses import asdict

    _write_manifest(outdir, "simulate", asdict(config), [])
    return EXIT_OK


def _read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line.rstrip("\n") for line in fh if line.strip()]
    header = lines[0].split(",")
    return header, [line.split(",") for line in lines[1:]]


def _mean_of_column(rows, idx) -> float | None:
    values = [float(r[idx]) for r in rows if idx < len(r) and r[idx] != ""]
    return sum(values) / len(values) if values else None


def cmd_report(args) -> int:
    indir = args.dir
    if not os.path.isdir(indir):
        raise DataError(f"not a directory: {indir}")
    outdir = args.out or os.path.join(indir, "report")
    os.makedirs(outdir, exist_ok=True)
    sections: dict[str, dict] = {}

    def present(name):
        return os.path.exists(os.path.join(indir, name))

    if present("activity.csv"):
        header, rows = _read_csv(os.path.join(indir, "activity.csv"))
        sections["activity"] = {
            "days": len(rows),
            "total_posts": int(sum(float(r[1]) for r in rows)),
            "peak_post_volume": int(max((float(r[1]) for r in rows), default=0)),
            "total_comments": int(sum(float(r[6]) for r in rows)),
        }
        _csv(os.path.join(outdir, "fig_activity.csv"), header, rows)

    if present("birthdeath.csv"):
        header, rows = _read_csv(os.path.join(indir, "birthdeath.csv"))
        by_day: dict[str, list[tuple[float | None, float | None]]] = {}
        for r in rows:
            birth = float(r[2]) if r[2] != "" else None
            death = float(r[3]) if r[3] != "" else None
            by_day.setdefault(r[0], []).append((birth, death))
        band_rows = []
        for day in sorted(by_day):
            births = [b for b, _ in by_day[day] if b is not None]
            deaths = [d for _, d in by_day[day] if d is not None]
            band_rows.append(
                [
                    day,
                    sum(births) / len(births) if births else "",
                    min(births) if births else "",
                    max(births) if births else "",
                    sum(deaths) / len(deaths) if deaths else "",
                    min(deaths) if deaths else "",
                    max(deaths) if deaths else "",
                ]
            )
        _csv(
            os.path.join(outdir, "fig_lexical_band.csv"),
            ["day", "birth_mean", "birth_min", "birth_max", "death_mean", "death_min", "death_max"],
            band_rows,
        )
        sections["lexical_turnover"] = {
            "days": len(by_day),
            "mean_birth_rate": _mean_of_column(rows, 2),
            "mean_death_rate": _mean_of_column(rows, 3),
        }

    if present("centroid_similarity.csv") or present("pairwise_similarity.csv"):
        info = {}
        for kind, fname in (
            ("centroid", "centroid_similarity.csv"),
            ("pairwise", "pairwise_similarity.csv"),
        ):
            if not present(fname):
                continue
            header, rows = _read_csv(os.path.join(indir, fname))
            n = len(rows)
            off = []
            for i, r in enumerate(rows):
                for j in range(1, len(r)):
                    if j - 1 != i and r[j] != "":
                        off.append(float(r[j]))
            info[f"{kind}_days"] = n
            info[f"{kind}_mean_offdiag"] = sum(off) / len(off) if off else None
            if kind == "pairwise" and n:
                first = rows[0][1]
                last = rows[-1][len(rows)]
                info["pairwise_first_day"] = float(first) if first != "" else None
                info["pairwise_last_day"] = float(last) if last != "" else None
        sections["semantic_distribution"] = info

    if present("density_samples.csv") or present("density_jsd.csv"):
        info = {}
        if present("density_samples.csv"):
            _, rows = _read_csv(os.path.join(indir, "density_samples.csv"))
            info["samples"] = len(rows)
            info["mean_s_k"] = _mean_of_column(rows, 1)
        if present("density_jsd.csv"):
            _, rows = _read_csv(os.path.join(indir, "density_jsd.csv"))
            info["jsd_links"] = len(rows)
            info["mean_jsd"] = _mean_of_column(rows, 2)
        sections["cluster_tightening"] = info

    if present("drift.csv"):
        _, rows = _read_csv(os.path.join(indir, "drift.csv"))
        sections["agent_drift"] = {
            "agents": len(rows),
            "mean_drift_magnitude": _mean_of_column(rows, 2),
            "mean_consistency": _mean_of_column(rows, 3),
            "mean_toward_center": _mean_of_column(rows, 4),
        }

    if present("np.csv"):
        _, rows = _read_csv(os.path.join(indir, "np.csv"))
        spaces = sorted({r[2] for r in rows})
        info = {}
        for space in spaces:
            srows = [r for r in rows if r[2] == space and r[7] == "0"]
            observed = [float(r[5]) for r in srows if r[5] != ""]
            baselines = []
            for r in srows:
                baselines.extend(float(v) for v in r[6].split("|") if v != "")
            info[space] = {
                "pairs": len(srows),
                "mean_observed_np": sum(observed) / len(observed) if observed else None,
                "mean_baseline_np": sum(baselines) / len(baselines) if baselines else None,
            }
        sections["feedback_adaptation"] = info

    if present("influence.csv"):
        _, rows = _read_csv(os.path.join(indir, "influence.csv"))
        spaces = sorted({r[3] for r in rows})
        info = {}
        for space in spaces:
            obs = [float(r[6]) for r in rows if r[3] == space and r[7] == "0"]
            base = [float(r[6]) for r in rows if r[3] == space and r[7] == "1"]
            info[space] = {
                "events": len(obs),
                "baseline_samples": len(base),
                "mean_observed_delta": sum(obs) / len(obs) if obs else None,
                "mean_baseline_delta": sum(base) / len(base) if base else None,
            }
        sections["interaction_influence"] = info

    structure = {}
    for mode in ("independent", "cumulative"):
        if not present(f"{mode}_topk_mass.csv"):
            continue
        header, rows = _read_csv(os.path.join(indir, f"{mode}_topk_mass.csv"))
        mode_info = {"days": len(rows)}
        for idx, col in enumerate(header):
            if col.startswith("mass_top"):
                mode_info[f"mean_{col}"] = _mean_of_column(rows, idx)
        counts = [float(r[header.index("supernode_count")]) for r in rows if r[header.index("supernode_count")] != ""]
        mode_info["mean_supernode_count"] = sum(counts) / len(counts) if counts else None
        if present(f"{mode}_persistence.csv"):
            _, prows = _read_csv(os.path.join(indir, f"{mode}_persistence.csv"))
            mode_info["mean_persistence_jaccard"] = _mean_of_column(prows, 2)
        structure[mode] = mode_info
    if structure:
        sections["influence_structure"] = structure

    if present("probe_summary.json"):
        with open(os.path.join(indir, "probe_summary.json"), "r", encoding="utf-8") as fh:
            sections["probing"] = json.load(fh)

    if not sections:
        raise DataError(f"no module outputs found in {indir}")
    atomic_write_text(
        os.path.join(outdir, "summary.json"),
        json.dumps({"sections": sections}, sort_keys=True, indent=2) + "\n",
    )
    _write_manifest(outdir, "report", {"dir": str(indir)}, [])
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser assembly
# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="socdiag", description=__doc__)
    parser.add_argument("--version", action="version", version=f"socdiag {__version__}")
    sub = parser.add_subparsers(dest="command")

    def common(p, corpus_args=True, store_args=False):
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
        if corpus_args:
            _add_corpus_args(p)
        if store_args:
            _add_store_args(p)

    p = sub.add_parser("ingest", help="validate, deduplicate, and normalize a dump")
    common(p)
    p.set_defaults(handler=cmd_ingest)

    p = sub.add_parser("stats", help="macro activity series and summary totals")
    common(p)
    p.add_argument("--expect-posts", type=int, default=None)
    p.add_argument("--expect-comments", type=int, default=None)
    p.add_argument("--expect-post-authors", type=int, default=None)
    p.set_defaults(handler=cmd_stats)

    p = sub.add_parser("lexical", help="n-gram birth/death rate series")
    common(p)
    p.add_argument("--n-max", type=int, default=5)
    p.add_argument("--min-freq", type=int, default=2)
    p.set_defaults(handler=cmd_lexical)

    p = sub.add_parser("semantic", help="daily centroid/pairwise/density/jsd metrics")
    p.add_argument("what", nargs="?", default="all", choices=("centroid", "pairwise", "density", "jsd", "all"))
    common(p, store_args=True)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--bins", type=int, default=50)
    p.set_defaults(handler=cmd_semantic)

    p = sub.add_parser("drift", help="agent-level drift metrics")
    common(p, store_args=True)
    p.add_argument("--min-posts", type=int, default=10)
    p.add_argument("--buckets", default="10,20,50")
    p.add_argument("--leave-one-out", action="store_true")
    p.set_defaults(handler=cmd_drift)

    p = sub.add_parser("feedback", help="net-progress feedback event study")
    common(p, store_args=True)
    p.add_argument("--w", type=int, default=10)
    p.add_argument("--quantile", type=float, default=0.3)
    p.add_argument("--perms", type=int, default=1)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--features", default="semantic")
    p.add_argument("--syntactic-dim", type=int, default=4096)
    p.set_defaults(handler=cmd_feedback)

    p = sub.add_parser("influence", help="interaction-influence event study")
    common(p, store_args=True)
    p.add_argument("--w", type=int, default=20)
    p.add_argument("--sample-prob", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--features", default="semantic")
    p.add_argument("--syntactic-dim", type=int, default=4096)
    p.set_defaults(handler=cmd_influence)

    p = sub.add_parser("graph", help="interaction graphs, PageRank, supernodes")
    common(p)
    p.add_argument("--mode", choices=("independent", "cumulative", "both"), default="independent")
    p.add_argument("--damping", type=float, default=0.85)
    p.add_argument("--topk", default="1,3,5,10")
    p.add_argument("--top-n", type=int, default=10)
    p.set_defaults(handler=cmd_graph)

    p = sub.add_parser("probes", help="probe catalog generation and classification")
    psub = p.add_subparsers(dest="probes_command", required=True)
    pg = psub.add_parser("generate")
    pg.add_argument("--out", required=True)
    pg.add_argument("--threads", type=int, default=1)
    pg.set_defaults(handler=cmd_probes)
    pc = psub.add_parser("classify")
    pc.add_argument("--out", required=True)
    pc.add_argument("--threads", type=int, default=1)
    pc.add_argument("--probes", dest="probes_file", required=True)
    pc.add_argument("--responses", required=True)
    _add_corpus_args(pc)
    pc.set_defaults(handler=cmd_probes)

    p = sub.add_parser("simulate", help="generate a synthetic society")
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--preset", default=None)
    p.add_argument("--regime", default=None, choices=synthsoc.REGIMES)
    p.add_argument("--agents", type=int, default=None)
    p.add_argument("--days", type=int, default=None)
    p.add_argument("--rate", type=float, default=None)
    p.add_argument("--comment-rate", type=float, default=None)
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--convergence-rate", type=float, default=None)
    p.add_argument("--adaptation-rate", type=float, default=None)
    p.add_argument("--attachment-exponent", type=float, default=None)
    p.add_argument("--vocab-birth", type=float, default=None)
    p.add_argument("--vocab-death", type=float, default=None)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--topics", type=int, default=None)
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("report", help="combined summary over module outputs")
    p.add_argument("--dir", required=True, help="directory holding module outputs")
    p.add_argument("--out", default=None, help="report output directory (default DIR/report)")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(handler=cmd_report)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    if not argv:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            parser.print_usage(sys.stderr)
            return EXIT_USAGE
        return args.handler(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
