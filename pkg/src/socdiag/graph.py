"""Daily and cumulative commenter->poster interaction graphs, weighted
PageRank, top-k influence mass, gap-based supernode detection, persistence,
and weighted degree tables.

Edges point from the commenting agent to the author being commented on
(the parent comment's author when thread structure is present, else the
post author), weighted by interaction count. Self-loops are dropped.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from datetime import date

import numpy as np
from scipy import sparse

from .corpus import CorpusSnapshot, DailyPartition
from .util import day_to_date, epoch_day


@dataclass
class DailyGraph:
    day: date
    mode: str  # "independent" | "cumulative"
    edges: dict[tuple[str, str], int]

    @property
    def nodes(self) -> tuple[str, ...]:
        seen = set()
        for src, dst in self.edges:
            seen.add(src)
            seen.add(dst)
        return tuple(sorted(seen))

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @property
    def total_weight(self) -> int:
        return sum(self.edges.values())


@dataclass
class GraphBuildStats:
    unknown_target: int = 0
    self_loops: int = 0
    out_of_range: int = 0


def build_graphs(
    snapshot: CorpusSnapshot, partition: DailyPartition, mode: str = "independent"
) -> tuple[list[DailyGraph], GraphBuildStats]:
    """One graph per partition day; cumulative mode unions days <= t."""
    if mode not in ("independent", "cumulative"):
        raise ValueError(f"unknown graph mode: {mode}")
    stats = GraphBuildStats()
    comment_author = {c.id: c.author for c in snapshot.comments}
    day_edges: dict[date, Counter] = {d: Counter() for d in partition.days}
    day_set = set(partition.days)

    for comment in snapshot.comments:
        d = day_to_date(epoch_day(comment.created_at))
        if d not in day_set:
            stats.out_of_range += 1
            continue
        target_author = None
        if comment.parent_id is not None:
            target_author = comment_author.get(comment.parent_id)
        if target_author is None:
            post = snapshot.post_by_id(comment.post_id)
            target_author = post.author if post is not None else None
        if target_author is None:
            stats.unknown_target += 1
            continue
        if target_author == comment.author:
            stats.self_loops += 1
            continue
        day_edges[d][(comment.author, target_author)] += 1

    graphs = []
    if mode == "independent":
        for d in partition.days:
            graphs.append(DailyGraph(day=d, mode=mode, edges=dict(day_edges[d])))
    else:
        running: Counter = Counter()
        for d in partition.days:
            running.update(day_edges[d])
            graphs.append(DailyGraph(day=d, mode=mode, edges=dict(running)))
    return graphs, stats


@dataclass
class PageRankResult:
    day: date
    scores: dict[str, float]
    iterations: int
    residual: float


class PageRankDivergence(RuntimeError):
    """Power iteration failed to reach the tolerance within max_iter."""


def pagerank(
    graph: DailyGraph,
    damping: float = 0.85,
    tol: float = 1e-10,
    max_iter: int = 200,
) -> PageRankResult:
    """Weighted PageRank by power iteration.

    Transitions are out-weight-normalized, dangling mass is redistributed
    uniformly, and the teleport vector is uniform. Converged when the L1
    residual drops below `tol`.
    """
    nodes = graph.nodes
    n = len(nodes)
    if n == 0:
        raise ValueError("pagerank needs at least one node")
    index = {a: i for i, a in enumerate(nodes)}
    if graph.edges:
        src = np.fromiter((index[s] for s, _ in graph.edges), dtype=np.int64)
        dst = np.fromiter((index[t] for _, t in graph.edges), dtype=np.int64)
        wts = np.fromiter(graph.edges.values(), dtype=np.float64)
    else:
        src = np.empty(0, dtype=np.int64)
        dst = np.empty(0, dtype=np.int64)
        wts = np.empty(0, dtype=np.float64)
    out_weight = np.zeros(n)
    np.add.at(out_weight, src, wts)
    dangling = out_weight == 0.0
    norm_w = wts / out_weight[src]
    transition = sparse.csr_matrix((norm_w, (dst, src)), shape=(n, n))

    x = np.full(n, 1.0 / n)
    residual = np.inf
    for iteration in range(1, max_iter + 1):
        dangle_mass = float(x[dangling].sum())
        x_new = damping * (transition @ x + dangle_mass / n) + (1.0 - damping) / n
        residual = float(np.abs(x_new - x).sum())
        x = x_new
        if residual < tol:
            return PageRankResult(
                day=graph.day,
                scores={a: float(x[i]) for a, i in index.items()},
                iterations=iteration,
                residual=residual,
            )
    raise PageRankDivergence(
        f"pagerank did not converge after {max_iter} iterations (residual {residual:.3e})"
    )


def _ranked(result: PageRankResult) -> list[tuple[str, float]]:
    # Descending score, ties by agent id.
    return sorted(result.scores.items(), key=lambda kv: (-kv[1], kv[0]))


def topk_mass(result: PageRankResult, ks=(1, 3, 5, 10)) -> dict[int, float]:
    """Cumulative PageRank mass of the top-k agents, k capped at N."""
    ranked = _ranked(result)
    out = {}
    for k in sorted(ks):
        kk = min(k, len(ranked))
        out[k] = float(sum(score for _, score in ranked[:kk]))
    return out


@dataclass
class SupernodeReport:
    day: date
    k_star: int
    members: tuple[str, ...]
    max_gap: float
    tied_positions: tuple[int, ...]  # 1-based positions sharing the max gap


def detect_supernodes(result: PageRankResult) -> SupernodeReport | None:
    """Largest consecutive-gap split of the ranked score list.

    Gaps are taken over all consecutive pairs; ties resolve to the smallest
    index. Absent for graphs with fewer than two nodes.
    """
    ranked = _ranked(result)
    if len(ranked) < 2:
        return None
    scores = np.array([s for _, s in ranked])
    gaps = scores[:-1] - scores[1:]
    max_gap = float(gaps.max())
    k_star = int(gaps.argmax()) + 1
    tied = tuple(int(i) + 1 for i in np.flatnonzero(gaps == max_gap))
    return SupernodeReport(
        day=result.day,
        k_star=k_star,
        members=tuple(a for a, _ in ranked[:k_star]),
        max_gap=max_gap,
        tied_positions=tied,
    )


def jaccard(a: set, b: set) -> float:
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


def persistence(reports: list[SupernodeReport]) -> list[tuple[date, date, float]]:
    """Supernode-set Jaccard between consecutive daily reports."""
    out = []
    for prev, cur in zip(reports, reports[1:]):
        out.append((prev.day, cur.day, jaccard(set(prev.members), set(cur.members))))
    return out


def degree_tables(
    graph: DailyGraph, top_n: int = 10
) -> tuple[list[tuple[str, int]], list[tuple[str, int]]]:
    """(top in-degree, top out-degree) by summed edge weight, ties by id."""
    in_deg: Counter = Counter()
    out_deg: Counter = Counter()
    for (src, dst), w in graph.edges.items():
        out_deg[src] += w
        in_deg[dst] += w
    rank = lambda c: sorted(c.items(), key=lambda kv: (-kv[1], kv[0]))[:top_n]  # noqa: E731
    return rank(in_deg), rank(out_deg)


@dataclass
class ConcentrationRow:
    day: date
    mass: dict[int, float]
    supernode_count: int | None
    jaccard_prev: float | None


def concentration_series(
    results: list[PageRankResult],
    reports: list[SupernodeReport | None],
    ks=(1, 3, 5, 10),
) -> list[ConcentrationRow]:
    """Per-day top-k mass, supernode count, and day-over-day set overlap."""
    rows = []
    prev_members: set | None = None
    for result, report in zip(results, reports):
        j = None
        count = None
        if report is not None:
            count = report.k_star
            if prev_members is not None:
                j = jaccard(prev_members, set(report.members))
            prev_members = set(report.members)
        rows.append(
            ConcentrationRow(
                day=result.day,
                mass=topk_mass(result, ks),
                supernode_count=count,
                jaccard_prev=j,
            )
        )
    return rows


def graph_stats_rows(graphs: list[DailyGraph]) -> list[tuple[date, int, int, int]]:
    """(period, nodes, edges, total weight) per daily graph."""
    return [(g.day, g.node_count, g.edge_count, g.total_weight) for g in graphs]
