"""Synthetic agent societies with known ground-truth dynamics.

Each regime pins one causal mechanism so the diagnostic modules can be
validated against construction:

- inert_turnover: frozen personas, scheduled vocabulary birth/death; every
  adaptation metric is null by construction.
- convergent: personas pulled daily toward the population centroid.
- feedback_adaptive: scores reflect proximity to a hidden per-agent
  preference; personas move toward their own top-scored posts.
- hierarchical: comment targets chosen by preferential attachment on
  accumulated weighted in-degree.
- egalitarian: comment targets chosen uniformly.

Embeddings are generated directly in latent space (persona + Gaussian
noise, unit-normalized), decoupled from the scheduled token streams that
exercise the lexical module. All randomness comes from streams keyed by
(seed, purpose, day), so identical configs produce byte-identical output.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .corpus import CommentRecord, PostRecord, comment_to_json, post_to_json
from .embedding import EmbeddingStore, write_store
from .util import atomic_write_text, fnv64

REGIMES = (
    "inert_turnover",
    "convergent",
    "feedback_adaptive",
    "hierarchical",
    "egalitarian",
)

_BASE_EPOCH = 1767225600  # 2026-01-01T00:00:00Z
_PERSONA_SPREAD = 0.25
_INITIAL_VOCAB = 200
_SCORE_SCALE = 20.0


@dataclass(frozen=True)
class RegimeConfig:
    regime: str
    agents: int = 500
    days: int = 30
    posts_per_agent_per_day: float = 2.0
    comments_per_agent_per_day: float = 2.0
    dim: int = 64
    convergence_rate: float = 0.0
    adaptation_rate: float = 0.0
    attachment_exponent: float = 0.0
    vocab_birth_rate: float = 0.05
    vocab_death_rate: float = 0.05
    noise_sigma: float = 0.05
    topics: int = 8
    seed: int = 0


def _validate(config: RegimeConfig) -> None:
    if config.regime not in REGIMES:
        raise ValueError(f"unknown regime: {config.regime}")
    if config.agents < 1 or config.days < 1:
        raise ValueError("agents and days must be >= 1")
    if config.dim < 2:
        raise ValueError("dim must be >= 2")
    if config.topics < 1:
        raise ValueError("topics must be >= 1")
    if config.posts_per_agent_per_day < 0 or config.comments_per_agent_per_day < 0:
        raise ValueError("activity rates must be >= 0")
    for name in ("convergence_rate", "adaptation_rate", "vocab_birth_rate", "vocab_death_rate"):
        value = getattr(config, name)
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"{name} must be in [0, 1]")
    if config.attachment_exponent < 0:
        raise ValueError("attachment_exponent must be >= 0")
    if config.noise_sigma < 0:
        raise ValueError("noise_sigma must be >= 0")


@dataclass
class SyntheticSociety:
    posts: list[PostRecord]
    comments: list[CommentRecord]
    store: EmbeddingStore
    truth: dict


def _rng(seed: int, purpose: str, day: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, fnv64(purpose), day]))


def _unit_rows(matrix: np.ndarray) -> np.ndarray:
    return matrix / np.linalg.norm(matrix, axis=1, keepdims=True)


class _Vocab:
    """Per-topic active token list with scheduled birth and death.

    Deaths retire the oldest active tokens first, so scheduled lifespans
    are exact.
    """

    def __init__(self, topic: int, size: int):
        self.topic = topic
        self.serial = size
        self.active: list[str] = [f"t{topic}w{i:04d}" for i in range(size)]

    def step(self, birth_rate: float, death_rate: float) -> None:
        births = int(round(birth_rate * len(self.active)))
        deaths = int(round(death_rate * len(self.active)))
        deaths = min(deaths, max(0, len(self.active) + births - 2))  # never empty
        for _ in range(births):
            self.active.append(f"t{self.topic}w{self.serial:04d}")
            self.serial += 1
        if deaths:
            self.active = self.active[deaths:]


def _draw_texts(
    rng_len: np.random.Generator,
    rng_tok: np.random.Generator,
    topic_of_row: np.ndarray,
    vocabs: list[_Vocab],
    topics: int,
    low: int,
    high: int,
) -> list[str]:
    n_rows = topic_of_row.size
    lengths = rng_len.integers(low, high + 1, size=n_rows)
    texts: list[str] = [""] * n_rows
    for topic in range(topics):
        rows = np.flatnonzero(topic_of_row == topic)
        if rows.size == 0:
            continue
        active = vocabs[topic].active
        total = int(lengths[rows].sum())
        draws = rng_tok.integers(0, len(active), size=total)
        cursor = 0
        for r in rows:
            k = int(lengths[r])
            texts[r] = " ".join(active[d] for d in draws[cursor : cursor + k])
            cursor += k
    return texts


def generate(config: RegimeConfig) -> SyntheticSociety:
    """Generate one society; see the module docstring for regime semantics."""
    _validate(config)
    seed = config.seed
    n_agents = config.agents
    dim = config.dim
    topics = config.topics

    anchor_rng = _rng(seed, "anchors", 0)
    anchors = _unit_rows(anchor_rng.standard_normal((topics, dim)))
    topic_of_agent = np.arange(n_agents) % topics
    persona_rng = _rng(seed, "personas", 0)
    personas = _unit_rows(
        anchors[topic_of_agent] + _PERSONA_SPREAD * persona_rng.standard_normal((n_agents, dim))
    )
    pref_rng = _rng(seed, "preferences", 0)
    preferences = _unit_rows(pref_rng.standard_normal((n_agents, dim)))

    vocabs = [_Vocab(t, _INITIAL_VOCAB) for t in range(topics)]
    in_degree = np.zeros(n_agents, dtype=np.int64)

    posts: list[PostRecord] = []
    comments: list[CommentRecord] = []
    emb_ids: list[str] = []
    emb_rows: list[np.ndarray] = []
    post_serial = 0
    comment_serial = 0
    agent_names = [f"agent{a:05d}" for a in range(n_agents)]

    for day in range(config.days):
        if day > 0:
            for vocab in vocabs:
                vocab.step(config.vocab_birth_rate, config.vocab_death_rate)
        day_base = _BASE_EPOCH + day * 86400

        counts = _rng(seed, "post_count", day).poisson(
            config.posts_per_agent_per_day, size=n_agents
        )
        p_day = int(counts.sum())
        agent_of_post = np.repeat(np.arange(n_agents), counts)
        times = np.sort(_rng(seed, "post_time", day).integers(0, 86400, size=p_day))
        noise = _rng(seed, "embedding", day).standard_normal((p_day, dim))
        if p_day:
            vectors = personas[agent_of_post] + config.noise_sigma * noise
            vectors = _unit_rows(vectors).astype(np.float32)
            vectors /= np.linalg.norm(vectors.astype(np.float64), axis=1, keepdims=True).astype(
                np.float32
            )
        else:
            vectors = np.empty((0, dim), dtype=np.float32)

        score_rng = _rng(seed, "score", day)
        if config.regime == "feedback_adaptive" and p_day:
            alignment = np.einsum("ij,ij->i", vectors.astype(np.float64), preferences[agent_of_post])
            scores = np.round(_SCORE_SCALE * alignment).astype(np.int64) + score_rng.integers(
                -2, 3, size=p_day
            )
        else:
            scores = score_rng.poisson(2.0, size=p_day)

        texts = _draw_texts(
            _rng(seed, "post_len", day),
            _rng(seed, "post_tokens", day),
            topic_of_agent[agent_of_post],
            vocabs,
            topics,
            8,
            16,
        )

        day_post_indices_by_agent: dict[int, list[int]] = {}
        day_post_ids: list[str] = []
        day_post_times: list[int] = []
        for row in range(p_day):
            pid = f"p{post_serial:07d}"
            post_serial += 1
            agent_idx = int(agent_of_post[row])
            posts.append(
                PostRecord(
                    id=pid,
                    author=agent_names[agent_idx],
                    submolt=f"topic{topic_of_agent[agent_idx]}",
                    created_at=day_base + int(times[row]),
                    title="",
                    content=texts[row],
                    score=int(scores[row]),
                )
            )
            emb_ids.append(pid)
            emb_rows.append(vectors[row])
            day_post_indices_by_agent.setdefault(agent_idx, []).append(row)
            day_post_ids.append(pid)
            day_post_times.append(day_base + int(times[row]))

        # --- comments ---
        posting_agents = np.array(sorted(day_post_indices_by_agent), dtype=np.int64)
        comment_counts = _rng(seed, "comment_count", day).poisson(
            config.comments_per_agent_per_day, size=n_agents
        )
        commenters = np.repeat(np.arange(n_agents), comment_counts)
        n_comments = commenters.size
        if n_comments and posting_agents.size:
            target_rng = _rng(seed, "comment_target", day)
            if config.regime == "hierarchical":
                weights = (in_degree[posting_agents] + 1.0) ** config.attachment_exponent
                weights = weights / weights.sum()
                drawn = target_rng.choice(posting_agents.size, size=n_comments, p=weights)
            else:
                drawn = target_rng.integers(0, posting_agents.size, size=n_comments)
            targets = posting_agents[drawn]
            collision = targets == commenters
            if posting_agents.size > 1:
                targets[collision] = posting_agents[(drawn[collision] + 1) % posting_agents.size]
            keep = targets != commenters
            commenters = commenters[keep]
            targets = targets[keep]
            u_post = target_rng.random(commenters.size)
            u_time = target_rng.random(commenters.size)
            texts_c = _draw_texts(
                _rng(seed, "comment_len", day),
                _rng(seed, "comment_tokens", day),
                topic_of_agent[commenters],
                vocabs,
                topics,
                3,
                7,
            )
            for i in range(commenters.size):
                rows = day_post_indices_by_agent[int(targets[i])]
                row = rows[int(u_post[i] * len(rows))]
                post_time = day_post_times[row]
                lo = min(post_time + 1, day_base + 86399)
                t_c = lo + int(u_time[i] * (day_base + 86400 - lo))
                comments.append(
                    CommentRecord(
                        id=f"c{comment_serial:07d}",
                        post_id=day_post_ids[row],
                        author=agent_names[int(commenters[i])],
                        created_at=t_c,
                        content=texts_c[i],
                    )
                )
                comment_serial += 1
            np.add.at(in_degree, targets, 1)

        # --- persona evolution ---
        if config.regime == "convergent" and config.convergence_rate > 0:
            centroid = personas.mean(axis=0)
            personas = _unit_rows(
                personas + config.convergence_rate * (centroid[None, :] - personas)
            )
        elif config.regime == "feedback_adaptive" and config.adaptation_rate > 0 and p_day:
            for agent_idx, rows in day_post_indices_by_agent.items():
                ranked = sorted(
                    rows, key=lambda r: (-int(scores[r]), int(times[r]), r)
                )
                top_n = max(1, int(0.3 * len(rows)))
                top_mean = vectors[ranked[:top_n]].astype(np.float64).mean(axis=0)
                persona = personas[agent_idx]
                moved = persona + config.adaptation_rate * (top_mean - persona)
                personas[agent_idx] = moved / np.linalg.norm(moved)

    matrix = (
        np.stack(emb_rows) if emb_rows else np.empty((0, dim), dtype=np.float32)
    )
    store = EmbeddingStore(dim=dim, ids=tuple(emb_ids), matrix=matrix)
    truth = {
        "format": 1,
        "regime": config.regime,
        "config": asdict(config),
        "counts": {"posts": len(posts), "comments": len(comments)},
    }
    return SyntheticSociety(posts=posts, comments=comments, store=store, truth=truth)


def write_society(society: SyntheticSociety, outdir) -> None:
    """Write posts.jsonl, comments.jsonl, embeddings.mbem, truth.json."""
    import os

    os.makedirs(outdir, exist_ok=True)
    atomic_write_text(
        os.path.join(outdir, "posts.jsonl"),
        "".join(post_to_json(p) + "\n" for p in society.posts),
    )
    atomic_write_text(
        os.path.join(outdir, "comments.jsonl"),
        "".join(comment_to_json(c) + "\n" for c in society.comments),
    )
    write_store(society.store, os.path.join(outdir, "embeddings.mbem"))
    atomic_write_text(
        os.path.join(outdir, "truth.json"),
        json.dumps(society.truth, sort_keys=True, indent=2) + "\n",
    )


def load_truth(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def regime_presets() -> dict[str, RegimeConfig]:
    """Five canonical configs sized for sub-minute end-to-end diagnostics."""
    base = dict(
        agents=500,
        days=30,
        posts_per_agent_per_day=2.0,
        comments_per_agent_per_day=2.0,
        dim=64,
        noise_sigma=0.05,
        topics=8,
        seed=7,
    )
    return {
        "inert_turnover": RegimeConfig(
            regime="inert_turnover", vocab_birth_rate=0.05, vocab_death_rate=0.05, **base
        ),
        "convergent": RegimeConfig(
            regime="convergent",
            convergence_rate=0.2,
            vocab_birth_rate=0.02,
            vocab_death_rate=0.02,
            **base,
        ),
        "feedback_adaptive": RegimeConfig(
            regime="feedback_adaptive",
            adaptation_rate=0.5,
            vocab_birth_rate=0.02,
            vocab_death_rate=0.02,
            **base,
        ),
        "hierarchical": RegimeConfig(
            regime="hierarchical",
            attachment_exponent=1.5,
            vocab_birth_rate=0.02,
            vocab_death_rate=0.02,
            **base,
        ),
        "egalitarian": RegimeConfig(
            regime="egalitarian", vocab_birth_rate=0.02, vocab_death_rate=0.02, **base
        ),
    }
