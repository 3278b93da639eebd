"""n-gram lifespans and daily birth/death rate series.

Tokenization rule, pinned for reproducibility: URL-looking tokens
(scheme-prefixed or bare `www.`) are stripped first, the text is
lowercased, and Unicode word tokens (`\\w+`) are kept; punctuation is
dropped. n-grams are contiguous token windows that never cross a post
boundary.

An n-gram's lifespan runs from its first to its last observation date.
It is active on every day of that interval (including gap days), born on
its first day, and dead on the day after its last. Grams below the global
frequency floor are excluded before any lifespan accounting.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from datetime import date
from typing import Iterator

import numpy as np

from .corpus import CorpusSnapshot, DailyPartition, post_text
from .util import day_to_date, epoch_day

URL_RE = re.compile(r"(?:https?://\S+|www\.\S+)", re.IGNORECASE)
TOKEN_RE = re.compile(r"\w+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercased word tokens with URLs removed before segmentation."""
    return TOKEN_RE.findall(URL_RE.sub(" ", text).lower())


def extract_ngrams(text: str, n_max: int = 5) -> Counter:
    """Multiset of (n, gram) for n = 1..n_max; grams are token tuples."""
    tokens = tokenize(text)
    grams: Counter = Counter()
    for n in range(1, n_max + 1):
        for i in range(len(tokens) - n + 1):
            grams[(n, tuple(tokens[i : i + n]))] += 1
    return grams


@dataclass(frozen=True)
class NGramRecord:
    gram: tuple[str, ...]
    n: int
    first_seen: date
    last_seen: date
    total_count: int


@dataclass
class _NGramTable:
    """Columnar per-n view: one row per surviving gram."""

    grams: np.ndarray  # (G, n) int32 vocab ids
    first: np.ndarray  # (G,) day indices
    last: np.ndarray
    total: np.ndarray
    observed: np.ndarray  # per-day |O_t|
    born: np.ndarray  # per-day |B_t|
    dead: np.ndarray  # per-day |D_t|
    active: np.ndarray  # per-day |A_t|


@dataclass
class LexiconTimeline:
    days: list[date]
    n_values: list[int]
    vocab: list[str]
    tables: dict[int, _NGramTable]
    min_global_frequency: int

    def records(self, n: int) -> Iterator[NGramRecord]:
        table = self.tables[n]
        for row in range(table.grams.shape[0]):
            yield NGramRecord(
                gram=tuple(self.vocab[t] for t in table.grams[row]),
                n=n,
                first_seen=self.days[table.first[row]],
                last_seen=self.days[table.last[row]],
                total_count=int(table.total[row]),
            )

    def as_dict(self, n: int) -> dict[tuple[str, ...], NGramRecord]:
        return {rec.gram: rec for rec in self.records(n)}

    def set_sizes(self, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Per-day (|O_t|, |A_t|, |B_t|, |D_t|) arrays."""
        t = self.tables[n]
        return t.observed, t.active, t.born, t.dead


def _token_arrays(texts: list[str]) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Concatenate tokenized texts into (vocab ids, per-text lengths, vocab)."""
    vocab: dict[str, int] = {}
    ids: list[int] = []
    lengths = np.zeros(len(texts), dtype=np.int64)
    for i, text in enumerate(texts):
        toks = tokenize(text)
        lengths[i] = len(toks)
        for tok in toks:
            idx = vocab.get(tok)
            if idx is None:
                idx = len(vocab)
                vocab[tok] = idx
            ids.append(idx)
    return np.asarray(ids, dtype=np.int32), lengths, list(vocab)


def _window_matrix(
    ids: np.ndarray, lengths: np.ndarray, n: int
) -> tuple[np.ndarray, np.ndarray]:
    """All length-n windows that stay inside one text.

    Returns the (M, n) id matrix and, per window, the index of the text it
    came from.
    """
    total = ids.size
    if total < n:
        return np.empty((0, n), dtype=np.int32), np.empty(0, dtype=np.int64)
    starts = np.zeros(len(lengths), dtype=np.int64)
    np.cumsum(lengths[:-1], out=starts[1:])
    text_of_pos = np.repeat(np.arange(len(lengths), dtype=np.int64), lengths)
    pos_in_text = np.arange(total, dtype=np.int64) - starts[text_of_pos]
    head = total - n + 1
    valid = pos_in_text[:head] <= lengths[text_of_pos[:head]] - n
    windows = np.lib.stride_tricks.sliding_window_view(ids, n)
    return np.ascontiguousarray(windows[valid]), text_of_pos[:head][valid]


def build_timeline(
    snapshot: CorpusSnapshot,
    partition: DailyPartition,
    n_max: int = 5,
    min_global_frequency: int = 2,
) -> LexiconTimeline:
    """Lifespan accounting for every n-gram above the global frequency floor."""
    texts = [post_text(p) for p in snapshot.posts]
    day_of_post = np.asarray(
        [partition.day_index(day_to_date(epoch_day(p.created_at))) for p in snapshot.posts],
        dtype=np.int32,
    )
    ids, lengths, vocab = _token_arrays(texts)
    n_days = partition.day_count
    tables: dict[int, _NGramTable] = {}

    for n in range(1, n_max + 1):
        gm, row_post = _window_matrix(ids, lengths, n)
        if gm.shape[0] == 0:
            empty = np.zeros(n_days, dtype=np.int64)
            tables[n] = _NGramTable(
                grams=np.empty((0, n), dtype=np.int32),
                first=np.empty(0, dtype=np.int32),
                last=np.empty(0, dtype=np.int32),
                total=np.empty(0, dtype=np.int64),
                observed=empty.copy(),
                born=empty.copy(),
                dead=empty.copy(),
                active=empty.copy(),
            )
            continue
        gday = day_of_post[row_post]
        # Sort by gram columns (major first), then day, so each group's
        # days come out ascending.
        order = np.lexsort((gday,) + tuple(gm[:, c] for c in range(n - 1, -1, -1)))
        gs = gm[order]
        ds = gday[order]
        m = gs.shape[0]
        new_group = np.empty(m, dtype=bool)
        new_group[0] = True
        np.any(gs[1:] != gs[:-1], axis=1, out=new_group[1:])
        group_starts = np.flatnonzero(new_group)
        bounds = np.append(group_starts, m)
        counts = np.diff(bounds)
        first_day = ds[group_starts]
        last_day = ds[bounds[1:] - 1]
        surv = counts >= min_global_frequency

        born = np.bincount(first_day[surv], minlength=n_days)[:n_days]
        dead = np.bincount(last_day[surv] + 1, minlength=n_days + 1)[:n_days]
        active = np.cumsum(born) - np.cumsum(dead)

        group_of_pos = np.cumsum(new_group) - 1
        surv_per_pos = surv[group_of_pos]
        new_pair = new_group.copy()
        new_pair[1:] |= ds[1:] != ds[:-1]
        obs_positions = new_pair & surv_per_pos
        observed = np.bincount(ds[obs_positions], minlength=n_days)[:n_days]

        tables[n] = _NGramTable(
            grams=gs[group_starts][surv],
            first=first_day[surv].astype(np.int32),
            last=last_day[surv].astype(np.int32),
            total=counts[surv].astype(np.int64),
            observed=observed.astype(np.int64),
            born=born.astype(np.int64),
            dead=dead.astype(np.int64),
            active=active.astype(np.int64),
        )

    return LexiconTimeline(
        days=list(partition.days),
        n_values=list(range(1, n_max + 1)),
        vocab=vocab,
        tables=tables,
        min_global_frequency=min_global_frequency,
    )


@dataclass
class BirthDeathSeries:
    """Per-n daily rates plus the across-n mean/min/max band.

    Rates are NaN where undefined: the death rate on the first day, and
    any day whose denominator set is empty.
    """

    days: list[date]
    n_values: list[int]
    birth: dict[int, np.ndarray]
    death: dict[int, np.ndarray]
    active: dict[int, np.ndarray]
    born: dict[int, np.ndarray]
    dead: dict[int, np.ndarray]
    birth_band: tuple[np.ndarray, np.ndarray, np.ndarray]  # mean, min, max
    death_band: tuple[np.ndarray, np.ndarray, np.ndarray]

    def rows(self):
        for n in self.n_values:
            for i, d in enumerate(self.days):
                yield (
                    d,
                    n,
                    self.birth[n][i],
                    self.death[n][i],
                    int(self.active[n][i]),
                    int(self.born[n][i]),
                    int(self.dead[n][i]),
                )


def _band(stack: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    all_nan = np.all(np.isnan(stack), axis=0)
    mean = np.full(stack.shape[1], np.nan)
    lo = np.full(stack.shape[1], np.nan)
    hi = np.full(stack.shape[1], np.nan)
    if not np.all(all_nan):
        cols = ~all_nan
        mean[cols] = np.nanmean(stack[:, cols], axis=0)
        lo[cols] = np.nanmin(stack[:, cols], axis=0)
        hi[cols] = np.nanmax(stack[:, cols], axis=0)
    return mean, lo, hi


def birth_death_series(timeline: LexiconTimeline) -> BirthDeathSeries:
    """Daily R_birth = |B_t| / |A_t| and R_death = |D_t| / |A_{t-1}|."""
    n_days = len(timeline.days)
    birth: dict[int, np.ndarray] = {}
    death: dict[int, np.ndarray] = {}
    active: dict[int, np.ndarray] = {}
    born: dict[int, np.ndarray] = {}
    dead: dict[int, np.ndarray] = {}
    for n in timeline.n_values:
        _, a, b, d = timeline.set_sizes(n)
        rb = np.full(n_days, np.nan)
        rd = np.full(n_days, np.nan)
        nz = a > 0
        rb[nz] = b[nz] / a[nz]
        if n_days > 1:
            prev = a[:-1]
            nzp = prev > 0
            rd[1:][nzp] = d[1:][nzp] / prev[nzp]
        birth[n], death[n] = rb, rd
        active[n], born[n], dead[n] = a, b, d
    b_stack = np.vstack([birth[n] for n in timeline.n_values])
    d_stack = np.vstack([death[n] for n in timeline.n_values])
    return BirthDeathSeries(
        days=list(timeline.days),
        n_values=list(timeline.n_values),
        birth=birth,
        death=death,
        active=active,
        born=born,
        dead=dead,
        birth_band=_band(b_stack),
        death_band=_band(d_stack),
    )
