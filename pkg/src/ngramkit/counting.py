"""N-gram counting with a bounded in-memory buffer and count thresholds.

Counts are accumulated in a dict. When the estimated size of the dict goes
over ``memory_budget`` it is sorted and spilled to a temporary run file;
at the end all runs are k-way merged, summing equal keys. The result is
identical to a single in-memory pass regardless of the budget.
"""

from __future__ import annotations

import heapq
import logging
import os
import shutil
import tempfile
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, TextIO

from .corpus import BOS, EOS

log = logging.getLogger(__name__)

MIN_MEMORY_BUDGET = 16 * 2**20
MAX_ORDER = 5


def entry_bytes(m: int) -> int:
    """Rough CPython footprint of one m-gram entry in a dict.

    Covers the tuple, its slot in the hash table and the int value. Token
    strings are shared with the input and not charged.
    """
    return 136 + 8 * m


class CountingError(ValueError):
    pass


@dataclass
class NGramCountTable:
    """Per-order n-gram counts over ``<s>``-padded, ``</s>``-terminated sentences.

    ``counts[m - 1]`` maps m-gram tuples to counts. ``raw_lower`` keeps the
    unthresholded counts of orders ``1..order-1``; they give the number of
    times a history was seen, which survives thresholding.
    ``count_of_counts[m - 1][k]`` is the number of distinct raw m-grams seen
    exactly k times, for k in 1..4.
    """

    order: int
    counts: list
    total_sentences: int = 0
    total_tokens: int = 0
    raw_lower: list = field(default_factory=list, repr=False)
    count_of_counts: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        if not self.raw_lower:
            self.raw_lower = self.counts[: self.order - 1]
        if not self.count_of_counts:
            self.count_of_counts = [_count_of_counts(c) for c in self.counts]

    def context_count(self, history: tuple) -> int:
        """Number of predicted positions preceded by ``history`` (raw counts)."""
        if not history:
            return self.total_tokens
        if history == (BOS,):
            return self.total_sentences
        if len(history) >= self.order:
            raise ValueError(f"history longer than order - 1: {history}")
        return self.raw_lower[len(history) - 1].get(history, 0)

    def __len__(self):
        return sum(len(c) for c in self.counts)

    def __eq__(self, other):
        if not isinstance(other, NGramCountTable):
            return NotImplemented
        return (self.order == other.order and self.counts == other.counts
                and self.total_sentences == other.total_sentences
                and self.total_tokens == other.total_tokens)


def _count_of_counts(counts: dict) -> dict:
    coc = {k: 0 for k in range(1, 5)}
    for c in counts.values():
        if c <= 4:
            coc[c] += 1
    return coc


def _check_tokens(sentence):
    for tok in sentence:
        if not tok or tok in (BOS, EOS) or any(c.isspace() for c in tok):
            raise CountingError(f"invalid token {tok!r} in sentence")


class _SpillRuns:
    def __init__(self, tmpdir=None):
        self.dir = tempfile.mkdtemp(prefix="ngramkit-counts-", dir=tmpdir)
        self.paths = []

    def spill(self, buffer: Counter):
        path = os.path.join(self.dir, f"run{len(self.paths):05d}.txt")
        items = sorted((" ".join(k), c) for k, c in buffer.items())
        try:
            with open(path, "w", encoding="utf-8") as f:
                for key, c in items:
                    f.write(f"{key}\t{c}\n")
        except OSError as exc:
            raise OSError(exc.errno, f"spill to temporary directory {self.dir} failed: "
                                     f"{exc.strerror}") from exc
        self.paths.append(path)
        log.debug("spilled %d entries to %s", len(items), path)

    def merged(self) -> Iterator[tuple[str, int]]:
        files = [open(p, encoding="utf-8") for p in self.paths]
        try:
            streams = [_read_run(f) for f in files]
            cur_key, cur_count = None, 0
            for key, c in heapq.merge(*streams):
                if key == cur_key:
                    cur_count += c
                else:
                    if cur_key is not None:
                        yield cur_key, cur_count
                    cur_key, cur_count = key, c
            if cur_key is not None:
                yield cur_key, cur_count
        finally:
            for f in files:
                f.close()

    def cleanup(self):
        shutil.rmtree(self.dir, ignore_errors=True)


def _read_run(f: TextIO):
    for line in f:
        key, c = line.rstrip("\n").split("\t")
        yield key, int(c)


def count_ngrams(sentences: Iterable, order: int, memory_budget: int = 1 << 30,
                 tmpdir=None) -> NGramCountTable:
    """Count all 1..order-grams of ``sentences``.

    Each non-empty sentence ``w1..wN`` contributes the predicted positions
    ``w1..wN, </s>``; histories are padded with a single ``<s>``. Empty
    sentences are skipped.
    """
    if not 1 <= order <= MAX_ORDER:
        raise CountingError(f"order must be in [1, {MAX_ORDER}], got {order}")
    if memory_budget < MIN_MEMORY_BUDGET:
        raise CountingError(
            f"memory budget {memory_budget} below floor of {MIN_MEMORY_BUDGET} bytes")

    buffer = Counter()
    used = 0
    runs = None
    n_sent = n_tok = 0
    try:
        for sentence in sentences:
            if not sentence:
                continue
            _check_tokens(sentence)
            n_sent += 1
            padded = [BOS, *sentence, EOS]
            n_tok += len(padded) - 1
            for i in range(1, len(padded)):
                for m in range(1, min(order, i + 1) + 1):
                    key = tuple(padded[i - m + 1:i + 1])
                    if key in buffer:
                        buffer[key] += 1
                    else:
                        buffer[key] = 1
                        used += entry_bytes(m)
            if used > memory_budget:
                if runs is None:
                    runs = _SpillRuns(tmpdir)
                runs.spill(buffer)
                buffer = Counter()
                used = 0

        counts = [dict() for _ in range(order)]
        if runs is None:
            for key in sorted(buffer, key=_sort_key):
                counts[len(key) - 1][key] = buffer[key]
        else:
            if buffer:
                runs.spill(buffer)
            buffer = None
            for key, c in runs.merged():
                gram = tuple(key.split(" "))
                counts[len(gram) - 1][gram] = c
            log.info("merged %d spill runs", len(runs.paths))
    finally:
        if runs is not None:
            runs.cleanup()
    return NGramCountTable(order, counts, n_sent, n_tok)


def _sort_key(gram: tuple) -> bytes:
    return " ".join(gram).encode("utf-8")


@dataclass(frozen=True)
class ThresholdConfig:
    """Minimum count per order; an m-gram is kept iff its count >= min_count[m]."""

    min_count: dict

    def __post_init__(self):
        for m, c in self.min_count.items():
            if int(m) < 1 or int(c) < 1:
                raise ValueError(f"invalid threshold {m}:{c}")

    @classmethod
    def default(cls, order: int = 3) -> "ThresholdConfig":
        # keep every unigram; higher orders need count > 3
        return cls({1: 1, **{m: 4 for m in range(2, order + 1)}})

    @classmethod
    def parse(cls, text: str) -> "ThresholdConfig":
        """Parse ``"1,4,4"`` (positional by order) or ``"1:1,2:4"``."""
        parts = [p for p in text.split(",") if p.strip()]
        if all(":" in p for p in parts):
            return cls({int(k): int(v) for k, v in (p.split(":") for p in parts)})
        return cls({m: int(v) for m, v in enumerate(parts, 1)})


def apply_thresholds(table: NGramCountTable, cfg: ThresholdConfig) -> NGramCountTable:
    missing = [m for m in range(1, table.order + 1) if m not in cfg.min_count]
    if missing:
        raise ValueError(f"threshold config has no entry for orders {missing}")
    counts = []
    for m, level in enumerate(table.counts, 1):
        k = cfg.min_count[m]
        counts.append(level if k <= 1 else {g: c for g, c in level.items() if c >= k})
    return NGramCountTable(table.order, counts, table.total_sentences, table.total_tokens,
                           raw_lower=table.raw_lower, count_of_counts=table.count_of_counts)


def write_counts(table: NGramCountTable, sink: TextIO):
    """Write ``tok1 ... tokm<TAB>count`` lines, by order then bytewise."""
    for level in table.counts:
        for gram in sorted(level, key=_sort_key):
            sink.write(f"{' '.join(gram)}\t{level[gram]}\n")


def read_counts(source: TextIO, order: int | None = None) -> NGramCountTable:
    """Inverse of :func:`write_counts` for an unthresholded table.

    Sentence and token totals are recovered from the ``<s> w`` bigrams and
    the unigram counts, which requires ``order >= 2``.
    """
    levels: dict[int, dict] = {}
    for lineno, line in enumerate(source, 1):
        line = line.rstrip("\n")
        if not line:
            continue
        try:
            key, c = line.split("\t")
            gram = tuple(key.split(" "))
            levels.setdefault(len(gram), {})[gram] = int(c)
        except ValueError:
            raise CountingError(f"line {lineno}: malformed count line {line!r}") from None
    n = order or max(levels, default=1)
    counts = [levels.get(m, {}) for m in range(1, n + 1)]
    n_tok = sum(counts[0].values())
    n_sent = counts[0].get((EOS,), 0)
    return NGramCountTable(n, counts, n_sent, n_tok)
