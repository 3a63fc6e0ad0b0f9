"""Backoff model estimation from count tables.

The model is interpolated absolute discounting written in backoff form. For
a history h with raw count C(h) and a retained continuation w:

    P(w | h) = max(C(h w) - D, 0) / C(h) + D * N1+(h) / C(h) * P(w | h')

where h' drops the oldest word and N1+(h) is the number of retained
continuations of h. At the unigram level P(w | h') is the uniform
distribution over the vocabulary. Backoff weights are then solved so every
history's distribution sums to one.
"""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass

from .corpus import BOS, EOS, UNK
from .counting import NGramCountTable
from .model import LOG_ZERO, BackoffModel

log = logging.getLogger(__name__)

DISCOUNT_CLAMP = (0.1, 0.9)


class EstimationError(ValueError):
    pass


@dataclass(frozen=True)
class SmoothingConfig:
    """``discount`` is ``"auto"``, one float for all orders, or ``{order: float}``."""

    method: str = "absolute-discount-interpolated"
    discount: object = "auto"

    def __post_init__(self):
        if self.method != "absolute-discount-interpolated":
            raise ValueError(f"unsupported smoothing method {self.method!r}")
        values = []
        if isinstance(self.discount, dict):
            values = list(self.discount.values())
        elif self.discount != "auto":
            values = [self.discount]
        for d in values:
            if not 0.0 < float(d) < 1.0:
                raise ValueError(f"discount must be in (0, 1), got {d}")

    def discount_for(self, m: int, table: NGramCountTable) -> float:
        if self.discount == "auto":
            return auto_discount(table.count_of_counts[m - 1])
        if isinstance(self.discount, dict):
            d = self.discount.get(m, "auto")
            return auto_discount(table.count_of_counts[m - 1]) if d == "auto" else float(d)
        return float(self.discount)


def auto_discount(count_of_counts: dict) -> float:
    """Ney's estimate n1 / (n1 + 2 n2), clamped to [0.1, 0.9]."""
    n1, n2 = count_of_counts.get(1, 0), count_of_counts.get(2, 0)
    lo, hi = DISCOUNT_CLAMP
    if n1 + 2 * n2 == 0:
        return lo
    return min(max(n1 / (n1 + 2 * n2), lo), hi)


def mle_prob(table: NGramCountTable, gram) -> float:
    """Relative frequency C(gram) / C(history) from raw counts."""
    gram = tuple(gram)
    denom = table.context_count(gram[:-1])
    if denom <= 0:
        raise EstimationError(f"zero-count context {gram[:-1]}")
    level = table.counts[len(gram) - 1] if len(gram) > 1 else table.counts[0]
    return level.get(gram, 0) / denom


def _required_entries(table: NGramCountTable) -> list:
    """Retained grams per order plus any histories needed by higher orders.

    Returns one dict per order mapping gram -> count used in the estimate.
    Histories that were thresholded away come back with their raw count.
    """
    levels = [dict(c) for c in table.counts]
    for m in range(table.order, 1, -1):
        lower = levels[m - 2]
        for g in list(levels[m - 1]):
            h = g[:-1]
            if h not in lower and h != (BOS,):
                lower[h] = table.raw_lower[m - 2].get(h) or table.counts[m - 1][g]
    # every predicted word needs a unigram for the lower-order recursion
    for level in levels[1:]:
        for g in level:
            w = (g[-1],)
            if w not in levels[0]:
                levels[0][w] = table.raw_lower[0].get(w) or level[g]
    return levels


def estimate_model(table: NGramCountTable, cfg: SmoothingConfig = SmoothingConfig(),
                   vocabulary=None) -> BackoffModel:
    """Estimate an interpolated absolute-discounting model.

    ``vocabulary`` optionally extends the predictable vocabulary (e.g. with a
    lexicon), so models trained on different corpora share one word list.
    """
    n = table.order
    levels = _required_entries(table)
    vocab = {g[0] for g in levels[0]} | {EOS, UNK}
    if vocabulary is not None:
        vocab |= set(vocabulary)
    vocab.discard(BOS)
    if len(vocab) < 2:
        raise EstimationError("degenerate vocabulary")
    if not levels[0]:
        raise EstimationError("empty count table")

    discounts = [cfg.discount_for(m, table) for m in range(1, n + 1)]
    log.info("discounts per order: %s", ", ".join(f"{d:.4f}" for d in discounts))

    # unigrams
    d = discounts[0]
    total = sum(levels[0].values())
    gamma = d * len(levels[0]) / total
    uniform = 1.0 / len(vocab)
    uni = {}
    for w in vocab:
        p = max(levels[0].get((w,), 0) - d, 0.0) / total + gamma * uniform
        uni[(w,)] = math.log10(p)
    uni[(BOS,)] = LOG_ZERO
    model = BackoffModel(n, [uni] + [{} for _ in range(n - 1)])

    for m in range(2, n + 1):
        d = discounts[m - 1]
        by_history = defaultdict(list)
        for g, c in levels[m - 1].items():
            by_history[g[:-1]].append((g[-1], c))
        probs = model.logprob[m - 1]
        backoffs = model.backoff[m - 2]
        for h, conts in by_history.items():
            c_h = table.context_count(h)
            if c_h < sum(c for _, c in conts):
                # history was re-added with a smaller raw count than its continuations
                c_h = sum(c for _, c in conts)
            gamma = d * len(conts) / c_h
            h_low = h[1:]
            explicit, lower = [], []
            for w, c in conts:
                p_low = 10.0 ** model.score(h_low, w)
                explicit.append(max(c - d, 0.0) / c_h + gamma * p_low)
                lower.append(p_low)
            # mass of continuations lost to thresholding also goes to the backoff
            lost = (c_h - sum(c for _, c in conts)) / c_h
            denom = 1.0 - math.fsum(lower)
            if denom > 1e-12:
                alpha = gamma + lost / denom
            else:
                # continuations cover the vocabulary; fold any leftover mass back in
                s = math.fsum(explicit)
                explicit = [p / s for p in explicit]
                alpha = 1.0
            for (w, _), p in zip(conts, explicit):
                probs[h + (w,)] = math.log10(p)
            backoffs[h] = math.log10(alpha) if alpha > 0 else LOG_ZERO
    return model
