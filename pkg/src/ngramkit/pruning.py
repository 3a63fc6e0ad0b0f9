"""Relative-entropy pruning of backoff models.

For an entry (h, w) the cost of removal is the increase in relative entropy
between the original and the pruned model, weighted by the marginal P(h):

    delta = -P(h) * [ P(w|h) * (log P'(w|h) - log P(w|h))
                      + (log a'(h) - log a(h)) * B(h) ]

where P'(w|h) = a'(h) P(w|h') is the backed-off estimate after removal,
a'(h) the re-solved backoff weight, and B(h) the probability mass that h
already assigns through its backoff. Costs are in nats and are all computed
against the input model; an entry is removed iff ``delta < theta``.
"""

from __future__ import annotations

import logging
import math

from .corpus import BOS, EOS
from .model import BackoffModel, history_mass, solve_backoffs

log = logging.getLogger(__name__)

LN10 = math.log(10.0)


def context_log10_marginal(model: BackoffModel, history: tuple) -> float:
    """log10 P(h) by the chain rule; ``<s>`` at the start is scored as ``</s>``."""
    total = 0.0
    for i, w in enumerate(history):
        if w == BOS and i == 0:
            w = EOS
        total += model.score(history[:i], w)
    return total


def prune_costs(model: BackoffModel) -> dict:
    """Cost (nats) of removing each entry of order >= 2, against ``model``."""
    costs = {}
    for h in model.children():
        num, den, words = history_mass(model, h)
        log_bo = model.backoff[len(h) - 1].get(h, 0.0) * LN10
        p_h = 10.0 ** context_log10_marginal(model, h)
        level = model.logprob[len(h)]
        for w in words:
            lp = level[h + (w,)]
            p = 10.0 ** lp
            p_low = 10.0 ** model.score(h[1:], w)
            new_num, new_den = num + p, den + p_low
            new_log_bo = math.log(new_num) - math.log(new_den)
            delta_log_p = (math.log(p_low) + new_log_bo) - lp * LN10
            costs[h + (w,)] = -p_h * (p * delta_log_p + num * (new_log_bo - log_bo))
    return costs


def prune(model: BackoffModel, theta: float) -> BackoffModel:
    """Remove entries whose relative-entropy cost is below ``theta``.

    Orders are visited from highest to lowest so that an entry heading only
    removed entries becomes a candidate itself. Unigrams are never removed.
    Backoff weights are re-solved for the result.
    """
    if theta < 0 or math.isnan(theta):
        raise ValueError(f"theta must be >= 0, got {theta}")
    if theta == 0 or model.order == 1:
        return model.copy()
    costs = prune_costs(model)
    kept = [dict(level) for level in model.logprob]
    for m in range(model.order, 1, -1):
        heads = {g[:-1] for g in kept[m]} if m < model.order else set()
        level = model.logprob[m - 1]
        kept[m - 1] = {g: lp for g, lp in level.items()
                       if g in heads or not costs[g] < theta}
        log.info("order %d: removed %d of %d", m, len(level) - len(kept[m - 1]), len(level))
    return solve_backoffs(BackoffModel(model.order, kept))
