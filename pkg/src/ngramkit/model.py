"""In-memory backoff language model."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .corpus import BOS, EOS, UNK

# log10 probability stored for <s>, which is never predicted
LOG_ZERO = -99.0


@dataclass
class BackoffModel:
    """Backoff n-gram model in ARPA form.

    ``logprob[m - 1]`` maps m-gram tuples to log10 probabilities and
    ``backoff[m - 1]`` maps m-gram tuples to log10 backoff weights. A missing
    backoff means 0.0 (multiplier 1).
    """

    order: int
    logprob: list
    backoff: list = field(default_factory=list)

    def __post_init__(self):
        while len(self.backoff) < self.order:
            self.backoff.append({})

    @property
    def vocabulary(self) -> set:
        return {g[0] for g in self.logprob[0]}

    @property
    def predictable(self) -> list:
        """Unigrams that can be predicted: the vocabulary minus ``<s>``."""
        return sorted(g[0] for g in self.logprob[0] if g[0] != BOS)

    def counts(self) -> list:
        return [len(level) for level in self.logprob]

    def __len__(self):
        return sum(self.counts())

    def __contains__(self, gram):
        gram = tuple(gram)
        return 0 < len(gram) <= self.order and gram in self.logprob[len(gram) - 1]

    def map_unk(self, tokens) -> tuple:
        uni = self.logprob[0]
        return tuple(t if (t,) in uni else UNK for t in tokens)

    def score(self, history: tuple, word: str) -> float:
        """log10 P(word | history) for already-mapped tokens."""
        n = self.order
        if len(history) > n - 1:
            history = history[len(history) - n + 1:] if n > 1 else ()
        total = 0.0
        while True:
            lp = self.logprob[len(history)].get(history + (word,))
            if lp is not None:
                return total + lp
            if not history:
                raise KeyError(f"{word!r} has no unigram entry")
            total += self.backoff[len(history) - 1].get(history, 0.0)
            history = history[1:]

    def query(self, context, word: str) -> float:
        """log10 P(word | context); unknown tokens are mapped to ``<unk>``."""
        mapped = self.map_unk(list(context) + [word])
        return self.score(mapped[:-1], mapped[-1])

    def contexts(self):
        """Every history the model can condition on: () and all entries below the top order."""
        yield ()
        for level in self.logprob[: self.order - 1]:
            yield from level

    def children(self) -> dict:
        """Map each history to the words it has explicit entries for.

        Cached on first use; models are not mutated after construction.
        """
        index = self.__dict__.get("_children_cache")
        if index is None:
            index = {}
            for level in self.logprob[1:]:
                for g in level:
                    index.setdefault(g[:-1], []).append(g[-1])
            self.__dict__["_children_cache"] = index
        return index

    def is_context(self, gram: tuple) -> bool:
        """True if ``gram`` heads at least one higher-order entry."""
        return tuple(gram) in self.children()

    def check(self, tol: float = 1e-6, contexts=None):
        """Verify structural invariants and per-context normalization.

        Raises ``ValueError`` on the first violation. ``contexts`` restricts
        the (exhaustive, O(|contexts| * |V|)) normalization check.
        """
        if (UNK,) not in self.logprob[0]:
            raise ValueError("model has no <unk> unigram")
        for m in range(2, self.order + 1):
            lower = self.logprob[m - 2]
            for g in self.logprob[m - 1]:
                if g[:-1] not in lower:
                    raise ValueError(f"context of {g} missing")
        for level in self.logprob:
            for g, lp in level.items():
                if not math.isfinite(lp) or lp > 1e-9:
                    raise ValueError(f"bad log probability {lp} for {g}")
        vocab = self.predictable
        for h in (self.contexts() if contexts is None else contexts):
            total = math.fsum(10.0 ** self.score(h, w) for w in vocab)
            if abs(total - 1.0) > tol:
                raise ValueError(f"context {h} sums to {total!r}")

    def copy(self) -> "BackoffModel":
        return BackoffModel(self.order, [dict(x) for x in self.logprob],
                            [dict(x) for x in self.backoff])


def history_mass(model: BackoffModel, h: tuple):
    """Leftover mass of history ``h``.

    Returns ``(1 - sum P(w|h), 1 - sum P(w|h'), words)`` where the sums run
    over the words with an explicit ``h w`` entry.
    """
    level = model.logprob[len(h)]
    words = model.children().get(h, [])
    num = 1.0 - math.fsum(10.0 ** level[h + (w,)] for w in words)
    den = 1.0 - math.fsum(10.0 ** model.score(h[1:], w) for w in words)
    return num, den, words


def solve_backoffs(model: BackoffModel, strict: bool = False) -> BackoffModel:
    """Set every backoff weight so each history's distribution sums to one.

    a(h) = (1 - sum P(w|h)) / (1 - sum P(w|h')) over the explicit
    continuations of h, solved from low to high order. With ``strict``, a
    history whose denominator vanishes while mass is left over raises.
    """
    model.backoff = [{} for _ in range(model.order)]
    by_order = [[] for _ in range(model.order)]
    for h in model.children():
        by_order[len(h)].append(h)
    for m in range(1, model.order):
        for h in by_order[m]:
            num, den, _ = history_mass(model, h)
            if den < 1e-12:
                if strict and num > 1e-9:
                    raise ValueError(f"cannot solve backoff for context {' '.join(h)!r}: "
                                     f"denominator {den:.3g}")
                model.backoff[m - 1][h] = 0.0
            elif num <= 0:
                model.backoff[m - 1][h] = LOG_ZERO
            else:
                model.backoff[m - 1][h] = math.log10(num) - math.log10(den)
    return model


def uniform_model(words) -> BackoffModel:
    """Unigram model giving every word (plus ``</s>`` and ``<unk>``) equal probability."""
    vocab = set(words) | {EOS, UNK}
    lp = -math.log10(len(vocab))
    uni = {(w,): lp for w in vocab}
    uni[(BOS,)] = LOG_ZERO
    return BackoffModel(1, [uni])
