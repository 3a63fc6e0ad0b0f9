"""Backoff queries and corpus perplexity."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Iterable

from .corpus import BOS, EOS, UNK
from .model import BackoffModel


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class PerplexityReport:
    tokens: int
    oov_tokens: int
    log10_prob_sum: float
    perplexity: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def query(model: BackoffModel, context, word: str) -> float:
    """log10 P(word | context) by the backoff recursion.

    Tokens unknown to the model are scored as ``<unk>``; the context is cut to
    the last ``order - 1`` tokens.
    """
    return model.query(context, word)


def sentence_positions(model: BackoffModel, sentence):
    """Yield (history, word, is_oov) for each predicted position of a sentence."""
    uni = model.logprob[0]
    n = model.order
    hist = (BOS,)
    for tok in [*sentence, EOS]:
        oov = (tok,) not in uni
        w = UNK if oov else tok
        yield hist, w, oov
        hist = (hist + (w,))[-(n - 1):] if n > 1 else ()


def score_corpus(model: BackoffModel, corpus: Iterable) -> tuple[list, int]:
    """Per-position log10 probabilities over a corpus, plus the OOV count."""
    scores = []
    oov = 0
    for sentence in corpus:
        if not sentence:
            continue
        for hist, w, is_oov in sentence_positions(model, sentence):
            scores.append(model.score(hist, w))
            oov += is_oov
    return scores, oov


def report_from_scores(scores, oov: int) -> PerplexityReport:
    if not scores:
        raise EvaluationError("empty evaluation corpus")
    total = math.fsum(scores)
    ppl = 10.0 ** (-total / len(scores))
    return PerplexityReport(len(scores), oov, total, ppl)


def perplexity(model: BackoffModel, corpus: Iterable) -> PerplexityReport:
    """Perplexity over every predicted position, ``</s>`` included.

    OOV tokens are scored as ``<unk>`` and counted in ``oov_tokens``.
    """
    scores, oov = score_corpus(model, corpus)
    return report_from_scores(scores, oov)
