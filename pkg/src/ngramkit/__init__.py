"""Statistical n-gram language modeling toolkit."""

from .corpus import BOS, EOS, UNK, Lexicon, filter_sentence, load_lexicon, segment_fmm
from .counting import NGramCountTable, ThresholdConfig, apply_thresholds, count_ngrams
from .estimation import SmoothingConfig, estimate_model, mle_prob
from .model import BackoffModel

__all__ = [
    "BOS", "EOS", "UNK", "Lexicon", "load_lexicon", "filter_sentence", "segment_fmm",
    "NGramCountTable", "ThresholdConfig", "count_ngrams", "apply_thresholds",
    "SmoothingConfig", "estimate_model", "mle_prob", "BackoffModel",
]
