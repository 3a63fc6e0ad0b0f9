import random
from pathlib import Path

import numpy as np
import pytest

from ngramkit.counting import ThresholdConfig, apply_thresholds, count_ngrams
from ngramkit.estimation import SmoothingConfig, estimate_model

FIXTURES = Path(__file__).parent / "fixtures"
DATA = Path(__file__).parent.parent / "data"

TOY = [["a", "b"], ["a"]]


def random_corpus(rng, n_tokens, vocab_size, max_len=12):
    vocab = [f"w{i}" for i in range(vocab_size)]
    # Zipf-ish weights so that higher-order n-grams repeat
    weights = [1.0 / (i + 1) for i in range(vocab_size)]
    out, total = [], 0
    while total < n_tokens:
        n = min(rng.randint(1, max_len), n_tokens - total)
        out.append(rng.choices(vocab, weights, k=n))
        total += n
    return out


def markov_corpus(seed, n_sent, vocab_size=40, concentration=0.3, mean_len=8):
    """Sentences from a random first-order Markov chain (one chain per seed)."""
    rng = np.random.default_rng(seed)
    vocab = [f"v{i}" for i in range(vocab_size)]
    start = rng.dirichlet(np.full(vocab_size, concentration))
    trans = rng.dirichlet(np.full(vocab_size, concentration), size=vocab_size)
    out = []
    for _ in range(n_sent):
        n = max(1, int(rng.poisson(mean_len)))
        s = [int(rng.choice(vocab_size, p=start))]
        for _ in range(n - 1):
            s.append(int(rng.choice(vocab_size, p=trans[s[-1]])))
        out.append([vocab[i] for i in s])
    return out, vocab


def train(sentences, order=2, discount="auto", min_count=None, vocabulary=None):
    table = count_ngrams(sentences, order)
    if min_count:
        table = apply_thresholds(table, ThresholdConfig(min_count))
    return estimate_model(table, SmoothingConfig(discount=discount), vocabulary=vocabulary)


@pytest.fixture
def toy_model():
    return train(TOY, order=2, discount=0.75)


@pytest.fixture(scope="session")
def trigram_fixture():
    """Small trigram model (<= 500 entries) on a seeded random corpus."""
    rng = random.Random(7)
    sents = random_corpus(rng, 260, 12, max_len=6)
    model = train(sents, order=3, discount=0.7)
    assert len(model) <= 500
    return sents, model


@pytest.fixture(scope="session")
def kjv_slice():
    with open(DATA / "kjv" / "corpus.txt", encoding="utf-8") as f:
        lines = [next(f) for _ in range(600)]
    return [line.split() for line in lines]


def merge_fixture(seed, k, n_train=250, n_valid=120, order=2):
    """k domain models over one shared vocabulary plus a validation set that mixes the domains.

    Each domain is its own Markov chain; validation draws from every domain
    with random proportions, so the best mixture weights are interior.
    """
    rng = np.random.default_rng(seed)
    domains = [markov_corpus(seed * 100 + i, n_train + n_valid, vocab_size=30)
               for i in range(k)]
    vocab = domains[0][1]
    models = [train(corpus[:n_train], order=order, vocabulary=vocab) for corpus, _ in domains]
    share = rng.dirichlet(np.full(k, 4.0))
    valid = []
    for (corpus, _), p in zip(domains, share):
        valid.extend(corpus[n_train:n_train + max(5, int(round(p * n_valid)))])
    return models, valid


def separated_thetas(costs, quantiles=(0.1, 0.25, 0.4, 0.55, 0.7, 0.85, 0.95)):
    """Pruning thresholds at cost quantiles, each midway between two distinct costs."""
    values = sorted(set(costs.values()))
    out = []
    for q in quantiles:
        i = min(int(q * (len(values) - 1)), len(values) - 2)
        # skip near-ties so float noise cannot flip a comparison
        while i < len(values) - 2 and values[i + 1] - values[i] < 1e-9 * values[i + 1]:
            i += 1
        out.append((values[i] + values[i + 1]) / 2)
    return sorted(set(out))
