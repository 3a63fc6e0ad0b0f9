import io
import json
import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ngramkit.evaluation import perplexity
from ngramkit.merging import (BOConfig, InterpolationWeights, export_static, matrix_perplexity,
                              mixture_perplexity, mixture_query, optimize_weights_bo,
                              optimize_weights_em, softmax_weights, validation_matrix,
                              weights_to_coords, write_trace)

from conftest import merge_fixture, random_corpus, train
from oracles import backoff_query


@pytest.fixture(scope="module")
def pair():
    return merge_fixture(0, 2)


@pytest.fixture(scope="module")
def triple():
    return merge_fixture(1, 3)


def test_weights_validation():
    with pytest.raises(ValueError):
        InterpolationWeights((0.5, 0.6))
    with pytest.raises(ValueError):
        InterpolationWeights((1.5, -0.5))
    with pytest.raises(ValueError):
        InterpolationWeights(())
    assert InterpolationWeights.normalized([2, 2]).w == (0.5, 0.5)
    assert InterpolationWeights.corner(3, 1).w == (0.0, 1.0, 0.0)


def test_mixture_query_oracle(pair):
    models, valid = pair
    w = (0.3, 0.7)
    for s in valid[:5]:
        hist = ["<s>"]
        for tok in s + ["</s>"]:
            expect = sum(wi * 10 ** backoff_query(m, hist[-1:], tok) for wi, m in zip(w, models))
            assert 10 ** mixture_query(models, w, hist, tok) == pytest.approx(expect, rel=1e-12)
            hist.append(tok)


def test_corners_reproduce_components(triple):
    models, valid = triple
    for i, m in enumerate(models):
        mix = mixture_perplexity(models, InterpolationWeights.corner(3, i), valid).perplexity
        assert abs(mix - perplexity(m, valid).perplexity) <= 1e-9


def test_matrix_matches_positional(triple):
    models, valid = triple
    probs = validation_matrix(models, valid)
    w = (0.2, 0.5, 0.3)
    assert matrix_perplexity(probs, w) == pytest.approx(
        mixture_perplexity(models, w, valid).perplexity, rel=1e-10)


def test_em_monotone_and_optimal(triple):
    models, valid = triple
    res = optimize_weights_em(models, valid)
    assert res.converged
    trace = res.ppl_trace
    assert all(b <= a * (1 + 1e-12) for a, b in zip(trace, trace[1:]))
    # no simplex point on a coarse grid beats the EM optimum
    probs = validation_matrix(models, valid)
    best = trace[-1]
    for a in np.linspace(0, 1, 21):
        for b in np.linspace(0, 1 - a, 21):
            assert matrix_perplexity(probs, (a, b, 1 - a - b)) >= best * (1 - 1e-9)


def test_em_rejects_single_model(pair):
    models, valid = pair
    with pytest.raises(ValueError):
        optimize_weights_em(models[:1], valid)


def test_em_warns_when_not_converged(pair):
    models, valid = pair
    with pytest.warns(RuntimeWarning):
        res = optimize_weights_em(models, valid, max_iter=2, tol=0.0)
    assert not res.converged


def test_softmax_coordinates_roundtrip():
    rng = np.random.default_rng(0)
    for _ in range(50):
        w = rng.dirichlet(np.ones(4))
        z = weights_to_coords(w, box=30.0)
        assert np.allclose(softmax_weights(z), w)


def test_bo_config_validation():
    with pytest.raises(ValueError):
        BOConfig(budget=5, init_points=8).validate(2)
    with pytest.raises(ValueError):
        BOConfig(budget=50, init_points=3).validate(3)


def test_bo_design_trace_and_determinism(pair):
    models, valid = pair
    cfg = BOConfig(budget=12, init_points=4, seed=3)
    a = optimize_weights_bo(models, valid, cfg)
    b = optimize_weights_bo(models, valid, cfg)
    assert [t.weights for t in a.trace] == [t.weights for t in b.trace]
    assert len(a.trace) == 12
    assert a.trace[0].weights == (1.0, 0.0)
    assert a.trace[1].weights == (0.0, 1.0)
    assert a.trace[2].weights == (0.5, 0.5)
    assert a.ppl == min(t.ppl for t in a.trace)
    for t in a.trace:
        InterpolationWeights(t.weights)
    buf = io.StringIO()
    write_trace(a.trace, buf)
    rows = [json.loads(line) for line in buf.getvalue().splitlines()]
    assert [r["iteration"] for r in rows] == list(range(12))


def test_bo_close_to_em(pair):
    models, valid = pair
    em = optimize_weights_em(models, valid)
    bo = optimize_weights_bo(models, valid, BOConfig(budget=20, init_points=4, seed=0))
    assert bo.ppl <= em.ppl_trace[-1] * 1.02
    assert bo.ppl >= em.ppl_trace[-1] * (1 - 1e-9)


def test_export_static_normalized_and_close(triple):
    models, valid = triple
    w = (0.2, 0.5, 0.3)
    static = export_static(models, w)
    static.check()
    # explicit entries carry the exact mixture probability
    for g in list(static.logprob[1])[:200]:
        assert static.logprob[1][g] == pytest.approx(mixture_query(models, w, g[:-1], g[-1]),
                                                     abs=1e-12)
    dyn = mixture_perplexity(models, w, valid).perplexity
    assert perplexity(static, valid).perplexity == pytest.approx(dyn, rel=0.01)


def test_export_single_model_is_identity(pair):
    models, _ = pair
    static = export_static(models[:1], (1.0,))
    for a, b in zip(static.logprob, models[0].logprob):
        assert a.keys() == b.keys()
        assert all(abs(a[g] - b[g]) <= 1e-6 for g in a)
    for g in models[0].logprob[0]:
        assert abs(static.backoff[0].get(g, 0.0) - models[0].backoff[0].get(g, 0.0)) <= 1e-6


def test_mixture_identities(pair):
    models, valid = pair
    m = models[0]
    for s in valid[:3]:
        hist = ["<s>"]
        for tok in s:
            assert mixture_query([m], (1.0,), hist, tok) == m.query(hist, tok)
            assert mixture_query([m, m], (0.3, 0.7), hist, tok) == pytest.approx(
                m.query(hist, tok), abs=1e-12)
            hist.append(tok)


def test_em_identical_models_stay_at_init(pair):
    models, valid = pair
    res = optimize_weights_em([models[0], models[0]], valid, init=(0.3, 0.7))
    assert res.weights.w == pytest.approx((0.3, 0.7), abs=1e-12)


def test_em_prefers_in_domain_model(pair):
    from conftest import markov_corpus
    models, _ = pair
    in_domain, _ = markov_corpus(0, 250, vocab_size=30)
    res = optimize_weights_em(models, in_domain[:100])
    assert res.weights.w[0] > 0.9


def test_bo_dominated_by_em(triple):
    models, valid = triple
    probs = validation_matrix(models, valid)
    em_ppl = optimize_weights_em(models, valid, tol=1e-10, probs=probs).ppl_trace[-1]
    bo = optimize_weights_bo(models, valid, BOConfig(budget=15, init_points=6), probs=probs)
    corners = [matrix_perplexity(probs, InterpolationWeights.corner(3, i).w) for i in range(3)]
    assert bo.ppl <= min(corners)
    assert all(em_ppl <= t.ppl + 1e-9 for t in bo.trace)


def test_export_vocabulary_mismatch():
    a = train([["a", "b"]])
    b = train([["a", "c"]])
    with pytest.raises(ValueError, match="vocabulary mismatch"):
        export_static([a, b], (0.5, 0.5))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.floats(0.0, 1.0))
def test_export_normalized_property(seed, a):
    rng = random.Random(seed)
    vocab = [f"w{i}" for i in range(12)]
    models = [train(random_corpus(rng, 150, 12, max_len=6), order=rng.randint(1, 3),
                    vocabulary=vocab) for _ in range(2)]
    static = export_static(models, InterpolationWeights.normalized([a, 1 - a + 1e-300]))
    static.check(tol=1e-9)
    assert math.isfinite(perplexity(static, [vocab[:5]]).perplexity)
