"""Merging k backoff models into a linear mixture with optimized weights.

The objective is validation perplexity of the exact (dynamic) mixture
``P(w|h) = sum_i w_i P_i(w|h)``. Weights are searched with Bayesian
optimization (GP surrogate, expected improvement) over a softmax
parametrization of the simplex; EM on the same objective is concave and
serves as the reference optimum. :func:`export_static` turns a weighted
mixture into a single ARPA-style backoff model.
"""

from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence, TextIO

import numpy as np
from scipy.optimize import minimize
from scipy.stats import norm
from sklearn.exceptions import ConvergenceWarning
from sklearn.gaussian_process import GaussianProcessRegressor
from sklearn.gaussian_process.kernels import ConstantKernel, Matern, WhiteKernel

from .corpus import BOS, EOS
from .evaluation import PerplexityReport, report_from_scores, sentence_positions
from .model import BackoffModel, solve_backoffs

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class InterpolationWeights:
    w: tuple

    def __post_init__(self):
        w = tuple(float(x) for x in self.w)
        if not w:
            raise ValueError("empty weight vector")
        if any(not math.isfinite(x) or x < 0 for x in w):
            raise ValueError(f"weights must be finite and nonnegative: {w}")
        if abs(math.fsum(w) - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1, got {math.fsum(w)!r}")
        object.__setattr__(self, "w", w)

    @classmethod
    def normalized(cls, values) -> "InterpolationWeights":
        values = np.clip(np.asarray(values, dtype=float), 0.0, None)
        return cls(tuple(values / values.sum()))

    @classmethod
    def uniform(cls, k: int) -> "InterpolationWeights":
        return cls.normalized(np.ones(k))

    @classmethod
    def corner(cls, k: int, i: int) -> "InterpolationWeights":
        return cls(tuple(1.0 if j == i else 0.0 for j in range(k)))

    def __len__(self):
        return len(self.w)

    def __iter__(self):
        return iter(self.w)

    def as_array(self) -> np.ndarray:
        return np.array(self.w)


def _as_weights(w) -> InterpolationWeights:
    return w if isinstance(w, InterpolationWeights) else InterpolationWeights(tuple(w))


def mixture_query(models: Sequence[BackoffModel], w, context, word: str) -> float:
    """log10 of sum_i w_i P_i(word | context); each model maps its own OOVs."""
    w = _as_weights(w)
    if len(models) != len(w) or not models:
        raise ValueError(f"{len(models)} models but {len(w)} weights")
    terms = [(wi, m) for wi, m in zip(w, models) if wi > 0]
    if len(terms) == 1 and terms[0][0] == 1.0:
        return terms[0][1].query(context, word)
    return math.log10(math.fsum(wi * 10.0 ** m.query(context, word) for wi, m in terms))


def mixture_perplexity(models, w, corpus) -> PerplexityReport:
    """Perplexity of the dynamic mixture, position by position via :func:`mixture_query`.

    A token counts as OOV when it is outside every model's vocabulary.
    """
    w = _as_weights(w)
    keep = max(m.order for m in models) - 1
    scores, oov = [], 0
    for sentence in corpus:
        if not sentence:
            continue
        hist = [BOS]
        for tok in [*sentence, EOS]:
            scores.append(mixture_query(models, w, hist, tok))
            oov += all((tok,) not in m.logprob[0] for m in models)
            hist = (hist + [tok])[-keep:] if keep else []
    return report_from_scores(scores, oov)


def validation_matrix(models, corpus) -> np.ndarray:
    """(positions x k) matrix of linear probabilities P_i(w_t | h_t)."""
    cols = []
    for m in models:
        col = [m.score(h, w) for s in corpus if s for h, w, _ in sentence_positions(m, s)]
        cols.append(col)
    if not cols[0]:
        raise ValueError("empty validation set")
    return 10.0 ** np.array(cols).T


def matrix_perplexity(probs: np.ndarray, w) -> float:
    mix = probs @ np.asarray(w, dtype=float)
    return float(10.0 ** (-np.log10(mix).mean()))


@dataclass
class EMResult:
    weights: InterpolationWeights
    converged: bool
    iterations: int
    ppl_trace: list


def optimize_weights_em(models, validation, tol: float = 1e-7, max_iter: int = 10000,
                        init=None, probs: np.ndarray | None = None) -> EMResult:
    """EM re-estimation of mixture weights on the validation set.

    Each step sets w_i to the mean posterior responsibility of model i.
    Stops when no weight moves by ``tol`` or more; otherwise returns the last
    iterate with ``converged=False`` and a warning.
    """
    if len(models) < 2:
        raise ValueError("need at least two models")
    if probs is None:
        probs = validation_matrix(models, validation)
    if not np.all(np.isfinite(probs)) or np.any(probs <= 0):
        raise ValueError("validation set has non-finite scores under some model")
    k = probs.shape[1]
    w = np.full(k, 1.0 / k) if init is None else _as_weights(init).as_array()
    trace = [matrix_perplexity(probs, w)]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        mix = probs @ w
        new = w * (probs / mix[:, None]).mean(axis=0)
        new /= new.sum()
        step = np.abs(new - w).max()
        w = new
        trace.append(matrix_perplexity(probs, w))
        if step < tol:
            converged = True
            break
    if not converged:
        warnings.warn(f"EM did not converge in {max_iter} iterations", RuntimeWarning)
    return EMResult(InterpolationWeights.normalized(w), converged, it, trace)


@dataclass(frozen=True)
class BOConfig:
    budget: int = 50
    init_points: int = 8
    seed: int = 0
    # half-width of the softmax coordinate box; exp(-box) is the smallest
    # non-corner weight ratio proposed. Wider boxes spend the budget on the
    # flat region near the corners.
    box: float = 4.0
    n_candidates: int = 2048

    def validate(self, k: int):
        if not self.budget >= self.init_points >= k + 1:
            raise ValueError(f"need budget >= init_points >= k+1 "
                             f"(budget={self.budget}, init_points={self.init_points}, k={k})")


@dataclass(frozen=True)
class TracePoint:
    iteration: int
    weights: tuple
    ppl: float

    def to_json(self) -> str:
        return json.dumps({"iteration": self.iteration, "weights": list(self.weights),
                           "ppl": self.ppl})


@dataclass
class BOResult:
    weights: InterpolationWeights
    ppl: float
    trace: list = field(default_factory=list)


def softmax_weights(z: np.ndarray) -> np.ndarray:
    """Map k-1 free coordinates to the simplex (last logit pinned at 0)."""
    logits = np.append(z, 0.0)
    logits -= logits.max()
    e = np.exp(logits)
    return e / e.sum()


def weights_to_coords(w: np.ndarray, box: float) -> np.ndarray:
    floor = math.exp(-box)
    lw = np.log(np.maximum(w, floor))
    return np.clip(lw[:-1] - lw[-1], -box, box)


def expected_improvement(mu, sigma, best):
    sigma = np.maximum(sigma, 1e-12)
    imp = best - mu
    z = imp / sigma
    return imp * norm.cdf(z) + sigma * norm.pdf(z)


def optimize_weights_bo(models, validation, cfg: BOConfig = BOConfig(),
                        probs: np.ndarray | None = None) -> BOResult:
    """Bayesian optimization of mixture weights against validation perplexity.

    The initial design is every corner of the simplex, its center, and
    Dirichlet(1) draws up to ``init_points``. A GP on log perplexity over the
    softmax coordinates then proposes the point maximizing expected
    improvement until ``budget`` evaluations are spent. Returns the best
    evaluated point; the trace records every evaluation in order.
    """
    k = len(models)
    if k < 2:
        raise ValueError("need at least two models")
    cfg.validate(k)
    if probs is None:
        probs = validation_matrix(models, validation)
    rng = np.random.default_rng(cfg.seed)
    d = k - 1

    design = [np.eye(k)[i] for i in range(k)] + [np.full(k, 1.0 / k)]
    while len(design) < cfg.init_points:
        design.append(rng.dirichlet(np.ones(k)))

    X, y, trace = [], [], []

    def evaluate(w, z=None):
        w = InterpolationWeights.normalized(w)
        ppl = matrix_perplexity(probs, w.w)
        trace.append(TracePoint(len(trace), w.w, ppl))
        # proposals keep their own coordinates; mapping back through the
        # weights would clip tiny weights and hide the point from the GP
        X.append(weights_to_coords(w.as_array(), cfg.box) if z is None else np.asarray(z))
        y.append(math.log(ppl))
        log.debug("eval %d: w=%s ppl=%.6f", len(trace) - 1, np.round(w.w, 4), ppl)

    for w in design:
        evaluate(w)

    kernel = (ConstantKernel(1.0, (1e-3, 1e3))
              * Matern(length_scale=np.full(d, 2.0), length_scale_bounds=(1e-2, 1e2), nu=2.5)
              + WhiteKernel(1e-6, (1e-10, 1e-2)))
    bounds = [(-cfg.box, cfg.box)] * d
    while len(trace) < cfg.budget:
        gp = GaussianProcessRegressor(kernel=kernel, normalize_y=True,
                                      n_restarts_optimizer=2, random_state=cfg.seed)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConvergenceWarning)
            gp.fit(np.array(X), np.array(y))
        best = min(y)
        best_z = X[int(np.argmin(y))]

        def neg_ei(z):
            mu, sd = gp.predict(np.atleast_2d(z), return_std=True)
            return -expected_improvement(mu, sd, best)[0]

        cand = np.vstack([
            rng.uniform(-cfg.box, cfg.box, size=(cfg.n_candidates, d)),
            np.clip(best_z + rng.normal(0, 0.5, size=(cfg.n_candidates // 4, d)),
                    -cfg.box, cfg.box),
        ])
        mu, sd = gp.predict(cand, return_std=True)
        ei = expected_improvement(mu, sd, best)
        start = cand[int(np.argmax(ei))]
        res = minimize(neg_ei, start, method="L-BFGS-B", bounds=bounds)
        z_next = res.x if res.fun < -ei.max() else start
        evaluate(softmax_weights(z_next), z_next)

    i_best = int(np.argmin([t.ppl for t in trace]))
    return BOResult(InterpolationWeights(trace[i_best].weights), trace[i_best].ppl, trace)


def write_trace(trace, sink: TextIO):
    for point in trace:
        sink.write(point.to_json() + "\n")


def export_static(models: Sequence[BackoffModel], w) -> BackoffModel:
    """Collapse a weighted mixture into one backoff model.

    The entry set is the union of all models' n-grams and each entry gets the
    exact mixture probability; backoff weights are re-solved so every
    history normalizes. Models must share one vocabulary.
    """
    w = _as_weights(w)
    if len(models) != len(w):
        raise ValueError(f"{len(models)} models but {len(w)} weights")
    vocab = models[0].vocabulary
    for m in models[1:]:
        if m.vocabulary != vocab:
            diff = sorted(m.vocabulary ^ vocab)[:5]
            raise ValueError(f"vocabulary mismatch between models (e.g. {diff})")
    order = max(m.order for m in models)
    levels = []
    for n in range(1, order + 1):
        grams = set()
        for m in models:
            if n <= m.order:
                grams.update(m.logprob[n - 1])
        levels.append({g: mixture_query(models, w, g[:-1], g[-1]) for g in grams})
    return solve_backoffs(BackoffModel(order, levels), strict=True)


def load_validation(paths) -> list:
    sentences = []
    for path in paths:
        with open(path, encoding="utf-8") as f:
            sentences.extend(s for s in (line.split() for line in f) if s)
    if not sentences:
        raise ValueError("empty validation set")
    return sentences
