"""Compare Bayesian-optimized mixture weights with the EM optimum.

Domains are contiguous slices of the bundled corpus. For each seed, k
bigram models are trained on k slices, a validation set mixes held-out
verses of every slice in random proportions, and BO (for each budget) is
scored by its gap to the EM perplexity.

usage: python scripts/bo_vs_em.py [--seeds 5] [--budgets 10 20 50] [--k 2 3 4]
"""

import argparse
import json
import time
from pathlib import Path

import numpy as np

from ngramkit.corpus import load_lexicon, read_sentences
from ngramkit.counting import count_ngrams
from ngramkit.estimation import estimate_model
from ngramkit.merging import BOConfig, optimize_weights_bo, optimize_weights_em, validation_matrix

ROOT = Path(__file__).resolve().parent.parent


def fixture(verses, lexicon, k, seed, n_train=1500, n_valid=400):
    rng = np.random.default_rng(seed)
    starts = rng.choice(len(verses) // (n_train + n_valid), size=k, replace=False)
    share = rng.dirichlet(np.full(k, 2.0))
    models, valid = [], []
    for s, p in zip(starts, share):
        block = verses[s * (n_train + n_valid):(s + 1) * (n_train + n_valid)]
        models.append(estimate_model(count_ngrams(block[:n_train], 2), vocabulary=lexicon.words))
        valid.extend(block[n_train:n_train + max(10, int(p * n_valid))])
    return models, valid


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--budgets", type=int, nargs="+", default=[10, 20, 50])
    ap.add_argument("--k", type=int, nargs="+", default=[2, 3, 4])
    ap.add_argument("--out", type=Path, help="write rows as JSON lines")
    args = ap.parse_args()

    lexicon = load_lexicon(ROOT / "data" / "kjv" / "lexicon.txt")
    verses = list(read_sentences([ROOT / "data" / "kjv" / "corpus.txt"], lexicon))
    rows = []
    print(f"{'k':>2} {'seed':>4} {'budget':>6} {'EM ppl':>10} {'BO ppl':>10} {'gap':>8} {'sec':>6}")
    for k in args.k:
        for seed in range(args.seeds):
            models, valid = fixture(verses, lexicon, k, seed)
            probs = validation_matrix(models, valid)
            em = optimize_weights_em(models, valid, probs=probs).ppl_trace[-1]
            for budget in args.budgets:
                cfg = BOConfig(budget=budget, init_points=min(budget, max(k + 1, 2 * k)), seed=seed)
                t0 = time.perf_counter()
                bo = optimize_weights_bo(models, valid, cfg, probs=probs)
                dt = time.perf_counter() - t0
                rows.append({"k": k, "seed": seed, "budget": budget, "em_ppl": em,
                             "bo_ppl": bo.ppl, "gap": bo.ppl / em - 1, "seconds": dt})
                print(f"{k:>2} {seed:>4} {budget:>6} {em:>10.4f} {bo.ppl:>10.4f} "
                      f"{bo.ppl / em - 1:>8.3%} {dt:>6.1f}")
    for budget in args.budgets:
        gaps = [r["gap"] for r in rows if r["budget"] == budget]
        print(f"budget {budget}: median gap {np.median(gaps):.3%}, worst {max(gaps):.3%}")
    if args.out:
        args.out.write_text("".join(json.dumps(r) + "\n" for r in rows))


if __name__ == "__main__":
    main()
