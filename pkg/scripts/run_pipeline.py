"""End-to-end workflow on the bundled corpus: train, prune, merge, evaluate.

The King James text is split into two "datasets" (Old and New Testament).
One trigram model is trained per dataset with the count > 3 thresholds, a
pruning sweep is run on the larger model, and the two models are merged
with weights found by Bayesian optimization on held-out New Testament
verses, using EM as the reference optimum.

usage: python scripts/run_pipeline.py [--out runs/pipeline] [--budget 30]
"""

import argparse
import json
import logging
import time
from pathlib import Path

from ngramkit.arpa import save_arpa
from ngramkit.corpus import load_lexicon, read_sentences
from ngramkit.counting import ThresholdConfig, apply_thresholds, count_ngrams
from ngramkit.estimation import SmoothingConfig, estimate_model
from ngramkit.evaluation import perplexity
from ngramkit.merging import (BOConfig, export_static, optimize_weights_bo, optimize_weights_em,
                              validation_matrix, write_trace)
from ngramkit.pruning import prune

ROOT = Path(__file__).resolve().parent.parent
NT_FIRST_VERSE = "the book of the generation of jesus christ"

log = logging.getLogger("pipeline")


def fit(sentences, lexicon, order=3):
    table = count_ngrams(sentences, order)
    table = apply_thresholds(table, ThresholdConfig.default(order))
    return estimate_model(table, SmoothingConfig(), vocabulary=lexicon.words)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=ROOT / "runs" / "pipeline")
    ap.add_argument("--budget", type=int, default=30, help="BO evaluations")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(name)s %(message)s")
    args.out.mkdir(parents=True, exist_ok=True)

    lexicon = load_lexicon(ROOT / "data" / "kjv" / "lexicon.txt")
    verses = list(read_sentences([ROOT / "data" / "kjv" / "corpus.txt"], lexicon))
    start = next(i for i, s in enumerate(verses) if " ".join(s).startswith(NT_FIRST_VERSE))
    old, new = verses[:start], verses[start:]
    # every 10th New Testament verse is held out for validation/test
    new_train = [s for i, s in enumerate(new) if i % 10]
    held = [s for i, s in enumerate(new) if i % 10 == 0]
    valid, test = held[::2], held[1::2]
    log.info("old=%d new_train=%d valid=%d test=%d", len(old), len(new_train), len(valid), len(test))

    t0 = time.perf_counter()
    models = {"old": fit(old, lexicon), "new": fit(new_train, lexicon)}
    for name, m in models.items():
        save_arpa(m, args.out / f"{name}.arpa")
    summary = {"train_seconds": round(time.perf_counter() - t0, 2),
               "sizes": {k: m.counts() for k, m in models.items()},
               "test_ppl": {k: perplexity(m, test).perplexity for k, m in models.items()}}

    sweep = []
    for theta in [0.0, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5]:
        p = prune(models["old"], theta)
        sweep.append({"theta": theta, "entries": len(p), "test_ppl": perplexity(p, test).perplexity})
        log.info("prune theta=%g entries=%d", theta, len(p))
    summary["prune_sweep_old"] = sweep

    pair = [models["old"], models["new"]]
    probs = validation_matrix(pair, valid)
    em = optimize_weights_em(pair, valid, probs=probs)
    bo = optimize_weights_bo(pair, valid, BOConfig(budget=args.budget, init_points=4,
                                                   seed=args.seed), probs=probs)
    with open(args.out / "bo_trace.jsonl", "w", encoding="utf-8") as f:
        write_trace(bo.trace, f)
    merged = export_static(pair, bo.weights)
    save_arpa(merged, args.out / "merged.arpa")
    summary["merge"] = {
        "em_weights": em.weights.w, "em_valid_ppl": em.ppl_trace[-1],
        "bo_weights": bo.weights.w, "bo_valid_ppl": bo.ppl,
        "merged_test_ppl": perplexity(merged, test).perplexity,
    }
    (args.out / "summary.json").write_text(json.dumps(summary, indent=1))
    print(json.dumps(summary, indent=1))


if __name__ == "__main__":
    main()
