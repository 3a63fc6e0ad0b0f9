"""Command line entry point: ``ngramkit <subcommand> ...``.

Exit status is 0 on success, 1 on usage errors and 2 on data errors.
Logs go to stderr as JSON lines, including one ``stage`` record with the
wall time of every pipeline stage.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import logging
import re
import sys
import time

from threadpoolctl import threadpool_limits

from . import arpa, corpus, counting, estimation, evaluation, keyword, merging, pruning

log = logging.getLogger("ngramkit")

EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


class JsonLogFormatter(logging.Formatter):
    def format(self, record):
        out = {"time": round(record.created, 3), "level": record.levelname,
               "logger": record.name, "msg": record.getMessage()}
        out.update(getattr(record, "fields", {}))
        return json.dumps(out, ensure_ascii=False)


@contextlib.contextmanager
def stage(name: str):
    t0 = time.perf_counter()
    yield
    dt = time.perf_counter() - t0
    log.info("stage %s done", name, extra={"fields": {"stage": name, "seconds": round(dt, 4)}})


_SIZE = re.compile(r"^\s*(\d+(?:\.\d+)?)\s*([kmgt]?)(?:i?b)?\s*$", re.I)


def parse_size(text) -> int:
    """``"16M"``, ``"1GiB"``, ``"4096"`` -> bytes (binary multiples)."""
    if isinstance(text, int):
        return text
    match = _SIZE.match(str(text))
    if not match:
        raise argparse.ArgumentTypeError(f"bad size {text!r}")
    scale = {"": 1, "k": 2**10, "m": 2**20, "g": 2**30, "t": 2**40}[match.group(2).lower()]
    return int(float(match.group(1)) * scale)


def parse_discount(text):
    if text == "auto":
        return "auto"
    parts = [float(p) for p in str(text).split(",")]
    if len(parts) == 1:
        return parts[0]
    return {m: d for m, d in enumerate(parts, 1)}


def parse_weights(text):
    return [float(x) for x in str(text).split(",")]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")

    def exit(self, status=0, message=None):
        if message:
            sys.stderr.write(message)
        if status:
            raise UsageError(message or "")
        raise SystemExit(0)


def _lexicon_args(p, required=False):
    p.add_argument("--lexicon", required=required,
                   help="lexicon file; when given, input lines are filtered and segmented")
    p.add_argument("--lexicon-mode", choices=["word-only", "word+pronunciation"],
                   default="word-only")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output on stdout")
    common.add_argument("--config", help="JSON file with default values for flags")
    common.add_argument("--threads", type=int, default=1,
                        help="cap on worker threads (numeric libraries)")
    common.add_argument("--log-level", default="INFO")

    parser = _Parser(prog="ngramkit", description="n-gram language model toolkit")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("segment", parents=[common], help="filter and segment raw text")
    p.add_argument("inputs", nargs="+")
    _lexicon_args(p, required=True)
    p.add_argument("--no-filter", action="store_true",
                   help="keep sentences with uncovered characters (they become <unk>)")
    p.add_argument("--output", "-o")

    p = sub.add_parser("count", parents=[common], help="count n-grams")
    p.add_argument("inputs", nargs="+")
    _lexicon_args(p)
    p.add_argument("--order", type=int, default=3)
    p.add_argument("--memory-budget", type=parse_size, default=parse_size("1G"))
    p.add_argument("--min-count", help="per-order thresholds, e.g. 1,4,4")
    p.add_argument("--output", "-o", required=True)

    p = sub.add_parser("train", parents=[common],
                       help="segment, filter, count, threshold, estimate and write ARPA")
    p.add_argument("inputs", nargs="+")
    _lexicon_args(p)
    p.add_argument("--lexicon-vocab", action="store_true",
                   help="add every lexicon word to the model vocabulary")
    p.add_argument("--order", type=int, default=3)
    p.add_argument("--min-count", help="per-order thresholds (default 1,4,4,...)")
    p.add_argument("--discount", default="auto", help="'auto', one value, or one per order")
    p.add_argument("--memory-budget", type=parse_size, default=parse_size("1G"))
    p.add_argument("--output", "-o", required=True)

    p = sub.add_parser("prune", parents=[common], help="relative-entropy pruning")
    p.add_argument("--model", required=True)
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--output", "-o", required=True)

    p = sub.add_parser("ppl", parents=[common], help="perplexity of a model on text")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--model", required=True)
    _lexicon_args(p)

    p = sub.add_parser("merge-optimize", parents=[common],
                       help="optimize mixture weights on a validation set")
    p.add_argument("--models", nargs="+", required=True)
    p.add_argument("--validation", nargs="+", required=True)
    _lexicon_args(p)
    p.add_argument("--optimizer", choices=["bo", "em"], default="bo")
    p.add_argument("--budget", type=int, default=50)
    p.add_argument("--init-points", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-7)
    p.add_argument("--max-iter", type=int, default=10000)
    p.add_argument("--trace", help="write evaluated points as JSON lines")

    p = sub.add_parser("merge-export", parents=[common],
                       help="write a weighted mixture as one ARPA model")
    p.add_argument("--models", nargs="+", required=True)
    p.add_argument("--weights", type=parse_weights,
                   help="comma-separated weights, or use --weights-file")
    p.add_argument("--weights-file", help="JSON output of merge-optimize")
    p.add_argument("--output", "-o", required=True)

    p = sub.add_parser("keyword-augment", parents=[common],
                       help="duplicate/remove sentences to hit keyword targets")
    p.add_argument("--input", required=True, help="segmented corpus, one sentence per line")
    p.add_argument("--keywords", required=True, help="lines of 'keyword<TAB>target_count'")
    p.add_argument("--max-dup", type=int, default=keyword.DEFAULT_MAX_DUP)
    p.add_argument("--output", "-o", required=True)

    return parser


def _load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as f:
            cfg = json.load(f)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise UsageError("config file must hold a JSON object")
    return cfg


def parse_args(argv):
    """Parse ``argv``; values from ``--config`` act as defaults that flags override."""
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    choices = parser._subparsers._group_actions[0].choices
    command = next((a for a in argv if a in choices), None)
    if known.config and command:
        subparser = choices[command]
        actions = {a.dest: a for a in subparser._actions}
        defaults = {}
        for key, value in _load_config(known.config).items():
            dest = key.replace("-", "_")
            if dest not in actions or dest in ("config", "help"):
                raise UsageError(f"unknown config key {key!r} for {command}")
            action = actions[dest]
            if action.type is not None and isinstance(value, str):
                value = action.type(value)
            defaults[dest] = value
            # a value from the file satisfies a required flag
            action.required = False
        subparser.set_defaults(**defaults)
    return parser.parse_args(argv)


def _read_corpus(args, stats=None):
    lex = None
    if getattr(args, "lexicon", None):
        with stage("load_lexicon"):
            lex = corpus.load_lexicon(args.lexicon, args.lexicon_mode)
        log.info("lexicon loaded", extra={"fields": {"words": len(lex),
                                                      "duplicates": lex.n_duplicates}})
    return lex, corpus.read_sentences(args.inputs, lex, stats)


def _emit(args, payload: dict, text: str | None = None):
    if args.json:
        print(json.dumps(payload, ensure_ascii=False, sort_keys=True))
    else:
        print(text if text is not None else
              "\n".join(f"{k}: {v}" for k, v in payload.items()))


def cmd_segment(args):
    lex = corpus.load_lexicon(args.lexicon, args.lexicon_mode)
    kept = dropped = n_tok = n_unk = 0
    out = open(args.output, "w", encoding="utf-8") if args.output else sys.stdout
    try:
        with stage("segment"):
            for path in args.inputs:
                with open(path, encoding="utf-8") as f:
                    for line in f:
                        if not args.no_filter and not corpus.filter_sentence(line, lex):
                            dropped += 1
                            continue
                        toks = corpus.segment_fmm(line, lex)
                        kept += 1
                        n_tok += len(toks)
                        n_unk += toks.count(corpus.UNK)
                        out.write(" ".join(toks) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    summary = {"kept": kept, "dropped": dropped, "tokens": n_tok, "unk_tokens": n_unk}
    if args.output:
        _emit(args, summary)
    else:
        log.info("segment summary", extra={"fields": summary})


def _thresholds(args, order):
    if args.min_count:
        cfg = counting.ThresholdConfig.parse(args.min_count)
    else:
        cfg = counting.ThresholdConfig.default(order)
    missing = [m for m in range(1, order + 1) if m not in cfg.min_count]
    if missing:
        raise UsageError(f"--min-count has no value for orders {missing}")
    return cfg


def cmd_count(args):
    stats = {}
    _, sentences = _read_corpus(args, stats)
    with stage("count"):
        table = counting.count_ngrams(sentences, args.order, args.memory_budget)
    if args.min_count:
        with stage("threshold"):
            table = counting.apply_thresholds(table, _thresholds(args, args.order))
    with stage("write_counts"):
        with open(args.output, "w", encoding="utf-8") as f:
            counting.write_counts(table, f)
    _emit(args, {"ngrams": [len(c) for c in table.counts], "sentences": table.total_sentences,
                 "tokens": table.total_tokens, **stats})


def cmd_train(args):
    cfg = _thresholds(args, args.order)
    smoothing = estimation.SmoothingConfig(discount=parse_discount(args.discount))
    stats = {}
    lex, sentences = _read_corpus(args, stats)
    with stage("count"):
        table = counting.count_ngrams(sentences, args.order, args.memory_budget)
    with stage("threshold"):
        table = counting.apply_thresholds(table, cfg)
    with stage("estimate"):
        vocab = lex.words if (lex is not None and args.lexicon_vocab) else None
        model = estimation.estimate_model(table, smoothing, vocabulary=vocab)
    with stage("write_arpa"):
        nbytes = arpa.save_arpa(model, args.output)
    _emit(args, {"ngrams": model.counts(), "sentences": table.total_sentences,
                 "tokens": table.total_tokens, "bytes": nbytes,
                 "min_count": {str(k): v for k, v in cfg.min_count.items()}, **stats})


def cmd_prune(args):
    with stage("read_arpa"):
        model = arpa.load_arpa(args.model)
    with stage("prune"):
        pruned = pruning.prune(model, args.theta)
    with stage("write_arpa"):
        arpa.save_arpa(pruned, args.output)
    _emit(args, {"before": model.counts(), "after": pruned.counts(), "theta": args.theta})


def cmd_ppl(args):
    with stage("read_arpa"):
        model = arpa.load_arpa(args.model)
    _, sentences = _read_corpus(args)
    with stage("perplexity"):
        report = evaluation.perplexity(model, sentences)
    print(report.to_json())


def _validation(args):
    lex = None
    if args.lexicon:
        lex = corpus.load_lexicon(args.lexicon, args.lexicon_mode)
    sents = [s for s in corpus.read_sentences(args.validation, lex) if s]
    if not sents:
        raise ValueError("empty validation set")
    return sents


def cmd_merge_optimize(args):
    with stage("read_arpa"):
        models = [arpa.load_arpa(p) for p in args.models]
    validation = _validation(args)
    with stage("score_validation"):
        probs = merging.validation_matrix(models, validation)
    k = len(models)
    with stage(f"optimize_{args.optimizer}"):
        if args.optimizer == "em":
            res = merging.optimize_weights_em(models, validation, args.tol, args.max_iter,
                                              probs=probs)
            weights, ppl = res.weights, res.ppl_trace[-1]
            trace = [merging.TracePoint(i, (), p) for i, p in enumerate(res.ppl_trace)]
            extra = {"converged": res.converged, "iterations": res.iterations}
        else:
            init = args.init_points if args.init_points is not None else max(k + 1, 2 * k)
            cfg = merging.BOConfig(budget=args.budget, init_points=init, seed=args.seed)
            try:
                cfg.validate(k)
            except ValueError as exc:
                raise UsageError(str(exc)) from None
            res = merging.optimize_weights_bo(models, validation, cfg, probs=probs)
            weights, ppl, trace = res.weights, res.ppl, res.trace
            extra = {"evaluations": len(trace)}
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as f:
            merging.write_trace(trace, f)
    _emit(args, {"weights": list(weights.w), "ppl": ppl, "optimizer": args.optimizer,
                 "models": args.models, **extra})


def cmd_merge_export(args):
    if (args.weights is None) == (args.weights_file is None):
        raise UsageError("give exactly one of --weights or --weights-file")
    if args.weights_file:
        with open(args.weights_file, encoding="utf-8") as f:
            try:
                w = json.load(f)["weights"]
            except (json.JSONDecodeError, KeyError, TypeError):
                raise ValueError(f"{args.weights_file}: expected the JSON report of "
                                 "'merge-optimize --json'") from None
    else:
        w = args.weights
    with stage("read_arpa"):
        models = [arpa.load_arpa(p) for p in args.models]
    if len(w) != len(models):
        raise UsageError(f"{len(models)} models but {len(w)} weights")
    weights = merging.InterpolationWeights(tuple(w))
    with stage("export"):
        merged = merging.export_static(models, weights)
    with stage("write_arpa"):
        arpa.save_arpa(merged, args.output)
    _emit(args, {"ngrams": merged.counts(), "weights": list(weights.w)})


def cmd_keyword_augment(args):
    spec = keyword.load_keyword_spec(args.keywords)
    with open(args.input, encoding="utf-8") as f:
        sents = [line.split() for line in f]
    with stage("keyword_augment"):
        out, report = keyword.augment_keywords(sents, spec, args.max_dup)
    with open(args.output, "w", encoding="utf-8") as f:
        for s in out:
            f.write(" ".join(s) + "\n")
    print(report.to_json())


COMMANDS = {
    "segment": cmd_segment,
    "count": cmd_count,
    "train": cmd_train,
    "prune": cmd_prune,
    "ppl": cmd_ppl,
    "merge-optimize": cmd_merge_optimize,
    "merge-export": cmd_merge_export,
    "keyword-augment": cmd_keyword_augment,
}


class _StderrHandler(logging.StreamHandler):
    """Writes to whatever ``sys.stderr`` is at emit time."""

    @property
    def stream(self):
        return sys.stderr

    @stream.setter
    def stream(self, value):
        pass


def _setup_logging(level):
    handler = _StderrHandler()
    handler.setFormatter(JsonLogFormatter())
    root = logging.getLogger("ngramkit")
    root.handlers[:] = [handler]
    root.setLevel(level.upper() if isinstance(level, str) else level)
    root.propagate = False


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = parse_args(argv)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    try:
        _setup_logging(args.log_level)
    except ValueError as exc:
        print(f"ngramkit: bad --log-level: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.threads < 1:
        print("ngramkit: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        with threadpool_limits(args.threads):
            with stage(args.command):
                COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"ngramkit {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, KeyError, OSError) as exc:
        log.error("%s", exc, extra={"fields": {"error": type(exc).__name__}})
        print(f"ngramkit {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return 0


if __name__ == "__main__":
    sys.exit(main())
