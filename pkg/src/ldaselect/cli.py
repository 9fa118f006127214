"""Command-line entry point: ``ldaselect <subcommand> ...``.

Exit codes: 0 success, 1 validation error, 2 numerical error, 3 I/O error.
Failures print one line ``error: <kind>: <reason>`` on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from ldaselect import criteria as crit
from ldaselect.corpus import FORMATS, SPARSE_TRIPLETS, load_corpus, save_corpus
from ldaselect.errors import NumericalError, ValidationError
from ldaselect.evaluation import BINARY, WEIGHTED, best_match, classification_scores
from ldaselect.generator import Dgp, generate_corpus, reduce_topics
from ldaselect.harness import (
    CORPUS_STREAM, EVAL_COLUMNS, FIT_STREAM, ExperimentConfig, derive_seed, resolve_threads,
    run_monte_carlo, score_models,
)
from ldaselect.lda import FitConfig, LdaModel, corpus_log_likelihood, fit_lda
from ldaselect.presets import preset_names
from ldaselect.sbic import SbicInput, compute_sbic_with_diagnostics

log = logging.getLogger("ldaselect")

SUBCOMMANDS = ("generate", "fit", "score", "select", "evaluate", "mc-run", "report")


class ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def build_config(args) -> ExperimentConfig:
    """Defaults, then the JSON config file, then --set overrides, then flags."""
    data: dict = {}
    if args.config:
        data.update(ExperimentConfig.from_json(args.config).to_dict())
    for item in args.set or []:
        if "=" not in item:
            raise ValidationError(f"override {item!r} is not of the form key=value")
        key, value = item.split("=", 1)
        data[key.strip()] = _parse_value(value)
    flags = {
        "preset": args.preset, "seed": args.seed, "replications": args.replications,
        "k_min": args.k_min, "k_max": args.k_max, "threads": args.threads, "out": args.out,
    }
    if getattr(args, "dgp", None):
        data["dgp_path"] = args.dgp
        data["preset"] = None
    for key, value in flags.items():
        if value is not None:
            data[key] = value
            if key == "preset":
                data["dgp_path"] = None
    if args.criteria:
        data["criteria"] = [c.strip() for c in args.criteria.split(",") if c.strip()]
    if args.optop_cutoff:
        data["optop_cutoffs"] = [float(x) for x in args.optop_cutoff]
    data["threads"] = resolve_threads(data.get("threads") if "threads" in data else None)
    return ExperimentConfig.from_dict(data)


def _add_common(p, out_help="output path"):
    p.add_argument("--config", help="JSON experiment config")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
    p.add_argument("--preset", choices=preset_names())
    p.add_argument("--seed", type=int)
    p.add_argument("--replications", type=int)
    p.add_argument("--k-min", type=int)
    p.add_argument("--k-max", type=int)
    p.add_argument("--criteria", help="comma-separated subset of sbic,cao_juan,mimno,optop")
    p.add_argument("--optop-cutoff", type=float, action="append", help="repeat for several cutoffs")
    p.add_argument("--threads", type=int, help="worker processes (fallback: LDASELECT_THREADS)")
    p.add_argument("--out", help=out_help)
    p.add_argument("-v", "--verbose", action="count", default=0)


def make_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="ldaselect", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)

    p = sub.add_parser("generate", help="synthesize a corpus from a DGP")
    _add_common(p, "output directory")
    p.add_argument("--dgp", help="DGP directory (instead of --preset)")
    p.add_argument("--model", help="LDA model directory to prune into a DGP")
    p.add_argument("--source-corpus", help="corpus the --model was fitted on (for document lengths)")
    p.add_argument("--format", choices=FORMATS, default=SPARSE_TRIPLETS)
    p.add_argument("--percentile", type=float, default=0.95)
    p.add_argument("--iterative", action="store_true", help="prune one pair at a time, re-pairing survivors")
    p.add_argument("--replication", type=int, default=1)

    p = sub.add_parser("fit", help="fit LDA for every K in the range")
    _add_common(p, "directory receiving one model directory per K")
    p.add_argument("--corpus", required=True)
    p.add_argument("--format", choices=FORMATS, default=SPARSE_TRIPLETS)
    p.add_argument("--replication", type=int, default=1)

    p = sub.add_parser("score", help="score all configured criteria over fitted models")
    _add_common(p, "scores CSV path (default: <models>/scores.csv)")
    p.add_argument("--corpus", required=True)
    p.add_argument("--format", choices=FORMATS, default=SPARSE_TRIPLETS)
    p.add_argument("--models", required=True)

    p = sub.add_parser("select", help="choose K per criterion from a scores CSV")
    _add_common(p, "selection CSV path (default: next to the scores)")
    p.add_argument("--scores", required=True)

    p = sub.add_parser("evaluate", help="match selected models against the DGP topics")
    _add_common(p, "eval CSV path (default: <models>/eval.csv)")
    p.add_argument("--dgp", help="DGP directory (instead of --preset)")
    p.add_argument("--models", required=True)
    p.add_argument("--selected", required=True)
    p.add_argument("--corpus", required=True, help="corpus the models were fitted on (vocabulary mapping)")
    p.add_argument("--format", choices=FORMATS, default=SPARSE_TRIPLETS)
    p.add_argument("--threshold", type=float)
    p.add_argument("--replication", type=int, default=1)

    p = sub.add_parser("mc-run", help="run the Monte Carlo experiment")
    _add_common(p, "output directory")
    p.add_argument("--dgp", help="DGP directory (instead of --preset)")

    p = sub.add_parser("report", help="summary tables, histogram/scatter CSVs and figures")
    _add_common(p, "Monte Carlo output directory")
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("--figure-format", choices=("png", "svg", "pdf"), default="png")
    return parser


def _model_dirs(models: Path) -> dict[int, Path]:
    dirs = {}
    for d in sorted(models.iterdir()) if models.is_dir() else []:
        if d.is_dir() and (d / "meta.json").exists():
            dirs[int(json.loads((d / "meta.json").read_text())["K"])] = d
    if not dirs:
        raise ValidationError(f"no model directories under {models}")
    return dirs


def cmd_generate(args):
    cfg = build_config(args)
    out = Path(cfg.out if args.out else "generated")
    if args.model:
        if not args.source_corpus:
            raise ValidationError("--model needs --source-corpus for the document lengths")
        source = load_corpus(args.source_corpus, args.format)
        model = LdaModel.load(args.model)
        dgp = reduce_topics(model, args.percentile, source.doc_lengths, vocab=source.vocab, iterative=args.iterative)
    else:
        dgp = cfg.load_dgp()
    out.mkdir(parents=True, exist_ok=True)
    dgp.save(out / "dgp")
    corpus, _ = generate_corpus(dgp, derive_seed(cfg.seed, args.replication, CORPUS_STREAM)).compact()
    save_corpus(corpus, out / "corpus.csv", format=args.format)
    print(f"wrote {out / 'corpus.csv'}: J={corpus.n_docs} I={corpus.n_words} N={corpus.total_words} K_true={dgp.K_true}")


def cmd_fit(args):
    cfg = build_config(args)
    corpus = load_corpus(args.corpus, args.format)
    if args.k_min is None and args.k_max is None and cfg.k_min is None and cfg.k_max is None:
        lo, hi = cfg.candidate_range(cfg.load_dgp())
    else:
        lo = cfg.k_min if cfg.k_min is not None else cfg.k_max
        hi = cfg.k_max if cfg.k_max is not None else cfg.k_min
    out = Path(args.out or "models")
    for K in range(lo, hi + 1):
        fit = FitConfig(K, cfg.iterations, cfg.alpha, cfg.eta, derive_seed(cfg.seed, args.replication, FIT_STREAM, K))
        fit_lda(corpus, fit).save(out / f"K{K:03d}")
        log.info("fitted K=%d", K)
    print(f"wrote models K={lo}..{hi} to {out}")


def cmd_score(args):
    cfg = build_config(args)
    corpus = load_corpus(args.corpus, args.format)
    models = {K: LdaModel.load(d) for K, d in _model_dirs(Path(args.models)).items()}
    scores = score_models(corpus, models, cfg.criteria_config(), cfg.criterion_names(), cfg.precision_bits)
    out = Path(args.out) if args.out else Path(args.models) / "scores.csv"
    crit.write_scores(scores, out)
    if crit.SBIC in cfg.criterion_names():
        lls = {K: corpus_log_likelihood(corpus, m) for K, m in sorted(models.items())}
        _, diag = compute_sbic_with_diagnostics(
            SbicInput(lls, corpus.total_words, corpus.n_words, corpus.n_docs), precision_bits=cfg.precision_bits)
        debug = {"precision_bits": diag.precision_bits, "log_max": diag.log_max, "rows": diag.rows}
        out.with_name("sbic-debug.json").write_text(json.dumps(debug, indent=2) + "\n")
    print(f"wrote {len(scores)} scores to {out}")


def cmd_select(args):
    scores = crit.read_scores(args.scores)
    out = Path(args.out) if args.out else Path(args.scores).with_name("selected.csv")
    with out.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["criterion", "K_selected"])
        for name, group in crit.group_by_criterion(scores).items():
            k = crit.select_optimal_k(group)
            w.writerow([name, k])
            print(f"{name}\t{k}")


def cmd_evaluate(args):
    cfg = build_config(args)
    dgp = Dgp.load(args.dgp) if args.dgp else cfg.load_dgp()
    corpus = load_corpus(args.corpus, args.format)
    threshold = args.threshold if args.threshold is not None else dgp.cutoff
    if threshold is None:
        raise ValidationError("no matching threshold: pass --threshold or use a DGP with a pruning cutoff")
    columns = _vocab_columns(corpus.vocab.tokens, dgp)
    dirs = _model_dirs(Path(args.models))
    out = Path(args.out) if args.out else Path(args.models) / "eval.csv"
    with open(args.selected, newline="") as fh:
        selected = [(r["criterion"], int(r["K_selected"])) for r in csv.DictReader(fh)]
    with out.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EVAL_COLUMNS)
        for name, k in selected:
            if k not in dirs:
                raise ValidationError(f"no fitted model for K={k} under {args.models}")
            model = LdaModel.load(dirs[k])
            if model.n_words != corpus.n_words:
                raise ValidationError(f"model vocabulary size {model.n_words} does not match corpus {corpus.n_words}")
            beta_est = np.zeros((model.K, dgp.n_words))
            beta_est[:, columns] = model.beta
            match = best_match(dgp.beta_true, beta_est, threshold, method=cfg.match_method)
            for mode in (BINARY, WEIGHTED):
                s = classification_scores(match, mode)
                w.writerow([cfg.dgp_name() if not args.dgp else Path(args.dgp).name, name, args.replication, k,
                            repr(s.recall), repr(s.precision), repr(s.f1), mode])
    print(f"wrote {out}")


def _vocab_columns(tokens, dgp: Dgp) -> np.ndarray:
    from ldaselect.corpus import Vocabulary

    vocab = dgp.vocab if dgp.vocab is not None else Vocabulary.synthetic(dgp.n_words)
    try:
        return np.array([vocab.index[t] for t in tokens], dtype=np.int64)
    except KeyError as exc:
        raise ValidationError(f"corpus token {exc.args[0]!r} is not in the DGP vocabulary") from None


def cmd_mc_run(args):
    cfg = build_config(args)
    summary = run_monte_carlo(cfg)
    print(f"{summary.completed} replication(s) complete in {cfg.out}")
    for name, cs in summary.criteria.items():
        print(f"{crit.display_name(name):<10} mean={cs.mean:.2f} median={cs.median:.1f} "
              f"f1={cs.eval['f1_mean']:.3f}")


def cmd_report(args):
    from ldaselect.report import build_report

    out = Path(args.out or "mc-out")
    summary = build_report(out, figures=not args.no_figures, fmt=args.figure_format)
    print(f"report for {summary.completed} replication(s) written to {out}")


COMMANDS = {
    "generate": cmd_generate, "fit": cmd_fit, "score": cmd_score, "select": cmd_select,
    "evaluate": cmd_evaluate, "mc-run": cmd_mc_run, "report": cmd_report,
}


def main(argv=None) -> int:
    try:
        args = make_parser().parse_args(argv)
        level = logging.WARNING - 10 * min(getattr(args, "verbose", 0), 2)
        logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
        COMMANDS[args.command](args)
    except ValidationError as exc:
        return _fail("validation", exc, 1)
    except NumericalError as exc:
        return _fail("numerical", exc, 2)
    except OSError as exc:
        return _fail("io", exc, 3)
    except (ValueError, KeyError) as exc:
        return _fail("validation", exc, 1)
    return 0


def _fail(kind, exc, code) -> int:
    reason = " ".join(str(exc).split())
    print(f"error: {kind}: {reason}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
