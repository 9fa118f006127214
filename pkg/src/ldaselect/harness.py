"""Monte Carlo orchestration, checkpointing and summaries.

One replication generates a corpus from the DGP, fits LDA for every K in the
candidate range, scores every criterion, selects K per criterion and matches
the selected model against the generating topics. Replications are written to
``results.csv`` strictly in replication order, so the file does not depend on
the number of worker processes, and a rerun on the same output directory
continues after the last completed replication.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

import numpy as np
from scipy import stats

from ldaselect import criteria as crit
from ldaselect.criteria import CriteriaConfig, CriterionScore
from ldaselect.errors import LdaSelectError, ValidationError
from ldaselect.evaluation import BINARY, GREEDY, WEIGHTED, best_match, classification_scores
from ldaselect.generator import Dgp, generate_corpus
from ldaselect.lda import DEFAULT_ALPHA, DEFAULT_ETA, DEFAULT_ITERATIONS, FitConfig, corpus_log_likelihood, fit_lda
from ldaselect.presets import PRESETS, make_preset
from ldaselect.sbic import DEFAULT_PRECISION_BITS, SbicInput, compute_sbic

log = logging.getLogger(__name__)

CORPUS_STREAM = 0
FIT_STREAM = 1

BASE_CRITERIA = ("sbic", "cao_juan", "mimno", "optop")

RESULT_COLUMNS = (
    "dgp", "replication", "criterion", "K_selected",
    "recall", "precision", "f1",
    "recall_weighted", "precision_weighted", "f1_weighted",
)
SCORE_COLUMNS = ("replication", "criterion", "K", "value", "direction")
FAILURE_COLUMNS = ("replication", "error")
EVAL_COLUMNS = ("dgp", "criterion", "replication", "K_selected", "recall", "precision", "f1", "mode")


def derive_seed(master: int, *keys: int) -> int:
    """Seed for one random stream, a pure function of the master seed and keys."""
    seq = np.random.SeedSequence([int(master), *(int(k) for k in keys)])
    return int(seq.generate_state(1, dtype=np.uint64)[0])


@dataclass
class ExperimentConfig:
    preset: str | None = "mini"
    dgp_path: str | None = None
    replications: int = 50
    k_min: int | None = None
    k_max: int | None = None
    criteria: list[str] = field(default_factory=lambda: list(BASE_CRITERIA))
    mimno_top_words: int = 20
    mimno_epsilon: float = math.exp(-12)
    optop_cutoffs: list[float] = field(default_factory=lambda: [0.05, 0.20])
    iterations: int = DEFAULT_ITERATIONS
    alpha: float = DEFAULT_ALPHA
    eta: float = DEFAULT_ETA
    precision_bits: int = DEFAULT_PRECISION_BITS
    match_method: str = GREEDY
    threshold: float | None = None
    seed: int = 0
    out: str = "mc-out"
    threads: int = 1

    # fields that do not change any per-replication result
    RUNTIME_FIELDS = ("replications", "out", "threads")

    def __post_init__(self):
        if self.replications < 1:
            raise ValidationError("replications must be >= 1")
        if (self.preset is None) == (self.dgp_path is None):
            raise ValidationError("set exactly one of preset and dgp_path")
        if self.preset is not None and self.preset not in PRESETS:
            raise ValidationError(f"unknown preset {self.preset!r}; choose from {sorted(PRESETS)}")
        unknown = [c for c in self.criteria if c not in BASE_CRITERIA]
        if unknown:
            raise ValidationError(f"unknown criteria {unknown}; choose from {list(BASE_CRITERIA)}")
        if self.threads < 1:
            raise ValidationError("threads must be >= 1")
        self.criteria_config()  # validates mimno/optop settings
        FitConfig(K=1, iterations=self.iterations, alpha=self.alpha, eta=self.eta)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise ValidationError(f"unknown configuration key(s): {', '.join(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ValidationError("config file must hold a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def criteria_config(self) -> CriteriaConfig:
        return CriteriaConfig(self.mimno_top_words, self.mimno_epsilon, tuple(self.optop_cutoffs))

    def criterion_names(self) -> list[str]:
        names = []
        for c in self.criteria:
            if c == "optop":
                names.extend(crit.optop_name(x) for x in self.optop_cutoffs)
            else:
                names.append(c)
        return names

    def experiment_hash(self) -> str:
        payload = {k: v for k, v in self.to_dict().items() if k not in self.RUNTIME_FIELDS}
        blob = json.dumps(payload, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def load_dgp(self) -> Dgp:
        return make_preset(self.preset) if self.preset is not None else Dgp.load(self.dgp_path)

    def dgp_name(self) -> str:
        return self.preset if self.preset is not None else Path(self.dgp_path).name

    def candidate_range(self, dgp: Dgp) -> tuple[int, int]:
        if self.preset is not None:
            lo, hi = PRESETS[self.preset].k_range
        else:
            lo, hi = crit.k_range(dgp.K_true)
        lo = self.k_min if self.k_min is not None else lo
        hi = self.k_max if self.k_max is not None else hi
        if lo < 1 or hi - lo + 1 < 2:
            raise ValidationError(f"K range [{lo}, {hi}] must hold at least two candidates")
        return lo, hi


@dataclass
class ReplicationResult:
    replication: int
    rows: list[dict]
    scores: list[dict]
    error: str | None = None


def score_models(corpus, models: dict, config: CriteriaConfig, names: Iterable[str],
                 precision_bits: int = DEFAULT_PRECISION_BITS) -> list[CriterionScore]:
    """Every requested criterion for every fitted model (keyed by K)."""
    names = list(names)
    out = []
    ks = sorted(models)
    for name in names:
        direction = crit.direction_of(name)
        if name == crit.SBIC:
            lls = {K: corpus_log_likelihood(corpus, models[K]) for K in ks}
            values = compute_sbic(SbicInput(lls, corpus.total_words, corpus.n_words, corpus.n_docs),
                                  precision_bits=precision_bits)
        elif name == crit.CAO_JUAN:
            values = {K: crit.cao_juan(models[K].beta) for K in ks}
        elif name == crit.MIMNO:
            values = {K: crit.mimno_coherence(models[K].beta, corpus, config) for K in ks}
        elif name.startswith(crit.OPTOP_PREFIX):
            cutoff = _optop_cutoff(name, config)
            values = {K: crit.optop(corpus, models[K], cutoff) for K in ks}
        else:
            raise ValidationError(f"unknown criterion {name!r}")
        out.extend(CriterionScore(name, K, float(values[K]), direction) for K in ks)
    return out


def _optop_cutoff(name: str, config: CriteriaConfig) -> float:
    for c in config.optop_cutoffs:
        if crit.optop_name(c) == name:
            return c
    raise ValidationError(f"no OpTop cutoff configured for {name!r}")


def run_replication(dgp: Dgp, config: ExperimentConfig, r: int) -> ReplicationResult:
    lo, hi = config.candidate_range(dgp)
    names = config.criterion_names()
    threshold = config.threshold if config.threshold is not None else dgp.cutoff
    if threshold is None:
        raise ValidationError("no matching threshold: set 'threshold' or use a DGP with a pruning cutoff")
    # fit on the observed vocabulary, as a document-term matrix built from the texts would be
    corpus, kept = generate_corpus(dgp, derive_seed(config.seed, r, CORPUS_STREAM)).compact()
    models = {}
    for K in range(lo, hi + 1):
        fit = FitConfig(K, config.iterations, config.alpha, config.eta, derive_seed(config.seed, r, FIT_STREAM, K))
        models[K] = fit_lda(corpus, fit)
    scores = score_models(corpus, models, config.criteria_config(), names, config.precision_bits)
    groups = crit.group_by_criterion(scores)
    rows = []
    for name in names:
        k_sel = crit.select_optimal_k(groups[name])
        beta_est = np.zeros((k_sel, dgp.n_words))
        beta_est[:, kept] = models[k_sel].beta
        match = best_match(dgp.beta_true, beta_est, threshold, method=config.match_method)
        b = classification_scores(match, BINARY)
        w = classification_scores(match, WEIGHTED)
        rows.append({
            "dgp": config.dgp_name(), "replication": r, "criterion": name, "K_selected": k_sel,
            "recall": b.recall, "precision": b.precision, "f1": b.f1,
            "recall_weighted": w.recall, "precision_weighted": w.precision, "f1_weighted": w.f1,
        })
    score_rows = [{"replication": r, "criterion": s.criterion, "K": s.K, "value": s.value,
                   "direction": s.direction} for s in scores]
    return ReplicationResult(r, rows, score_rows)


def _safe_replication(dgp, config, r) -> ReplicationResult:
    try:
        return run_replication(dgp, config, r)
    except LdaSelectError as exc:
        log.warning("replication %d failed: %s", r, exc)
        return ReplicationResult(r, [], [], error=f"{type(exc).__name__}: {exc}")


_worker_state: dict = {}


def _init_worker(dgp, config):
    _worker_state["dgp"] = dgp
    _worker_state["config"] = config


def _worker(r):
    return _safe_replication(_worker_state["dgp"], _worker_state["config"], r)


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


class ResultStore:
    """Append-only CSV files plus a manifest in one output directory."""

    def __init__(self, out: Path):
        self.out = Path(out)
        self.results = self.out / "results.csv"
        self.scores = self.out / "scores.csv"
        self.failures = self.out / "failures.csv"
        self.manifest = self.out / "manifest.json"

    def open(self, config: ExperimentConfig, extra: dict) -> set[int]:
        """Create or validate the directory; return the completed replication ids."""
        self.out.mkdir(parents=True, exist_ok=True)
        digest = config.experiment_hash()
        if self.manifest.exists():
            old = json.loads(self.manifest.read_text())
            if old.get("config_hash") != digest:
                raise ValidationError(
                    f"{self.out} holds results of a different experiment (hash {old.get('config_hash')} != {digest})"
                )
        manifest = {"config_hash": digest, "config": config.to_dict(), **extra}
        self.manifest.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        for path, cols in ((self.results, RESULT_COLUMNS), (self.scores, SCORE_COLUMNS),
                           (self.failures, FAILURE_COLUMNS)):
            if not path.exists():
                _write_rows(path, cols, [], mode="w")
        done = {int(r["replication"]) for r in read_csv(self.results)}
        done |= {int(r["replication"]) for r in read_csv(self.failures)}
        stale = [r for r in read_csv(self.scores) if int(r["replication"]) not in done]
        if stale:
            # scores of a replication interrupted before its results row was committed
            keep = [r for r in read_csv(self.scores) if int(r["replication"]) in done]
            _write_rows(self.scores, SCORE_COLUMNS, keep, mode="w")
        return done

    def commit(self, result: ReplicationResult) -> None:
        if result.error is not None:
            _write_rows(self.failures, FAILURE_COLUMNS,
                        [{"replication": result.replication, "error": result.error}])
            return
        _write_rows(self.scores, SCORE_COLUMNS, result.scores)
        _write_rows(self.results, RESULT_COLUMNS, result.rows)


def _write_rows(path: Path, columns, rows, mode="a") -> None:
    with path.open(mode, newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if mode == "w":
            writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row[c]) if not isinstance(row[c], str) else row[c] for c in columns])
        fh.flush()
        os.fsync(fh.fileno())


def read_csv(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def read_results(path) -> list[dict]:
    rows = []
    for r in read_csv(path):
        row = dict(r)
        row["replication"] = int(row["replication"])
        row["K_selected"] = int(row["K_selected"])
        for c in RESULT_COLUMNS[4:]:
            row[c] = float(row[c])
        rows.append(row)
    return rows


def resolve_threads(threads: int | None) -> int:
    if threads is not None:
        return int(threads)
    env = os.environ.get("LDASELECT_THREADS")
    if env:
        try:
            return int(env)
        except ValueError:
            raise ValidationError(f"LDASELECT_THREADS must be an integer, got {env!r}") from None
    return 1


def run_monte_carlo(config: ExperimentConfig,
                    on_commit: Callable[[ReplicationResult], None] | None = None) -> "McSummary":
    """Run (or resume) all replications and return the summary of completed ones.

    ``on_commit`` is called after each replication is persisted.
    """
    dgp = config.load_dgp()
    lo, hi = config.candidate_range(dgp)
    store = ResultStore(Path(config.out))
    extra = {"dgp": config.dgp_name(), "K_true": dgp.K_true, "k_range": [lo, hi],
             "criteria": config.criterion_names(), "threshold": config.threshold
             if config.threshold is not None else dgp.cutoff}
    done = store.open(config, extra)
    todo = [r for r in range(1, config.replications + 1) if r not in done]
    log.info("%d of %d replications already complete; running %d", len(done), config.replications, len(todo))

    if config.threads > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=config.threads, initializer=_init_worker,
                                 initargs=(dgp, config)) as pool:
            _commit_in_order(pool.map(_worker, todo), store, on_commit)
    else:
        _commit_in_order((_safe_replication(dgp, config, r) for r in todo), store, on_commit)

    rows = [r for r in read_results(store.results) if r["replication"] <= config.replications]
    return summarize(rows, k_range=(lo, hi), k_true=dgp.K_true)


def _commit_in_order(results, store, on_commit):
    # pool.map yields in submission order, so commits stay in replication order
    for res in results:
        store.commit(res)
        log.info("replication %d %s", res.replication, "failed" if res.error else "done")
        if on_commit is not None:
            on_commit(res)


@dataclass
class CriterionSummary:
    criterion: str
    n: int
    std: float | None
    mean: float
    median: float
    skewness: float | None
    histogram: dict[int, int]
    eval: dict[str, float]


@dataclass
class McSummary:
    criteria: dict[str, CriterionSummary]
    completed: int
    k_range: tuple[int, int] | None = None
    k_true: int | None = None

    def to_dict(self) -> dict:
        return {
            "completed": self.completed,
            "k_range": list(self.k_range) if self.k_range else None,
            "K_true": self.k_true,
            "criteria": {
                name: {**dataclasses.asdict(cs), "histogram": {str(k): v for k, v in cs.histogram.items()}}
                for name, cs in self.criteria.items()
            },
        }


def _none_if_nan(x: float) -> float | None:
    return None if x is None or not math.isfinite(x) else float(x)


def descriptive(values) -> dict:
    """std (n-1), mean, median and adjusted Fisher-Pearson skewness."""
    a = np.asarray(values, dtype=np.float64)
    if a.size == 0:
        raise ValidationError("no values to summarize")
    std = float(np.std(a, ddof=1)) if a.size > 1 else None
    skew = None
    if a.size > 2 and np.ptp(a) > 0:
        skew = _none_if_nan(float(stats.skew(a, bias=False)))
    return {"std": std, "mean": float(np.mean(a)), "median": float(np.median(a)), "skewness": skew}


EVAL_METRICS = ("recall", "precision", "f1", "recall_weighted", "precision_weighted", "f1_weighted")


def summarize(rows: list[dict], k_range: tuple[int, int] | None = None, k_true: int | None = None) -> McSummary:
    """Per-criterion distribution of selected K and recall/precision/F1 aggregates."""
    if not rows:
        raise ValidationError("no completed replications to summarize")
    by_crit: dict[str, list[dict]] = {}
    for row in sorted(rows, key=lambda r: (r["criterion"], r["replication"])):
        by_crit.setdefault(row["criterion"], []).append(row)
    out = {}
    completed = len({r["replication"] for r in rows})
    for name, group in by_crit.items():
        ks = [r["K_selected"] for r in group]
        d = descriptive(ks)
        support = range(k_range[0], k_range[1] + 1) if k_range else sorted(set(ks))
        hist = {int(k): 0 for k in support}
        for k in ks:
            hist[int(k)] = hist.get(int(k), 0) + 1
        ev = {}
        for metric in EVAL_METRICS:
            vals = np.array([r[metric] for r in group], dtype=np.float64)
            ev[f"{metric}_mean"] = float(vals.mean())
            ev[f"{metric}_std"] = float(vals.std(ddof=1)) if vals.size > 1 else None
        out[name] = CriterionSummary(name, len(group), d["std"], d["mean"], d["median"], d["skewness"],
                                     dict(sorted(hist.items())), ev)
    return McSummary(out, completed, tuple(k_range) if k_range else None, k_true)
