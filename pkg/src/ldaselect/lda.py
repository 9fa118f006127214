"""Collapsed Gibbs estimation of LDA and corpus log-likelihood."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numba
import numpy as np

from ldaselect.corpus import Corpus
from ldaselect.errors import NumericalError, ValidationError

DEFAULT_ALPHA = 0.1
DEFAULT_ETA = 0.01
DEFAULT_ITERATIONS = 1000


@dataclass(frozen=True)
class FitConfig:
    K: int
    iterations: int = DEFAULT_ITERATIONS
    alpha: float = DEFAULT_ALPHA
    eta: float = DEFAULT_ETA
    seed: int = 0

    def __post_init__(self):
        if int(self.K) < 1:
            raise ValidationError(f"K must be >= 1, got {self.K}")
        if int(self.iterations) < 1:
            raise ValidationError(f"iterations must be >= 1, got {self.iterations}")
        if not self.alpha > 0 or not self.eta > 0:
            raise ValidationError("alpha and eta must be positive")


@dataclass(frozen=True, eq=False)
class LdaModel:
    theta: np.ndarray
    beta: np.ndarray
    alpha: float = DEFAULT_ALPHA
    eta: float = DEFAULT_ETA
    iterations: int = 0
    seed: int | None = None

    def __post_init__(self):
        theta = np.array(self.theta, dtype=np.float64, order="C")
        beta = np.array(self.beta, dtype=np.float64, order="C")  # layout-independent BLAS results
        if theta.ndim != 2 or beta.ndim != 2:
            raise ValidationError("theta and beta must be matrices")
        if theta.shape[1] != beta.shape[0]:
            raise ValidationError(f"theta has {theta.shape[1]} topics but beta has {beta.shape[0]}")
        if theta.shape[1] < 1:
            raise ValidationError("K must be >= 1")
        for name, m in (("theta", theta), ("beta", beta)):
            if np.any(m < 0) or not np.all(np.isfinite(m)):
                raise ValidationError(f"{name} has negative or non-finite entries")
            if np.max(np.abs(m.sum(axis=1) - 1.0)) > 1e-9:
                raise ValidationError(f"{name} rows must sum to 1")
        theta.flags.writeable = False
        beta.flags.writeable = False
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "beta", beta)

    @property
    def K(self) -> int:
        return self.beta.shape[0]

    @property
    def n_docs(self) -> int:
        return self.theta.shape[0]

    @property
    def n_words(self) -> int:
        return self.beta.shape[1]

    def save(self, directory) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        np.savetxt(directory / "theta.csv", self.theta, delimiter=",", fmt="%.17g")
        np.savetxt(directory / "beta.csv", self.beta, delimiter=",", fmt="%.17g")
        meta = {
            "K": self.K,
            "alpha": self.alpha,
            "eta": self.eta,
            "iterations": self.iterations,
            "seed": self.seed,
        }
        (directory / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")

    @classmethod
    def load(cls, directory) -> "LdaModel":
        directory = Path(directory)
        meta = json.loads((directory / "meta.json").read_text())
        theta = np.loadtxt(directory / "theta.csv", delimiter=",", ndmin=2)
        beta = np.loadtxt(directory / "beta.csv", delimiter=",", ndmin=2)
        model = cls(theta, beta, alpha=meta["alpha"], eta=meta["eta"],
                    iterations=meta["iterations"], seed=meta["seed"])
        if model.K != meta["K"]:
            raise ValidationError(f"meta.json says K={meta['K']} but matrices have K={model.K}")
        return model


@numba.njit(cache=True)
def _gibbs_sweep(docs, words, z, ndk, nwk, nk, alpha, eta, eta_sum, uniforms, cumulative):
    K = nk.shape[0]
    for t in range(docs.shape[0]):
        d = docs[t]
        w = words[t]
        k = z[t]
        ndk[d, k] -= 1
        nwk[w, k] -= 1
        nk[k] -= 1
        total = 0.0
        for kk in range(K):
            total += (ndk[d, kk] + alpha) * (nwk[w, kk] + eta) / (nk[kk] + eta_sum)
            cumulative[kk] = total
        u = uniforms[t] * total
        k = 0
        while k < K - 1 and cumulative[k] <= u:
            k += 1
        z[t] = k
        ndk[d, k] += 1
        nwk[w, k] += 1
        nk[k] += 1


@numba.njit(cache=True)
def _count_tables(docs, words, z, J, I, K):
    ndk = np.zeros((J, K), dtype=np.int64)
    nwk = np.zeros((I, K), dtype=np.int64)
    nk = np.zeros(K, dtype=np.int64)
    for t in range(docs.shape[0]):
        ndk[docs[t], z[t]] += 1
        nwk[words[t], z[t]] += 1
        nk[z[t]] += 1
    return ndk, nwk, nk


def fit_lda(corpus: Corpus, config: FitConfig) -> LdaModel:
    """Fit LDA by collapsed Gibbs sampling and read out the final state.

    Topic assignments are initialized uniformly at random; each sweep resamples
    every token in doc-major order. The returned estimates are the smoothed
    counts of the last sweep. Results depend only on (corpus, config).
    """
    K, J, I = int(config.K), corpus.n_docs, corpus.n_words
    if K > I:
        raise ValidationError(f"K={K} exceeds vocabulary size I={I}")
    rng = np.random.default_rng(config.seed)
    docs, words = corpus.token_arrays()
    z = rng.integers(0, K, size=docs.shape[0]).astype(np.int64)
    ndk, nwk, nk = _count_tables(docs, words, z, J, I, K)
    alpha, eta = float(config.alpha), float(config.eta)
    cumulative = np.empty(K, dtype=np.float64)
    for _ in range(int(config.iterations)):
        uniforms = rng.random(docs.shape[0])
        _gibbs_sweep(docs, words, z, ndk, nwk, nk, alpha, eta, eta * I, uniforms, cumulative)
    theta = (ndk + alpha) / (corpus.doc_lengths[:, None] + K * alpha)
    beta = (nwk.T + eta) / (nk[:, None] + I * eta)
    # exact row normalization guards the 1e-9 invariant against rounding
    theta /= theta.sum(axis=1, keepdims=True)
    beta /= beta.sum(axis=1, keepdims=True)
    return LdaModel(theta, beta, alpha=alpha, eta=eta, iterations=int(config.iterations), seed=config.seed)


def check_dimensions(corpus: Corpus, theta: np.ndarray, beta: np.ndarray) -> None:
    if theta.shape[0] != corpus.n_docs:
        raise ValidationError(f"model has {theta.shape[0]} documents but corpus has {corpus.n_docs}")
    if beta.shape[1] != corpus.n_words:
        raise ValidationError(f"model vocabulary size {beta.shape[1]} does not match corpus vocabulary size {corpus.n_words}")


def corpus_log_likelihood(corpus: Corpus, model: LdaModel) -> float:
    """sum_j sum_i x_ji * log((theta @ beta)_ji) over observed words.

    Raises NumericalError if an observed word has zero mixture probability.
    """
    check_dimensions(corpus, model.theta, model.beta)
    X = corpus.counts
    rows = np.repeat(np.arange(X.shape[0]), np.diff(X.indptr))
    probs = np.einsum("nk,kn->n", model.theta[rows], model.beta[:, X.indices])
    zero = probs <= 0.0
    if np.any(zero):
        n = int(zero.sum())
        raise NumericalError(
            f"log-likelihood is -inf: {n} observed (doc, word) cell(s) have zero mixture probability",
            diagnostics={"first_doc": int(rows[zero][0]), "first_word": int(X.indices[zero][0])},
        )
    return float(np.dot(X.data, np.log(probs)))
