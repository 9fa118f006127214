"""Topic-number reduction and synthetic corpus generation from a fixed LDA model."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from ldaselect.corpus import Corpus, Vocabulary
from ldaselect.errors import ValidationError
from ldaselect.lda import LdaModel


def cosine_matrix(a: np.ndarray, b: np.ndarray | None = None) -> np.ndarray:
    """Pairwise cosine similarities between the rows of ``a`` and ``b``."""
    a = np.asarray(a, dtype=np.float64)
    b = a if b is None else np.asarray(b, dtype=np.float64)
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    if np.any(na == 0) or np.any(nb == 0):
        raise ValidationError("zero-norm row in cosine similarity")
    return (a @ b.T) / np.outer(na, nb)


def pairwise_similarities(beta: np.ndarray) -> np.ndarray:
    """The K(K-1)/2 cosine similarities between distinct topics, sorted ascending."""
    S = cosine_matrix(beta)
    iu = np.triu_indices(S.shape[0], k=1)
    return np.sort(S[iu])


@dataclass(frozen=True, eq=False)
class Dgp:
    beta_true: np.ndarray
    theta_true: np.ndarray
    doc_lengths: np.ndarray
    provenance: dict = field(default_factory=dict)
    vocab: Vocabulary | None = None

    def __post_init__(self):
        beta = np.array(self.beta_true, dtype=np.float64)
        theta = np.array(self.theta_true, dtype=np.float64)
        lengths = np.array(self.doc_lengths, dtype=np.int64)
        if beta.ndim != 2 or theta.ndim != 2 or theta.shape[1] != beta.shape[0]:
            raise ValidationError("theta_true (J x K) and beta_true (K x I) have inconsistent shapes")
        if beta.shape[0] < 1:
            raise ValidationError("Dgp needs at least one topic")
        for name, m in (("theta_true", theta), ("beta_true", beta)):
            if np.any(m < 0) or np.max(np.abs(m.sum(axis=1) - 1.0)) > 1e-9:
                raise ValidationError(f"{name} must be row-stochastic")
        if lengths.shape != (theta.shape[0],):
            raise ValidationError("doc_lengths must have one entry per document")
        if np.any(lengths < 1):
            raise ValidationError("document lengths must be >= 1")
        if self.vocab is not None and len(self.vocab) != beta.shape[1]:
            raise ValidationError("vocabulary size does not match beta_true")
        for arr in (beta, theta, lengths):
            arr.flags.writeable = False
        object.__setattr__(self, "beta_true", beta)
        object.__setattr__(self, "theta_true", theta)
        object.__setattr__(self, "doc_lengths", lengths)
        object.__setattr__(self, "provenance", dict(self.provenance))

    @property
    def K_true(self) -> int:
        return self.beta_true.shape[0]

    @property
    def n_docs(self) -> int:
        return self.theta_true.shape[0]

    @property
    def n_words(self) -> int:
        return self.beta_true.shape[1]

    @property
    def cutoff(self) -> float | None:
        """Similarity cutoff used for pruning; reused as the matching threshold."""
        value = self.provenance.get("cutoff")
        return None if value is None else float(value)

    def save(self, directory) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        np.savetxt(directory / "theta.csv", self.theta_true, delimiter=",", fmt="%.17g")
        np.savetxt(directory / "beta.csv", self.beta_true, delimiter=",", fmt="%.17g")
        np.savetxt(directory / "doc_lengths.csv", self.doc_lengths, fmt="%d")
        meta = {"K": self.K_true, "provenance": self.provenance}
        (directory / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")
        if self.vocab is not None:
            (directory / "vocab.txt").write_text("".join(t + "\n" for t in self.vocab.tokens), encoding="utf-8")

    @classmethod
    def load(cls, directory) -> "Dgp":
        directory = Path(directory)
        meta = json.loads((directory / "meta.json").read_text())
        vocab = None
        vocab_file = directory / "vocab.txt"
        if vocab_file.exists():
            vocab = Vocabulary(tuple(vocab_file.read_text(encoding="utf-8").splitlines()))
        return cls(
            beta_true=np.loadtxt(directory / "beta.csv", delimiter=",", ndmin=2),
            theta_true=np.loadtxt(directory / "theta.csv", delimiter=",", ndmin=2),
            doc_lengths=np.loadtxt(directory / "doc_lengths.csv", dtype=np.int64, ndmin=1),
            provenance=meta.get("provenance", {}),
            vocab=vocab,
        )


def _best_match_pairs(S: np.ndarray) -> set[tuple[int, int]]:
    K = S.shape[0]
    masked = S.copy()
    np.fill_diagonal(masked, -np.inf)
    partners = np.argmax(masked, axis=1)
    return {(min(k, int(l)), max(k, int(l))) for k, l in zip(range(K), partners)}


def _iterative_removal(S: np.ndarray, cutoff: float) -> set[int]:
    # drop the most similar surviving pair, then re-pair the survivors
    alive = list(range(S.shape[0]))
    removed: set[int] = set()
    while len(alive) >= 2:
        sub = S[np.ix_(alive, alive)].copy()
        np.fill_diagonal(sub, -np.inf)
        a, b = np.unravel_index(int(np.argmax(sub)), sub.shape)
        if sub[a, b] <= cutoff:
            break
        removed.update((alive[a], alive[b]))
        alive = [k for k in alive if k not in removed]
    return removed


def reduce_topics(model: LdaModel, percentile: float, doc_lengths, cutoff: float | None = None,
                  vocab: Vocabulary | None = None, iterative: bool = False) -> Dgp:
    """Drop near-duplicate topics and renormalize the document-topic weights.

    Each topic is paired with its most similar other topic. Both members of any
    such pair whose cosine similarity exceeds the cutoff are removed. The cutoff
    defaults to the linearly interpolated ``percentile`` of all pairwise
    similarities; pass ``cutoff`` to reuse a fixed value. After one pass every
    surviving topic has all similarities <= cutoff, so repeating the pass with
    the same cutoff removes nothing.

    ``doc_lengths`` are the lengths of the documents the model was fitted on;
    they are carried into the returned Dgp unchanged.

    With ``iterative=True`` pairs are removed one at a time, most similar
    first, re-pairing the remaining topics after each removal.
    """
    if not 0.0 < percentile < 1.0:
        raise ValidationError(f"percentile must lie in (0, 1), got {percentile}")
    K = model.K
    if K < 2:
        raise ValidationError(f"topic reduction needs K >= 2, got {K}")
    S = cosine_matrix(model.beta)
    if cutoff is None:
        cutoff = float(np.percentile(pairwise_similarities(model.beta), 100.0 * percentile))
    if iterative:
        removed = _iterative_removal(S, cutoff)
    else:
        removed = set()
        for k, l in _best_match_pairs(S):
            if S[k, l] > cutoff:
                removed.update((k, l))
    keep = np.array([k for k in range(K) if k not in removed], dtype=np.int64)
    if keep.size == 0:
        raise ValidationError("no distinct topics: every topic was removed by pruning")
    theta = model.theta[:, keep]
    mass = theta.sum(axis=1)
    orphaned = np.flatnonzero(mass <= 0)
    if orphaned.size:
        raise ValidationError(f"documents with all topic mass on removed topics: {orphaned.tolist()}")
    theta = theta / mass[:, None]
    provenance = {
        "source": f"reduce_topics of a K={K} model",
        "percentile": float(percentile),
        "cutoff": float(cutoff),
        "removed_topics": sorted(int(k) for k in removed),
        "mode": "iterative" if iterative else "single-pass",
    }
    return Dgp(model.beta[keep], theta, doc_lengths, provenance, vocab)


def generate_corpus(dgp: Dgp, seed) -> Corpus:
    """Sample a corpus with the Dgp's document lengths.

    Every token draws a topic from its document's row of ``theta_true`` and
    then a word from that topic's row of ``beta_true``, both by inverting
    cached cumulative distributions.
    """
    rng = np.random.default_rng(seed)
    lengths = dgp.doc_lengths
    J, K = dgp.theta_true.shape
    n = int(lengths.sum())
    docs = np.repeat(np.arange(J), lengths)
    u_topic = rng.random(n)
    u_word = rng.random(n)

    theta_cdf = np.cumsum(dgp.theta_true, axis=1)
    topics = np.empty(n, dtype=np.int64)
    bounds = np.concatenate(([0], np.cumsum(lengths)))
    for j in range(J):
        lo, hi = bounds[j], bounds[j + 1]
        cdf = theta_cdf[j]
        topics[lo:hi] = np.searchsorted(cdf, u_topic[lo:hi] * cdf[-1], side="right")

    beta_cdf = np.cumsum(dgp.beta_true, axis=1)
    words = np.empty(n, dtype=np.int64)
    for k in range(K):
        idx = np.flatnonzero(topics == k)
        if idx.size:
            cdf = beta_cdf[k]
            words[idx] = np.searchsorted(cdf, u_word[idx] * cdf[-1], side="right")

    I = dgp.n_words
    X = sp.coo_matrix((np.ones(n, dtype=np.int64), (docs, words)), shape=(J, I)).tocsr()
    vocab = dgp.vocab if dgp.vocab is not None else Vocabulary.synthetic(I)
    return Corpus(vocab, X)
