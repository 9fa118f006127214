"""Topic-number selection criteria: Cao_Juan, Mimno coherence and OpTop."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ldaselect.corpus import Corpus, co_document_frequencies
from ldaselect.errors import ValidationError
from ldaselect.generator import cosine_matrix
from ldaselect.lda import LdaModel, check_dimensions

MINIMIZE = "minimize"
MAXIMIZE = "maximize"

CAO_JUAN = "cao_juan"
MIMNO = "mimno"
SBIC = "sbic"
OPTOP_PREFIX = "optop_"

DIRECTIONS = {CAO_JUAN: MINIMIZE, MIMNO: MAXIMIZE, SBIC: MAXIMIZE}


def optop_name(cutoff: float) -> str:
    """``optop_5`` for a 0.05 cutoff, ``optop_20`` for 0.20."""
    pct = round(cutoff * 100, 6)
    return f"{OPTOP_PREFIX}{int(pct) if pct == int(pct) else pct:g}"


def direction_of(criterion: str) -> str:
    if criterion.startswith(OPTOP_PREFIX):
        return MINIMIZE
    try:
        return DIRECTIONS[criterion]
    except KeyError:
        raise ValidationError(f"unknown criterion {criterion!r}") from None


def display_name(criterion: str) -> str:
    if criterion.startswith(OPTOP_PREFIX):
        return f"OpTop {criterion[len(OPTOP_PREFIX):]}%"
    return {CAO_JUAN: "Cao_Juan", MIMNO: "Mimno", SBIC: "sBIC"}.get(criterion, criterion)


@dataclass(frozen=True)
class CriterionScore:
    criterion: str
    K: int
    value: float
    direction: str

    def __post_init__(self):
        if self.direction not in (MINIMIZE, MAXIMIZE):
            raise ValidationError(f"direction must be {MINIMIZE!r} or {MAXIMIZE!r}")
        if not math.isfinite(self.value):
            raise ValidationError(f"{self.criterion} score at K={self.K} is not finite: {self.value}")


@dataclass(frozen=True)
class CriteriaConfig:
    mimno_top_words: int = 20
    mimno_epsilon: float = math.exp(-12)
    optop_cutoffs: tuple[float, ...] = (0.05, 0.20)

    def __post_init__(self):
        if self.mimno_top_words < 2:
            raise ValidationError("mimno_top_words must be >= 2")
        if not self.mimno_epsilon > 0:
            raise ValidationError("mimno_epsilon must be positive")
        for c in self.optop_cutoffs:
            if not 0.0 < c < 1.0:
                raise ValidationError(f"OpTop cutoff must lie in (0, 1), got {c}")


def cao_juan(beta) -> float:
    """Average cosine similarity over all unordered pairs of topics."""
    beta = np.asarray(beta, dtype=np.float64)
    if beta.ndim != 2 or beta.shape[0] < 2:
        raise ValidationError("Cao_Juan needs at least two topics")
    S = cosine_matrix(beta)
    K = S.shape[0]
    iu = np.triu_indices(K, k=1)
    return float(S[iu].sum() / (K * (K - 1) / 2))


def top_words(beta_row: np.ndarray, v: int) -> np.ndarray:
    # descending probability, ties toward the smaller word id
    order = np.lexsort((np.arange(beta_row.size), -beta_row))
    return order[:v]


def mimno_coherence(beta, corpus: Corpus, config: CriteriaConfig = CriteriaConfig()) -> float:
    """Mean topic coherence over the top ``v`` words of each topic.

    For a topic with top words i_1..i_v (descending probability) the coherence is
    2/(v(v-1)) * sum_{m>n} log((f(i_m, i_n) + eps) / f(i_n)), with f the document
    frequency and f(., .) the co-document frequency in ``corpus``.
    """
    beta = np.asarray(beta, dtype=np.float64)
    v, eps = config.mimno_top_words, config.mimno_epsilon
    if beta.ndim != 2 or beta.shape[1] != corpus.n_words:
        raise ValidationError(f"beta vocabulary size does not match corpus vocabulary size {corpus.n_words}")
    lower = np.tril_indices(v, k=-1)  # (m, n) with m > n
    total = 0.0
    for k, row in enumerate(beta):
        if np.count_nonzero(row > 0) < v:
            raise ValidationError(f"topic {k} has fewer than {v} words with positive probability")
        words = top_words(row, v)
        f, f2 = co_document_frequencies(corpus, words)
        if np.any(f == 0):
            absent = words[f == 0].tolist()
            raise ValidationError(f"topic {k}: top word(s) {absent} occur in no document")
        m_idx, n_idx = lower
        terms = np.log((f2[m_idx, n_idx] + eps) / f[n_idx])
        total += 2.0 / (v * (v - 1)) * terms.sum()
    return float(total / beta.shape[0])


def optop_from_frequencies(observed: np.ndarray, estimated: np.ndarray, cutoff: float) -> float:
    """OpTop statistic for dense per-document relative frequencies (rows sum to 1).

    Per document, word types are sorted by ascending estimated frequency; the
    longest prefix whose cumulative estimated frequency stays strictly below
    ``cutoff`` is collapsed into one bin, and the remaining P_j types are kept
    individually. The document's chi-square-style sum is multiplied by P_j + 1.
    """
    observed = np.atleast_2d(np.asarray(observed, dtype=np.float64))
    estimated = np.atleast_2d(np.asarray(estimated, dtype=np.float64))
    if observed.shape != estimated.shape:
        raise ValidationError(f"observed {observed.shape} and estimated {estimated.shape} frequencies differ in shape")
    if not 0.0 < cutoff < 1.0:
        raise ValidationError(f"OpTop cutoff must lie in (0, 1), got {cutoff}")
    I = observed.shape[1]
    order = np.argsort(estimated, axis=1, kind="stable")
    xhat = np.take_along_axis(estimated, order, axis=1)
    x = np.take_along_axis(observed, order, axis=1)
    cum = np.cumsum(xhat, axis=1)
    # cum is nondecreasing, so the prefix is a count of entries below the cutoff
    p = (cum < cutoff).sum(axis=1)
    important = np.arange(I)[None, :] >= p[:, None]
    if np.any(xhat[important] <= 0):
        raise ValidationError("zero estimated frequency for an important word")
    with np.errstate(divide="ignore", invalid="ignore"):
        word_terms = np.where(important, (xhat - x) ** 2 / np.where(important, xhat, 1.0), 0.0)
    rows = np.arange(observed.shape[0])
    has_bin = p > 0
    xhat_min = np.where(has_bin, cum[rows, np.maximum(p - 1, 0)], 0.0)
    x_min = np.where(has_bin, np.cumsum(x, axis=1)[rows, np.maximum(p - 1, 0)], 0.0)
    if np.any(has_bin & (xhat_min <= 0)):
        raise ValidationError("zero estimated frequency for the collapsed bin")
    bin_term = np.zeros_like(xhat_min)
    bin_term[has_bin] = (xhat_min[has_bin] - x_min[has_bin]) ** 2 / xhat_min[has_bin]
    P = I - p
    return float(np.sum((P + 1) * (word_terms.sum(axis=1) + bin_term)))


def optop(corpus: Corpus, model: LdaModel, cutoff: float = 0.05, chunk: int = 2048) -> float:
    """OpTop goodness-of-fit of a fitted model on its corpus (lower is better)."""
    check_dimensions(corpus, model.theta, model.beta)
    rel = corpus.relative_frequencies()
    total = 0.0
    for lo in range(0, corpus.n_docs, chunk):
        hi = min(lo + chunk, corpus.n_docs)
        estimated = model.theta[lo:hi] @ model.beta
        total += optop_from_frequencies(rel[lo:hi].toarray(), estimated, cutoff)
    return total


def select_optimal_k(scores: Sequence[CriterionScore]) -> int:
    """Best K for one criterion; ties go to the smaller K."""
    if not scores:
        raise ValidationError("no scores to select from")
    names = {s.criterion for s in scores}
    if len(names) != 1:
        raise ValidationError(f"scores mix several criteria: {sorted(names)}")
    direction = scores[0].direction
    ks = sorted(s.K for s in scores)
    if len(set(ks)) != len(ks):
        raise ValidationError("more than one score per K")
    if ks != list(range(ks[0], ks[-1] + 1)):
        raise ValidationError(f"K values are not contiguous: {ks}")
    for s in scores:
        if s.direction != direction:
            raise ValidationError("inconsistent optimization direction")
        if math.isnan(s.value):
            raise ValidationError(f"NaN score at K={s.K}")
    ordered = sorted(scores, key=lambda s: s.K)
    sign = 1.0 if direction == MINIMIZE else -1.0
    best = min(ordered, key=lambda s: sign * s.value)  # min() keeps the first, i.e. smallest K
    return best.K


def k_range(k_true: int, half_width: int = 20) -> tuple[int, int]:
    """Candidate range [max(2, K_true - 20), K_true + 20]."""
    return max(2, k_true - half_width), k_true + half_width


SCORE_COLUMNS = ("criterion", "K", "value", "direction")


def write_scores(scores: Iterable[CriterionScore], path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SCORE_COLUMNS)
        for s in scores:
            writer.writerow([s.criterion, s.K, repr(float(s.value)), s.direction])


def read_scores(path) -> list[CriterionScore]:
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != SCORE_COLUMNS:
            raise ValidationError(f"scores file must have columns {','.join(SCORE_COLUMNS)}")
        return [CriterionScore(r["criterion"], int(r["K"]), float(r["value"]), r["direction"]) for r in reader]


def group_by_criterion(scores: Iterable[CriterionScore]) -> dict[str, list[CriterionScore]]:
    groups: dict[str, list[CriterionScore]] = {}
    for s in scores:
        groups.setdefault(s.criterion, []).append(s)
    return groups
