"""Matching estimated topics to generating topics; recall, precision and F1."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from ldaselect.errors import ValidationError
from ldaselect.generator import cosine_matrix

BINARY = "binary"
WEIGHTED = "weighted"
MODES = (BINARY, WEIGHTED)

GREEDY = "greedy"
HUNGARIAN = "hungarian"


@dataclass(frozen=True)
class MatchResult:
    pairs: tuple[tuple[int, int, float], ...]
    threshold: float
    K_true: int
    K_metric: int

    def __post_init__(self):
        trues = [p[0] for p in self.pairs]
        ests = [p[1] for p in self.pairs]
        if len(set(trues)) != len(trues) or len(set(ests)) != len(ests):
            raise ValidationError("a topic appears in more than one matched pair")
        if any(p[2] <= self.threshold for p in self.pairs):
            raise ValidationError("matched pair at or below the threshold")


@dataclass(frozen=True)
class EvalScores:
    recall: float
    precision: float
    f1: float
    mode: str


def best_match(beta_true, beta_est, threshold: float, method: str = GREEDY) -> MatchResult:
    """One-to-one matching of true to estimated topics by cosine similarity.

    ``greedy`` walks all (true, estimated) pairs by descending similarity and
    accepts a pair when both topics are still free and the similarity exceeds
    ``threshold``; ties are taken in (true id, estimated id) order.
    ``hungarian`` instead maximizes the total similarity of the assignment and
    then drops pairs at or below the threshold.
    """
    beta_true = np.asarray(beta_true, dtype=np.float64)
    beta_est = np.asarray(beta_est, dtype=np.float64)
    if beta_true.ndim != 2 or beta_est.ndim != 2 or beta_true.shape[1] != beta_est.shape[1]:
        raise ValidationError(
            f"topic matrices must share the vocabulary dimension: {beta_true.shape} vs {beta_est.shape}"
        )
    S = cosine_matrix(beta_true, beta_est)
    pairs = []
    if method == GREEDY:
        flat = S.ravel()
        order = np.lexsort((np.arange(flat.size), -flat))
        used_t, used_e = set(), set()
        for idx in order:
            if flat[idx] <= threshold:
                break
            t, e = divmod(int(idx), S.shape[1])
            if t in used_t or e in used_e:
                continue
            used_t.add(t)
            used_e.add(e)
            pairs.append((t, e, float(flat[idx])))
    elif method == HUNGARIAN:
        rows, cols = linear_sum_assignment(S, maximize=True)
        pairs = [(int(t), int(e), float(S[t, e])) for t, e in zip(rows, cols) if S[t, e] > threshold]
    else:
        raise ValidationError(f"unknown matching method {method!r}")
    pairs.sort()
    return MatchResult(tuple(pairs), float(threshold), beta_true.shape[0], beta_est.shape[0])


def f1_score(precision: float, recall: float) -> float:
    if precision + recall <= 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def classification_scores(match: MatchResult, mode: str = BINARY) -> EvalScores:
    """Recall = TP / K_true, precision = TP / K_metric.

    In binary mode TP counts matched pairs; in weighted mode it is the sum of
    their cosine similarities.
    """
    if match.K_true <= 0 or match.K_metric <= 0:
        raise ValidationError("K_true and K_metric must be positive")
    if mode == BINARY:
        tp = float(len(match.pairs))
    elif mode == WEIGHTED:
        tp = float(sum(p[2] for p in match.pairs))
    else:
        raise ValidationError(f"unknown scoring mode {mode!r}")
    recall = tp / match.K_true
    precision = tp / match.K_metric
    return EvalScores(recall, precision, f1_score(precision, recall), mode)
