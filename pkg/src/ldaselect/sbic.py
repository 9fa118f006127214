"""Singular BIC for LDA via learning coefficients and model averaging.

For candidate topic counts K_min..K_max the averaged marginal likelihoods
L'(K) solve, in increasing K, the quadratic

    sum_{k <= K} (L'(K) - L(K | k)) L'(k) = 0,

where ``L(K | k) = P(D | theta_hat, beta_hat, K) * N^-lambda(k, K) * (log N)^(m(k, K) - 1)``
is the penalized likelihood of the K-topic model when the true model has k
topics. sBIC(K) = log L'(K). All algebra runs on likelihood ratios relative to
the best fitted likelihood, in mpmath floating point with a configurable
mantissa, so corpus-scale log-likelihoods (~1e8) neither overflow nor
underflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import mpmath

from ldaselect.errors import NumericalError, ValidationError

DEFAULT_PRECISION_BITS = 256


@dataclass(frozen=True)
class LearningCoefficient:
    lam: float
    multiplicity: int
    k_sub: int
    K: int
    I: int
    J: int

    def __post_init__(self):
        bound = regular_dimension(self.K, self.I, self.J) / 2
        if not 0 < self.lam <= bound + 1e-9:
            raise ValidationError(f"learning coefficient {self.lam} outside (0, {bound}]")
        if self.multiplicity < 1:
            raise ValidationError("multiplicity must be >= 1")


def regular_dimension(K: int, I: int, J: int) -> int:
    """Free parameters of a K-topic LDA: J(K-1) + K(I-1)."""
    return J * (K - 1) + K * (I - 1)


def _check_args(k_sub, K, I, J):
    if not 1 <= k_sub <= K:
        raise ValidationError(f"need 1 <= k_sub <= K, got k_sub={k_sub}, K={K}")
    if I < 2 or J < 2:
        raise ValidationError(f"need I >= 2 and J >= 2, got I={I}, J={J}")


def reduced_rank_coefficient(M: int, N: int, H: int, r: int) -> tuple[float, int]:
    """Learning coefficient and multiplicity of reduced rank regression.

    M x N matrices factored through rank H, true rank r.
    """
    r = min(r, M, N)  # the true matrix cannot have larger rank
    if M + N < H + r:
        return M * N / 2, 1
    if N + r <= M + H and M + r <= N + H and H + r <= M + N:
        s = 2 * (H + r) * (M + N) - (M - N) ** 2 - (H + r) ** 2
        if (M + N + H + r) % 2 == 0:
            return s / 8, 1
        return (s + 1) / 8, 2
    if M + H < N + r:
        return (H * M - H * r + N * r) / 2, 1
    if N + H < M + r:
        return (H * N - H * r + M * r) / 2, 1
    return M * N / 2, 1


def learning_coefficient(k_sub: int, K: int, I: int, J: int) -> LearningCoefficient:
    """Learning coefficient of a K-topic LDA when the truth has k_sub topics.

    The LDA coefficient equals the reduced-rank coefficient for the J x I
    document-word matrix (rank K, true rank k_sub) minus J/2, the dimension
    removed by requiring every document's word distribution to sum to one.
    With k_sub == K this is half the dimension of the set of rank-K
    row-stochastic J x I matrices, K(I + J - K) - J.
    """
    _check_args(k_sub, K, I, J)
    lam, m = reduced_rank_coefficient(I, J, K, k_sub)
    return LearningCoefficient(lam - J / 2, m, k_sub, K, I, J)


def regular_coefficient(k_sub: int, K: int, I: int, J: int) -> LearningCoefficient:
    """Regular-model coefficients lambda = d(K)/2, m = 1 (plain BIC penalty)."""
    _check_args(k_sub, K, I, J)
    return LearningCoefficient(regular_dimension(K, I, J) / 2, 1, k_sub, K, I, J)


@dataclass(frozen=True)
class SbicInput:
    log_likelihoods: Mapping[int, float]
    N: int
    I: int
    J: int

    def __post_init__(self):
        lls = {int(k): float(v) for k, v in self.log_likelihoods.items()}
        if not lls:
            raise ValidationError("no log-likelihoods")
        ks = sorted(lls)
        if ks != list(range(ks[0], ks[-1] + 1)):
            raise ValidationError(f"K values are not contiguous: {ks}")
        if ks[0] < 1:
            raise ValidationError("K must be >= 1")
        bad = [k for k, v in lls.items() if not math.isfinite(v)]
        if bad:
            raise ValidationError(f"non-finite log-likelihood at K={bad}")
        if self.N < 2:
            raise ValidationError("N must be >= 2 so that log log N is defined")
        object.__setattr__(self, "log_likelihoods", dict(sorted(lls.items())))


@dataclass
class SbicDiagnostics:
    precision_bits: int
    log_max: float
    rows: list[dict] = field(default_factory=list)


def compute_sbic_with_diagnostics(
    data: SbicInput,
    coefficient: Callable[[int, int, int, int], LearningCoefficient] = learning_coefficient,
    precision_bits: int = DEFAULT_PRECISION_BITS,
) -> tuple[dict[int, float], SbicDiagnostics]:
    lls = data.log_likelihoods
    ks = list(lls)
    log_max = max(lls.values())
    diag = SbicDiagnostics(precision_bits=precision_bits, log_max=log_max)
    result: dict[int, float] = {}
    with mpmath.workprec(precision_bits):
        log_n = mpmath.log(data.N)
        loglog_n = mpmath.log(log_n)
        roots: list = []
        for pos, K in enumerate(ks):
            base = mpmath.mpf(lls[K]) - log_max
            penalized = []  # L(K | k) for k = ks[0] .. K, as log values
            coefs = []
            for k in ks[: pos + 1]:
                c = coefficient(k, K, data.I, data.J)
                coefs.append(c)
                penalized.append(base - c.lam * log_n + (c.multiplicity - 1) * loglog_n)
            L = [mpmath.exp(v) for v in penalized]
            L_own = L[-1]
            prev = roots[:pos]
            b = mpmath.fsum(prev) - L_own
            c0 = -mpmath.fsum(l * r for l, r in zip(L[:-1], prev))
            disc = b * b - 4 * c0
            if disc < 0:
                raise NumericalError(f"sBIC quadratic at K={K} has negative discriminant",
                                     diagnostics={"K": K, "b": str(b), "c": str(c0)})
            sq = mpmath.sqrt(disc)
            # cancellation-free form of the positive root
            root = (-2 * c0) / (b + sq) if b > 0 else (sq - b) / 2
            if not (mpmath.isfinite(root) and root > 0):
                raise NumericalError(
                    f"sBIC at K={K}: no positive root (precision {precision_bits} bits exhausted?)",
                    diagnostics={"K": K, "root": str(root), "b": str(b), "c": str(c0)},
                )
            roots.append(root)
            value = float(mpmath.log(root)) + log_max
            if not math.isfinite(value):
                raise NumericalError(f"sBIC at K={K} is not finite", diagnostics={"K": K})
            result[K] = value
            diag.rows.append({
                "K": K,
                "log_likelihood": lls[K],
                "lambda": [c.lam for c in coefs],
                "multiplicity": [c.multiplicity for c in coefs],
                "log_penalized": [float(v) + log_max for v in penalized],
                "log_root": value,
            })
    return result, diag


def compute_sbic(
    data: SbicInput,
    coefficient: Callable[[int, int, int, int], LearningCoefficient] = learning_coefficient,
    precision_bits: int = DEFAULT_PRECISION_BITS,
) -> dict[int, float]:
    """sBIC value for every K in the candidate range; larger is better."""
    return compute_sbic_with_diagnostics(data, coefficient, precision_bits)[0]


def bic(log_likelihood: float, K: int, I: int, J: int, N: int) -> float:
    return log_likelihood - regular_dimension(K, I, J) / 2 * math.log(N)
