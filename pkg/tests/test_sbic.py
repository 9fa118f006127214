import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ldaselect.errors import ValidationError
from ldaselect.sbic import (LearningCoefficient, SbicInput, bic, compute_sbic, compute_sbic_with_diagnostics,
                            learning_coefficient, regular_coefficient, regular_dimension)

GRID = [(K, I, J) for K in (1, 2, 3, 5, 8) for I in (2, 3, 7, 20) for J in (2, 4, 9, 30)]


class TestLearningCoefficient:
    def test_bounds_on_grid(self):
        for K, I, J in GRID:
            d = regular_dimension(K, I, J)
            for k in range(1, K + 1):
                c = learning_coefficient(k, K, I, J)
                assert 0 < c.lam <= d / 2
                assert isinstance(c.multiplicity, int) and c.multiplicity >= 1

    def test_nondecreasing_in_k_sub(self):
        for K, I, J in GRID:
            lams = [learning_coefficient(k, K, I, J).lam for k in range(1, K + 1)]
            assert all(b >= a for a, b in zip(lams, lams[1:]))

    def test_full_rank_equals_regular_dimension(self):
        # literal contract: k_sub == K gives lambda = d(K)/2 and m = 1
        for K, I, J in [(2, 10, 20), (3, 10, 20), (5, 30, 50)]:
            c = learning_coefficient(K, K, I, J)
            assert c.multiplicity == 1
            assert c.lam == pytest.approx(regular_dimension(K, I, J) / 2)

    def test_full_rank_is_half_stochastic_rank_dimension(self):
        for K, I, J in GRID:
            if K <= min(I, J):
                c = learning_coefficient(K, K, I, J)
                assert c.lam == pytest.approx((K * (I + J - K) - J) / 2)
                assert c.multiplicity == 1

    def test_single_topic_is_regular(self):
        for _, I, J in GRID:
            assert learning_coefficient(1, 1, I, J).lam == regular_dimension(1, I, J) / 2

    def test_invalid(self):
        with pytest.raises(ValidationError):
            learning_coefficient(4, 3, 10, 10)
        with pytest.raises(ValidationError):
            learning_coefficient(1, 2, 1, 10)
        with pytest.raises(ValidationError):
            LearningCoefficient(1e6, 1, 1, 2, 3, 3)


def _fixed(table):
    """Coefficient callable returning hand-set (lambda, m) per (k, K)."""
    def coef(k, K, I, J):
        lam, m = table[(k, K)]
        return LearningCoefficient(lam, m, k, K, I, J)
    return coef


class TestComputeSbic:
    def test_single_model(self):
        data = SbicInput({3: -1234.5}, N=500, I=10, J=20)
        c = learning_coefficient(3, 3, 10, 20)
        got = compute_sbic(data)[3]
        n = 500
        expected = -1234.5 - c.lam * math.log(n) + (c.multiplicity - 1) * math.log(math.log(n))
        assert got == pytest.approx(expected, rel=1e-12)

    def test_single_model_with_multiplicity(self):
        data = SbicInput({2: -50.0}, N=100, I=5, J=5)
        got = compute_sbic(data, _fixed({(2, 2): (3.5, 3)}))[2]
        assert got == pytest.approx(-50 - 3.5 * math.log(100) + 2 * math.log(math.log(100)), rel=1e-12)

    def test_regular_coefficients_reduce_to_bic(self, rng):
        I, J, N = 30, 40, 5000
        lls = {K: -20000.0 + 200 * K - 5 * K * K for K in range(2, 9)}
        lls[5] += 60  # one model dominates by well over 50 log units
        out = compute_sbic(SbicInput(lls, N, I, J), regular_coefficient)
        for K, ll in lls.items():
            assert out[K] == pytest.approx(bic(ll, K, I, J, N), abs=1e-6)

    def test_three_models_against_bisection(self):
        lls = {1: -100.0, 2: -95.0, 3: -93.0}
        table = {(1, 1): (2.0, 1),
                 (1, 2): (2.5, 1), (2, 2): (3.0, 2),
                 (1, 3): (2.8, 1), (2, 3): (3.4, 1), (3, 3): (4.0, 2)}
        N = 1000
        got = compute_sbic(SbicInput(lls, N, I=5, J=5), _fixed(table))
        mpmath.mp.prec = 200
        ln, lln = mpmath.log(N), mpmath.log(mpmath.log(N))
        roots = {}
        for K in (1, 2, 3):
            L = {k: mpmath.exp(lls[K] - table[(k, K)][0] * ln + (table[(k, K)][1] - 1) * lln) for k in range(1, K + 1)}

            def f(x):
                return sum((x - L[k]) * roots[k] for k in range(1, K)) + (x - L[K]) * x

            lo, hi = mpmath.mpf(0), max(L.values()) * 2 + sum(roots.values())
            assert f(lo) <= 0 < f(hi)
            for _ in range(400):
                mid = (lo + hi) / 2
                if f(mid) > 0:
                    hi = mid
                else:
                    lo = mid
            roots[K] = (lo + hi) / 2
        for K in (1, 2, 3):
            expected = float(mpmath.log(roots[K]))
            assert got[K] == pytest.approx(expected, rel=1e-8)

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.floats(-5000, -100), min_size=3, max_size=6), st.integers(0, 5), st.floats(0.1, 100))
    def test_monotone_in_log_likelihood(self, values, which, bump):
        which %= len(values)
        lls = {k + 2: v for k, v in enumerate(values)}
        K = which + 2
        base = compute_sbic(SbicInput(lls, 10_000, 50, 60))
        bumped = dict(lls)
        bumped[K] += bump
        after = compute_sbic(SbicInput(bumped, 10_000, 50, 60))
        assert after[K] >= base[K] - 1e-9 * abs(base[K])

    def test_corpus_scale_is_finite(self):
        lls = {K: -1.0e8 + 3e5 * math.log(K) for K in range(50, 91)}
        out, diag = compute_sbic_with_diagnostics(SbicInput(lls, N=6_000_000, I=4675, J=50000))
        assert all(math.isfinite(v) for v in out.values())
        assert diag.precision_bits == 256
        assert len(diag.rows) == 41

    def test_input_validation(self):
        with pytest.raises(ValidationError):
            SbicInput({2: -1.0, 4: -1.0}, 100, 5, 5)
        with pytest.raises(ValidationError):
            SbicInput({2: float("inf")}, 100, 5, 5)
        with pytest.raises(ValidationError):
            SbicInput({2: -1.0}, 1, 5, 5)


def test_regular_argmax_matches_bic(rng):
    for _ in range(100):
        I, J, N = int(rng.integers(5, 40)), int(rng.integers(5, 60)), int(rng.integers(100, 100_000))
        lls = {K: float(v) for K, v in zip(range(2, 10), -rng.uniform(1e3, 1e5) + rng.normal(0, 500, 8))}
        out = compute_sbic(SbicInput(lls, N, I, J), regular_coefficient)
        b = {K: bic(v, K, I, J, N) for K, v in lls.items()}
        assert max(out, key=out.get) == max(b, key=b.get)
