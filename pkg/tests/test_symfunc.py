"""Symmetric-function kernel checks against enumeration and FD oracles."""

import math
from itertools import combinations, permutations

import numpy as np
import pytest

from warpflow import (
    ConeViolationError,
    QuotientSpeed,
    elementary_symmetric,
    gamma_k_contains,
    quotient_speed,
    quotient_speed_gradient,
    sample_gamma_k,
    sigma_gradient,
)

COMBOS = [(2, 1), (2, 2), (3, 2), (3, 3), (4, 2)]


def sigma_oracle(lam, j):
    """Brute-force subset enumeration."""
    if j == 0:
        return 1.0
    return float(sum(math.prod(c) for c in combinations(lam, j)))


class TestElementarySymmetric:
    def test_examples(self):
        assert elementary_symmetric([1.0, 1.0, 1.0], 2) == 3.0
        assert elementary_symmetric([4.0, -7.0, 0.3], 0) == 1.0
        assert elementary_symmetric([1.0, 2.0, 3.0], 2) == 11.0

    def test_against_enumeration(self):
        rng = np.random.default_rng(3)
        for n in range(2, 7):
            lam = rng.normal(0.0, 2.0, size=n)
            for j in range(n + 1):
                assert elementary_symmetric(lam, j) == pytest.approx(
                    sigma_oracle(lam, j), rel=1e-12, abs=1e-12
                )

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            elementary_symmetric([1.0, 2.0], 3)
        with pytest.raises(ValueError):
            elementary_symmetric([1.0, 2.0], -1)


class TestSigmaGradient:
    def test_examples(self):
        np.testing.assert_allclose(sigma_gradient([1.0, 1.0, 1.0], 2), [2, 2, 2])
        np.testing.assert_allclose(sigma_gradient([1.0, 2.0, 3.0], 1), [1, 1, 1])
        np.testing.assert_allclose(sigma_gradient([1.0, 2.0, 3.0], 3), [6, 3, 2])

    def test_against_deletion_oracle(self):
        rng = np.random.default_rng(5)
        lam = rng.normal(1.0, 1.0, size=5)
        for j in range(1, 6):
            grad = sigma_gradient(lam, j)
            for i in range(5):
                rest = np.delete(lam, i)
                assert grad[i] == pytest.approx(sigma_oracle(rest, j - 1),
                                                rel=1e-12, abs=1e-12)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            sigma_gradient([1.0, 2.0], 0)


class TestGammaCone:
    def test_examples(self):
        assert gamma_k_contains(np.ones(4), 4)
        assert gamma_k_contains([-1.0, 3.0], 1)
        assert not gamma_k_contains([-1.0, 3.0], 2)

    def test_batched(self):
        lam = np.array([[1.0, 1.0], [-1.0, 3.0], [-1.0, 0.5]])
        np.testing.assert_array_equal(gamma_k_contains(lam, 2),
                                      [True, False, False])


class TestQuotientSpeed:
    def test_construction_guards(self):
        with pytest.raises(ValueError):
            QuotientSpeed(n=2, k=3)
        with pytest.raises(ValueError):
            QuotientSpeed(n=2, k=0)

    def test_identity_value_is_dimension(self):
        for n, k in COMBOS:
            speed = QuotientSpeed(n=n, k=k)
            assert speed.value(np.ones(n)) == pytest.approx(n, rel=1e-14)

    def test_examples(self):
        assert QuotientSpeed(n=3, k=2).value([1.0, 1.0, 1.0]) == pytest.approx(3.0)
        assert QuotientSpeed(n=2, k=2).value([1.0, 2.0]) == pytest.approx(8.0 / 3.0)
        speed = QuotientSpeed(n=2, k=1)
        a, b = 0.37, 2.11
        assert speed.value([a, b]) == pytest.approx(a + b, rel=1e-15)

    def test_module_level_wrappers(self):
        speed = QuotientSpeed(n=2, k=2)
        lam = [1.0, 2.0]
        assert quotient_speed(speed, lam) == speed.value(lam)
        np.testing.assert_array_equal(quotient_speed_gradient(speed, lam),
                                      speed.gradient(lam))

    def test_cone_violation_raises_with_payload(self):
        speed = QuotientSpeed(n=2, k=2)
        with pytest.raises(ConeViolationError) as info:
            speed.value([-1.0, 3.0])
        err = info.value
        assert err.sigmas is not None and err.sigmas[2] < 0
        np.testing.assert_allclose(err.kappa, [-1.0, 3.0])
        with pytest.raises(ConeViolationError):
            speed.gradient([-1.0, 3.0])

    def test_gradient_identity_point(self):
        for n, k in COMBOS:
            grad = QuotientSpeed(n=n, k=k).gradient(np.ones(n))
            np.testing.assert_allclose(grad, np.ones(n), rtol=1e-13)

    def test_gradient_against_finite_differences(self):
        speed = QuotientSpeed(n=2, k=2)
        lam = np.array([1.0, 2.0])
        grad = speed.gradient(lam)
        h = 1e-6
        for i in range(2):
            dp, dm = lam.copy(), lam.copy()
            dp[i] += h
            dm[i] -= h
            fd = (speed.value(dp) - speed.value(dm)) / (2 * h)
            assert grad[i] == pytest.approx(fd, rel=1e-6)

    def test_euler_relation(self):
        lam = np.array([1.0, 2.0, 3.0])
        speed = QuotientSpeed(n=3, k=2)
        total = float(np.sum(speed.gradient(lam) * lam))
        assert total == pytest.approx(speed.value(lam), rel=1e-12)

    def test_evaluate_masks_outside_cone(self):
        speed = QuotientSpeed(n=2, k=2)
        lam = np.array([[1.0, 2.0], [-1.0, 3.0]])
        value, grad, inside = speed.evaluate(lam)
        np.testing.assert_array_equal(inside, [True, False])
        assert math.isnan(value[1]) and np.isnan(grad[1]).all()
        assert value[0] == pytest.approx(8.0 / 3.0)


class TestConeProperties:
    """Seeded property checks; the verification suite reruns them at 10^4."""

    SAMPLES = 2000

    @pytest.mark.parametrize("n,k", COMBOS)
    def test_quadratic_contraction_identity(self, n, k):
        rng = np.random.default_rng(100 + 10 * n + k)
        lam = sample_gamma_k(n, k, self.SAMPLES, rng)
        from warpflow import elementary_symmetric_table

        table = elementary_symmetric_table(lam)
        for ell in range(1, n):
            lhs = np.sum(sigma_gradient(lam, ell) * lam * lam, axis=-1)
            rhs = table[:, 1] * table[:, ell] - (ell + 1) * table[:, ell + 1]
            scale = np.maximum(np.abs(rhs), 1.0)
            assert np.max(np.abs(lhs - rhs) / scale) <= 1e-12

    @pytest.mark.parametrize("n,k", COMBOS)
    def test_gradient_bounds_on_cone(self, n, k):
        rng = np.random.default_rng(200 + 10 * n + k)
        lam = sample_gamma_k(n, k, self.SAMPLES, rng)
        speed = QuotientSpeed(n=n, k=k)
        F = speed.value(lam)
        dF = speed.gradient(lam)
        assert np.all(dF > 0.0)
        quad = np.sum(dF * lam * lam, axis=-1)
        assert np.min((quad - F * F / n) / (F * F)) >= -1e-10
        trace = np.sum(dF, axis=-1)
        assert np.min(trace) >= n - 1e-10
        assert np.max(trace) <= n * k + 1e-10

    @pytest.mark.parametrize("n,k", COMBOS)
    def test_homogeneity(self, n, k):
        rng = np.random.default_rng(300 + 10 * n + k)
        lam = sample_gamma_k(n, k, 500, rng)
        speed = QuotientSpeed(n=n, k=k)
        F = speed.value(lam)
        for c in (0.5, 2.0, 10.0):
            assert np.max(np.abs(speed.value(c * lam) - c * F) / (c * F)) <= 1e-12

    @pytest.mark.parametrize("n,k", COMBOS)
    def test_midpoint_concavity(self, n, k):
        rng = np.random.default_rng(400 + 10 * n + k)
        lam = sample_gamma_k(n, k, self.SAMPLES, rng)
        a, b = lam[0::2], lam[1::2]
        speed = QuotientSpeed(n=n, k=k)
        gap = speed.value(0.5 * (a + b)) - 0.5 * (speed.value(a) + speed.value(b))
        assert float(np.min(gap)) >= -1e-10

    def test_permutation_symmetry(self):
        speed = QuotientSpeed(n=3, k=2)
        lam = np.array([0.4, 1.3, 2.6])
        values = {speed.value(np.array(p)) for p in permutations(lam)}
        assert max(values) - min(values) <= 1e-13

    @pytest.mark.parametrize("n,k", COMBOS)
    def test_sampler_respects_cone(self, n, k):
        rng = np.random.default_rng(500 + 10 * n + k)
        lam = sample_gamma_k(n, k, 1000, rng)
        assert lam.shape == (1000, n)
        assert bool(np.all(gamma_k_contains(lam, k)))
