"""Ambient-space checks: horizon root, warp derivatives, coordinate map."""

import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from warpflow import (
    DomainError,
    WarpedAmbient,
    curvature_coeffs,
    horizon_radius,
    radial_coordinate,
    warp_derivatives,
)


def equation_residual(s: float, m: float, n: int) -> float:
    return abs(1.0 - m * s ** (1.0 - n) + s * s)


class TestHorizonRadius:
    def test_zero_mass_gives_zero(self):
        assert horizon_radius(0.0, 2) == 0.0

    def test_unit_root_by_substitution(self):
        # 1 - 2/1 + 1 = 0
        assert horizon_radius(2.0, 2) == pytest.approx(1.0, abs=1e-14)

    def test_against_bisection_oracle(self):
        # independent oracle: plain bisection on the original residual
        m, n = 1.0, 3

        def f(s):
            return 1.0 - m * s ** (1.0 - n) + s * s

        lo, hi = 1e-8, 2.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if f(mid) > 0:
                hi = mid
            else:
                lo = mid
        oracle = 0.5 * (lo + hi)
        s = horizon_radius(m, n)
        assert s == pytest.approx(oracle, rel=1e-12)
        assert equation_residual(s, m, n) <= 1e-12

    @pytest.mark.parametrize("m", [0.1, 1.0, 2.0, 10.0])
    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_residual_grid(self, m, n):
        s = horizon_radius(m, n)
        if n == 1 and m < 1.0:
            # 1 - m + s^2 has no nonnegative root here; the space has no
            # inner boundary and the radius degenerates to 0.
            assert s == 0.0
            return
        assert equation_residual(s, m, n) <= 1e-12

    def test_negative_mass_rejected(self):
        with pytest.raises(ValueError):
            horizon_radius(-1.0, 2)


class TestWarpDerivatives:
    def test_hyperbolic_values(self):
        amb = WarpedAmbient(n=2, m=0.0)
        pp, ppp = warp_derivatives(amb, 2.0)
        assert pp == pytest.approx(math.sqrt(5.0), rel=1e-15)
        assert ppp == pytest.approx(2.0, rel=1e-15)  # phi'' = phi when m = 0

    def test_massive_values(self):
        amb = WarpedAmbient(n=2, m=2.0)
        pp, ppp = warp_derivatives(amb, 2.0)
        assert pp == pytest.approx(2.0, rel=1e-15)
        assert ppp == pytest.approx(2.25, rel=1e-15)

    def test_horizon_limit(self):
        amb = WarpedAmbient(n=2, m=2.0)
        pp, _ = warp_derivatives(amb, 1.0 + 1e-9)
        assert 0.0 < pp < 1e-4

    def test_inside_horizon_rejected(self):
        amb = WarpedAmbient(n=2, m=2.0)
        with pytest.raises(DomainError):
            warp_derivatives(amb, 1.0)
        with pytest.raises(DomainError):
            warp_derivatives(amb, 0.5)

    @pytest.mark.parametrize("m,n", [(0.0, 2), (2.0, 2), (1.0, 3), (10.0, 4)])
    def test_second_derivative_consistent_with_squared_slope(self, m, n):
        # central difference of phi'^2 in rho must equal 2 phi''
        amb = WarpedAmbient(n=n, m=m)
        rng = np.random.default_rng(7)
        rho = amb.s0 + 0.5 + 3.0 * rng.random(50)
        h = 1e-6 * rho
        pp_p, _ = warp_derivatives(amb, rho + h)
        pp_m, _ = warp_derivatives(amb, rho - h)
        fd = (pp_p**2 - pp_m**2) / (2.0 * h)
        _, ppp = warp_derivatives(amb, rho)
        assert np.max(np.abs(fd - 2.0 * ppp) / np.abs(2.0 * ppp)) <= 1e-6

    @pytest.mark.parametrize("m,n", [(0.5, 2), (2.0, 2), (1.0, 3), (10.0, 4)])
    def test_convexity_identity(self, m, n):
        # 1 - phi'^2 + phi phi'' = m rho^(1-n) (n+1)/2
        amb = WarpedAmbient(n=n, m=m)
        rng = np.random.default_rng(11)
        rho = amb.s0 + 0.1 + 5.0 * rng.random(100)
        pp, ppp = warp_derivatives(amb, rho)
        lhs = 1.0 - pp * pp + rho * ppp
        rhs = 0.5 * m * rho ** (1.0 - n) * (n + 1)
        assert np.max(np.abs(lhs - rhs) / rhs) <= 1e-12

    def test_flat_variant(self):
        amb = WarpedAmbient.flat_space(2)
        pp, ppp = warp_derivatives(amb, 3.0)
        assert pp == 1.0 and ppp == 0.0
        assert radial_coordinate(amb, 3.0) == 3.0


class TestRadialCoordinate:
    def test_hyperbolic_closed_form(self):
        amb = WarpedAmbient(n=2, m=0.0)
        r = radial_coordinate(amb, math.sinh(1.0))
        assert r == pytest.approx(1.0, rel=1e-10)
        assert radial_coordinate(amb, 1e-8) == pytest.approx(1e-8, rel=1e-6)

    def test_against_ode_oracle(self):
        # independent oracle: integrate drho/dr = phi'(rho) outward from a
        # quadratic series start rho(r) = s0 + g'(s0) r^2 / 4 near r = 0
        amb = WarpedAmbient(n=2, m=2.0)
        gp0 = amb.m * (amb.n - 1) * amb.s0 ** (-amb.n) + 2.0 * amb.s0
        r0 = 1e-4
        rho_start = amb.s0 + 0.25 * gp0 * r0 * r0

        def rhs(r, y):
            return [math.sqrt(max(1.0 - amb.m / y[0] + y[0] * y[0], 0.0))]

        def hit(r, y):
            return y[0] - 3.0

        hit.terminal = True
        sol = solve_ivp(rhs, (r0, 10.0), [rho_start], rtol=1e-12, atol=1e-14,
                        events=hit, max_step=0.05)
        oracle = sol.t_events[0][0]
        assert radial_coordinate(amb, 3.0) == pytest.approx(oracle, rel=1e-6)

    def test_monotone_and_invertible(self):
        amb = WarpedAmbient(n=3, m=1.0)
        rhos = amb.s0 + np.array([0.05, 0.2, 0.7, 1.5, 4.0, 9.0])
        rs = [radial_coordinate(amb, x) for x in rhos]
        assert np.all(np.diff(rs) > 0)
        for rho_target, r_target in zip(rhos, rs):
            back = brentq(
                lambda x: radial_coordinate(amb, x) - r_target,
                amb.s0 + 1e-13, 2.0 * rhos[-1], xtol=1e-14, rtol=1e-13,
            )
            assert back == pytest.approx(rho_target, rel=1e-8)

    def test_domain_error(self):
        amb = WarpedAmbient(n=2, m=2.0)
        with pytest.raises(DomainError):
            radial_coordinate(amb, 0.5)


class TestCurvatureCoeffs:
    def test_hyperbolic_is_constant_curvature(self):
        amb = WarpedAmbient(n=2, m=0.0)
        for rho in (0.5, 2.0, 7.0):
            cc = curvature_coeffs(amb, rho)
            assert cc.tangential / rho**4 == pytest.approx(-1.0, rel=1e-15)
            assert cc.radial / rho**2 == pytest.approx(-1.0, rel=1e-15)

    def test_massive_values(self):
        cc = curvature_coeffs(WarpedAmbient(n=2, m=2.0), 2.0)
        assert cc.tangential == pytest.approx(-12.0, rel=1e-14)
        assert cc.radial == pytest.approx(-4.5, rel=1e-14)

    @pytest.mark.parametrize("n,factor", [(2, 8.0), (3, 16.0)])
    def test_normalized_deviation_power_law(self, n, factor):
        # |radial/phi^2 + 1| and |tangential/phi^4 + 1| decay like
        # rho^-(n+1): doubling rho from 10 to 20 divides them by 2^(n+1).
        # Forming the deviations costs ~11 digits to cancellation, hence
        # the modest tolerance on an analytically exact ratio.
        amb = WarpedAmbient(n=n, m=2.0)
        devs = []
        for rho in (10.0, 20.0):
            cc = curvature_coeffs(amb, rho)
            devs.append((abs(cc.radial / rho**2 + 1.0),
                         abs(cc.tangential / rho**4 + 1.0)))
        assert devs[0][0] / devs[1][0] == pytest.approx(factor, rel=1e-6)
        assert devs[0][1] / devs[1][1] == pytest.approx(factor, rel=1e-6)

    def test_flat_coeffs_vanish(self):
        cc = curvature_coeffs(WarpedAmbient.flat_space(2), 3.0)
        assert cc.tangential == 0.0 and cc.radial == 0.0
