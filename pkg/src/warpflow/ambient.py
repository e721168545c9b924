"""Warped-product ambient geometry, algebraic in the areal radius.

The ambient space is the rotationally symmetric manifold S^n x (s0, inf)
with metric dr^2 + phi(r)^2 sigma, sigma the round metric, where the warp
factor solves

    phi'(r) = sqrt(1 - m phi^(1-n) + phi^2),       m >= 0.

All quantities here are parametrized by the areal radius rho = phi(r)
rather than by r, which makes them closed-form:

    phi'(rho)  = sqrt(1 - m rho^(1-n) + rho^2)
    phi''(rho) = rho + (n-1) m / (2 rho^n)

The second line follows from differentiating phi'^2 along r:
2 phi' phi'' = (d/drho)(phi'^2) * phi', so phi'' = (1/2) d(phi'^2)/drho.
m = 0 is hyperbolic space (phi = sinh r); the ``flat`` variant
(phi = r, phi' = 1, phi'' = 0) exists only for cross-checks.

The inner boundary s0 is the unique nonnegative root of
1 - m s^(1-n) + s^2 = 0 when one exists (always for n >= 2 and m > 0;
for n = 1 a positive root requires m > 1, otherwise s0 = 0).

The coordinate map r(rho) = integral_{s0}^{rho} ds / phi'(s) is computed
on demand only; nothing in the evolution loop needs it.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .errors import DomainError

__all__ = [
    "WarpedAmbient",
    "CurvatureCoeffs",
    "horizon_radius",
    "warp_derivatives",
    "radial_coordinate",
    "curvature_coeffs",
]


def horizon_radius(m: float, n: int) -> float:
    """Nonnegative root of 1 - m s^(1-n) + s^2 = 0.

    The equation is polynomialized to f(s) = s^(n-1) (1 + s^2) - m, which
    is strictly increasing for s > 0 and has no poles, so bracketed
    bisection always converges; a few Newton steps polish the root to
    machine precision.

    Returns 0 when m = 0, and for n = 1 with m <= 1 (the only regime in
    which the equation has no positive root; there the space simply has
    no inner boundary).
    """
    if m < 0:
        raise ValueError("mass must be nonnegative")
    if n < 1:
        raise ValueError("dimension must be a positive integer")
    if m == 0.0:
        return 0.0
    if n == 1:
        # s^(1-n) == 1, so the equation reads 1 - m + s^2 = 0.
        return math.sqrt(m - 1.0) if m > 1.0 else 0.0

    def f(s):
        return s ** (n - 1) * (1.0 + s * s) - m

    lo, hi = 0.0, max(1.0, m)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if f(mid) > 0.0:
            hi = mid
        else:
            lo = mid
    s = 0.5 * (lo + hi)
    for _ in range(3):
        fp = (n - 1) * s ** (n - 2) * (1.0 + s * s) + 2.0 * s**n
        s -= f(s) / fp
    return s


@dataclass(frozen=True)
class WarpedAmbient:
    """Ambient parameters: dimension n, mass m, inner boundary s0.

    ``s0`` is derived from (m, n) automatically.  ``flat`` selects the
    Euclidean cross-check variant and forces m = 0, s0 = 0.
    """

    n: int
    m: float
    flat: bool = False
    s0: float = field(init=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("dimension must be a positive integer")
        if self.m < 0:
            raise ValueError("mass must be nonnegative")
        if self.flat and self.m != 0.0:
            raise ValueError("flat variant requires m = 0")
        object.__setattr__(self, "s0", horizon_radius(self.m, self.n))

    @classmethod
    def flat_space(cls, n: int) -> "WarpedAmbient":
        return cls(n=n, m=0.0, flat=True)


@dataclass(frozen=True)
class CurvatureCoeffs:
    """Sectional-curvature coefficients of the ambient space.

    ``tangential`` = phi^2 (1 - phi'^2) multiplies the purely spherical
    curvature combination; ``radial`` = -phi phi'' multiplies the mixed
    (sphere, radial) component.  Normalized by phi^4 resp. phi^2 both
    tend to -1 like rho^-(n+1), the asymptotically hyperbolic regime.
    """

    tangential: float
    radial: float


def _check_domain(ambient: WarpedAmbient, rho) -> None:
    if np.any(np.asarray(rho) <= ambient.s0):
        raise DomainError(
            f"areal radius must exceed the inner boundary s0={ambient.s0!r}"
        )


def warp_derivatives(ambient: WarpedAmbient, rho):
    """phi' and phi'' as functions of the areal radius.

    Accepts scalars or arrays; returns a matching (phi', phi'') pair.
    Raises DomainError for rho <= s0.
    """
    scalar = np.ndim(rho) == 0
    r = np.asarray(rho, dtype=float)
    _check_domain(ambient, r)
    if ambient.flat:
        pp = np.ones_like(r)
        ppp = np.zeros_like(r)
    else:
        n, m = ambient.n, ambient.m
        if m == 0.0:
            pp = np.sqrt(1.0 + r * r)
            ppp = r.copy()
        else:
            pp = np.sqrt(1.0 - m * r ** (1.0 - n) + r * r)
            ppp = r + 0.5 * (n - 1) * m * r ** (-float(n))
    if scalar:
        return float(pp), float(ppp)
    return pp, ppp


def curvature_coeffs(ambient: WarpedAmbient, rho):
    """Sectional-curvature coefficients at areal radius rho."""
    pp, ppp = warp_derivatives(ambient, rho)
    r = np.asarray(rho, dtype=float) if np.ndim(rho) else float(rho)
    tangential = r * r * (1.0 - pp * pp)
    radial = -r * ppp
    return CurvatureCoeffs(tangential=tangential, radial=radial)


def radial_coordinate(ambient: WarpedAmbient, rho: float) -> float:
    """Geodesic radial coordinate r with phi(r) = rho.

    Evaluates r = integral_{s0}^{rho} ds / phi'(s).  The integrand has an
    inverse-square-root singularity at s0 when m > 0; the substitution
    s = s0 + tau^2 removes it, after which adaptive Gauss-Kronrod
    quadrature sees a smooth integrand.
    """
    rho = float(rho)
    if rho <= ambient.s0:
        raise DomainError(
            f"areal radius must exceed the inner boundary s0={ambient.s0!r}"
        )
    if ambient.flat:
        return rho
    n, m, s0 = ambient.n, ambient.m, ambient.s0

    if m == 0.0:

        def integrand(tau):
            sig = tau * tau
            return 2.0 * tau / math.hypot(1.0, sig)

    else:
        # d(phi'^2)/ds at s0; phi'(s0 + tau^2) ~ sqrt(gp0) * tau
        gp0 = m * (n - 1) * s0 ** (-float(n)) + 2.0 * s0

        def integrand(tau):
            if tau == 0.0:
                return 2.0 / math.sqrt(gp0)
            delta = tau * tau
            sig = s0 + delta
            # phi'^2 = (1 + sig^2)(1 - (s0/sig)^(n-1)) + (sig^2 - s0^2)(s0/sig)^(n-1)
            # via the root relation m = s0^(n-1)(1 + s0^2); each factor is
            # evaluated without subtracting O(1) terms, so the integrand
            # keeps full relative precision arbitrarily close to s0.
            ln_ratio = -math.log1p(delta / s0)
            pow_ratio = math.exp((n - 1) * ln_ratio)
            pp2 = (-(1.0 + sig * sig) * math.expm1((n - 1) * ln_ratio)
                   + delta * (sig + s0) * pow_ratio)
            if pp2 <= 0.0:
                return 2.0 / math.sqrt(gp0)
            return 2.0 * tau / math.sqrt(pp2)

    upper = math.sqrt(rho - s0)
    value, _ = quad(integrand, 0.0, upper, epsabs=1e-13, epsrel=1e-12, limit=200)
    return value
