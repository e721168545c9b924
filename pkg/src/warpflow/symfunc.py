"""Elementary symmetric function calculus on principal-curvature vectors.

Provides sigma_j, its gradient, the admissible-cone test, and the
normalized hessian-quotient speed

    F(lam) = norm * sigma_k(lam) / sigma_{k-1}(lam),
    norm   = n * C(n, k-1) / C(n, k) = n k / (n - k + 1),

which is positively homogeneous of degree one, concave on the cone
Gamma_k = {lam : sigma_j(lam) > 0 for 1 <= j <= k}, and normalized so
that F(1, ..., 1) = n.  All functions are vectorized over leading axes:
``lam`` has shape (..., n) and results broadcast accordingly.

sigma_j is computed by the polynomial-coefficient recurrence over
prod_i (1 + lam_i x) (O(n^2) per point, no subset enumeration), which is
cancellation-safe at the small n used here.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConeViolationError

__all__ = [
    "QuotientSpeed",
    "elementary_symmetric",
    "elementary_symmetric_table",
    "sigma_gradient",
    "gamma_k_contains",
    "quotient_speed",
    "quotient_speed_gradient",
    "sample_gamma_k",
]


def elementary_symmetric_table(lam) -> np.ndarray:
    """All sigma_0 .. sigma_n along the last axis, shape (..., n+1)."""
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    e = np.zeros(lam.shape[:-1] + (n + 1,))
    e[..., 0] = 1.0
    for i in range(n):
        x = lam[..., i]
        for j in range(min(i + 1, n), 0, -1):
            e[..., j] += x * e[..., j - 1]
    return e


def elementary_symmetric(lam, j: int):
    """sigma_j(lam); sigma_0 = 1 by the empty-product convention."""
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    if not 0 <= j <= n:
        raise ValueError(f"j must lie in [0, {n}], got {j}")
    out = elementary_symmetric_table(lam)[..., j]
    return float(out) if out.ndim == 0 else out


def sigma_gradient(lam, j: int):
    """Gradient of sigma_j: component i equals sigma_{j-1} with entry i removed."""
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    if not 1 <= j <= n:
        raise ValueError(f"j must lie in [1, {n}], got {j}")
    out = np.empty_like(lam)
    for i in range(n):
        rest = np.delete(lam, i, axis=-1)
        out[..., i] = elementary_symmetric_table(rest)[..., j - 1]
    return out


def gamma_k_contains(lam, k: int):
    """True where sigma_j(lam) > 0 for all 1 <= j <= k."""
    lam = np.asarray(lam, dtype=float)
    n = lam.shape[-1]
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    table = elementary_symmetric_table(lam)
    ok = np.all(table[..., 1 : k + 1] > 0.0, axis=-1)
    return bool(ok) if ok.ndim == 0 else ok


@dataclass(frozen=True)
class QuotientSpeed:
    """Normalized hessian-quotient speed of order k in dimension n."""

    n: int
    k: int
    norm: float = field(init=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("dimension must be a positive integer")
        if not 1 <= self.k <= self.n:
            raise ValueError(f"require 1 <= k <= n, got k={self.k}, n={self.n}")
        norm = self.n * math.comb(self.n, self.k - 1) / math.comb(self.n, self.k)
        object.__setattr__(self, "norm", norm)

    def _check_cone(self, lam, table):
        inside = np.all(table[..., 1 : self.k + 1] > 0.0, axis=-1)
        if not np.all(inside):
            idx = np.unravel_index(int(np.argmin(inside)), np.shape(inside)) if np.ndim(inside) else ()
            bad = tuple(int(i) for i in idx)
            raise ConeViolationError(
                f"curvature vector left the admissible cone (order {self.k}) at index {bad}",
                sigmas=np.asarray(table[bad + (slice(None),)][: self.k + 1]),
                index=bad,
                kappa=np.asarray(lam)[bad + (slice(None),)].copy(),
            )

    def _value_raw(self, table):
        return self.norm * table[..., self.k] / table[..., self.k - 1]

    def value(self, lam):
        """F(lam).  Raises ConeViolationError outside Gamma_k."""
        lam = np.asarray(lam, dtype=float)
        table = elementary_symmetric_table(lam)
        self._check_cone(lam, table)
        out = self._value_raw(table)
        return float(out) if out.ndim == 0 else out

    def gradient(self, lam):
        """Eigenvalue derivatives dF/dlam_i, shape (..., n).

        On Gamma_k all components are strictly positive, their sum lies
        in [n, nk], and the degree-one Euler relation
        sum_i dF/dlam_i * lam_i = F holds identically.
        """
        lam = np.asarray(lam, dtype=float)
        table = elementary_symmetric_table(lam)
        self._check_cone(lam, table)
        return self._gradient_raw(lam, table)

    def _gradient_raw(self, lam, table):
        k = self.k
        sk = table[..., k]
        skm1 = table[..., k - 1]
        gk = sigma_gradient(lam, k)
        if k >= 2:
            gkm1 = sigma_gradient(lam, k - 1)
        else:
            gkm1 = np.zeros_like(lam)
        num = gk * skm1[..., None] - sk[..., None] * gkm1
        return self.norm * num / (skm1 * skm1)[..., None]

    def evaluate(self, lam):
        """Non-raising evaluation: (F, dF, inside_cone_mask).

        F and dF are NaN where the mask is False.  This is the entry
        point used by the geometry assembly, which must flag (not throw
        past) cone exits.
        """
        lam = np.asarray(lam, dtype=float)
        table = elementary_symmetric_table(lam)
        inside = np.all(table[..., 1 : self.k + 1] > 0.0, axis=-1)
        with np.errstate(divide="ignore", invalid="ignore"):
            value = self._value_raw(table)
            grad = self._gradient_raw(lam, table)
        if not np.all(inside):
            value = np.where(inside, value, np.nan)
            grad = np.where(inside[..., None], grad, np.nan)
        return value, grad, inside


def quotient_speed(speed: QuotientSpeed, lam):
    """F(lam) = norm * sigma_k / sigma_{k-1}; requires lam in Gamma_k."""
    return speed.value(lam)


def quotient_speed_gradient(speed: QuotientSpeed, lam):
    """dF/dlam_i; requires lam in Gamma_k."""
    return speed.gradient(lam)


def sample_gamma_k(n: int, k: int, count: int, rng: np.random.Generator,
                   mean: float = 1.0, sd: float = 0.75) -> np.ndarray:
    """Rejection-sample ``count`` vectors from Gamma_k.

    Components are drawn i.i.d. Normal(mean, sd) and the draw is kept
    only if it lies in the cone, which concentrates samples near the
    identity while still exercising boundary-adjacent points.
    """
    out = np.empty((count, n))
    have = 0
    while have < count:
        batch = rng.normal(mean, sd, size=(max(count - have, 256), n))
        keep = batch[gamma_k_contains(batch, k)]
        take = min(len(keep), count - have)
        out[have : have + take] = keep[:take]
        have += take
    return out
