"""Sphere discretization and extrinsic geometry of radial graphs.

A star-shaped hypersurface is stored as the areal radius rho at every
node of a grid on S^n.  Three grid modes exist:

* ``symmetric``     one node, any n: the fully round case, where the
                    surface is a geodesic sphere and the PDE is an ODE;
* ``axisymmetric``  n = 2, fields depend on the polar angle only; nodes
                    are staggered, theta_j = (j + 1/2) pi / N, so they
                    never touch the poles and even reflection across
                    both poles supplies exact ghost values;
* ``latlong``       n = 2, full (theta, azimuth) grid with the identical
                    per-node pipeline (optional extension; the pole-
                    adjacent azimuthal spacing makes explicit stepping
                    expensive, so it is used for geometry checks).

The geometry assembly works in the graph potential phi_pot (the radial
integral of 1/phi), whose sphere-covariant derivatives follow from the
rho field by the chain rule

    phi_pot_i  = rho_i / (rho phi'),
    phi_pot_ij = rho_ij / (rho phi')
                 - (phi'^2 + rho phi'') / (rho^2 phi'^3) rho_i rho_j,

after which, per node,

    v    = sqrt(1 + |grad phi_pot|^2)
    g_ij = rho^2 (phi_pot_i phi_pot_j + sigma_ij)
    h_ij = (rho / v) (phi' (sigma_ij + phi_pot_i phi_pot_j) - phi_pot_ij)

and the principal curvatures are the eigenvalues of the symmetric pencil
(h, g).  Constant graphs make every derivative vanish identically (the
finite differences of a constant field are exactly zero), so umbilicity
kappa_i = phi'/rho holds to machine precision, with no differencing
error.
"""

import math
from dataclasses import dataclass

import numpy as np

from .ambient import WarpedAmbient, warp_derivatives
from .errors import ConfigurationError, DomainError, GeometryError
from .symfunc import QuotientSpeed

__all__ = [
    "SphericalGrid",
    "GraphState",
    "GeometrySnapshot",
    "sphere_area",
    "build_grid",
    "sphere_derivatives",
    "geometry_from_state",
    "principal_curvatures",
    "write_snapshot",
]

MODES = ("symmetric", "axisymmetric", "latlong")


def sphere_area(n: int) -> float:
    """Surface measure of the unit S^n (4 pi for n = 2)."""
    return 2.0 * math.pi ** ((n + 1) / 2.0) / math.gamma((n + 1) / 2.0)


@dataclass(frozen=True)
class SphericalGrid:
    """Discretization of S^n; see the module docstring for the modes.

    ``theta``/``azimuth`` hold per-node angles (azimuth is None outside
    latlong mode), ``shape`` the logical grid shape behind the flat node
    ordering, and ``quad_weights`` exact per-cell measures of the round
    sphere (they sum to the area of S^n by telescoping, not just up to
    quadrature error).
    """

    mode: str
    n: int
    node_count: int
    theta: np.ndarray
    azimuth: np.ndarray | None
    dtheta: float
    dazimuth: float | None
    shape: tuple
    quad_weights: np.ndarray


def build_grid(mode: str, n: int, resolution: int | None = None) -> SphericalGrid:
    """Build a grid; raises ConfigurationError on unsupported (mode, n)."""
    if mode not in MODES:
        raise ConfigurationError(f"unknown grid mode {mode!r}")
    if n < 1:
        raise ConfigurationError("dimension must be a positive integer")
    if mode == "symmetric":
        return SphericalGrid(
            mode=mode, n=n, node_count=1,
            theta=_frozen(np.zeros(1)), azimuth=None,
            dtheta=0.0, dazimuth=None, shape=(1,),
            quad_weights=_frozen(np.array([sphere_area(n)])),
        )
    if n != 2:
        raise ConfigurationError(f"mode {mode!r} supports n = 2 only, got n = {n}")
    if resolution is None or int(resolution) < 2:
        raise ConfigurationError("angular resolution must be an integer >= 2")
    N = int(resolution)
    dtheta = math.pi / N
    theta = (np.arange(N) + 0.5) * dtheta
    edges = np.arange(N + 1) * dtheta
    # Exact cell measures 2 pi (cos theta_- - cos theta_+); the midpoint
    # weights 2 pi sin(theta_j) dtheta would miss 4 pi by O(dtheta^2).
    band = 2.0 * math.pi * (np.cos(edges[:-1]) - np.cos(edges[1:]))
    if mode == "axisymmetric":
        return SphericalGrid(
            mode=mode, n=2, node_count=N,
            theta=_frozen(theta), azimuth=None,
            dtheta=dtheta, dazimuth=None, shape=(N,),
            quad_weights=_frozen(band),
        )
    naz = 2 * N  # even, so the cross-pole ghost shift by pi is exact
    dazimuth = 2.0 * math.pi / naz
    azimuth = np.arange(naz) * dazimuth
    th2 = np.repeat(theta, naz)
    az2 = np.tile(azimuth, N)
    w2 = np.repeat(band / naz, naz)
    return SphericalGrid(
        mode=mode, n=2, node_count=N * naz,
        theta=_frozen(th2), azimuth=_frozen(az2),
        dtheta=dtheta, dazimuth=dazimuth, shape=(N, naz),
        quad_weights=_frozen(w2),
    )


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr, dtype=float)
    arr.setflags(write=False)
    return arr


def _pad_even_theta(f2d: np.ndarray, latlong: bool) -> np.ndarray:
    """One ghost row beyond each pole by even reflection.

    Axisymmetric fields reflect as-is; on the latlong grid the point
    (-theta, az) coincides with (theta, az + pi), a half-period roll.
    """
    lo, hi = f2d[:1], f2d[-1:]
    if latlong:
        half = f2d.shape[1] // 2
        lo = np.roll(lo, half, axis=1)
        hi = np.roll(hi, half, axis=1)
    return np.concatenate([lo, f2d, hi], axis=0)


def sphere_derivatives(field, grid: SphericalGrid):
    """Covariant gradient and Hessian of a scalar field on the round S^n.

    Returns (grad, hess) with shapes (node_count, n) and
    (node_count, n, n) in the (theta, azimuth) coordinate basis; the
    azimuthal Hessian entry is the full covariant component, e.g.
    sin(theta) cos(theta) f' for axisymmetric fields.  Differencing is
    2nd-order central with even-reflection ghosts across both poles and
    a periodic azimuth.
    """
    f = np.asarray(field, dtype=float)
    if f.shape != (grid.node_count,):
        raise ValueError(f"field must have shape ({grid.node_count},)")
    if not np.all(np.isfinite(f)):
        raise ValueError("field must be finite everywhere")
    n = grid.n
    grad = np.zeros((grid.node_count, n))
    hess = np.zeros((grid.node_count, n, n))
    if grid.mode == "symmetric":
        return grad, hess

    th = grid.theta
    dth = grid.dtheta
    sin_t, cos_t = np.sin(th), np.cos(th)
    if grid.mode == "axisymmetric":
        p = _pad_even_theta(f[:, None], latlong=False)[:, 0]
        ft = (p[2:] - p[:-2]) / (2.0 * dth)
        ftt = (p[2:] - 2.0 * p[1:-1] + p[:-2]) / dth**2
        grad[:, 0] = ft
        hess[:, 0, 0] = ftt
        hess[:, 1, 1] = sin_t * cos_t * ft
        return grad, hess

    nt, na = grid.shape
    f2 = f.reshape(nt, na)
    daz = grid.dazimuth
    p = _pad_even_theta(f2, latlong=True)
    ft = (p[2:] - p[:-2]) / (2.0 * dth)
    ftt = (p[2:] - 2.0 * p[1:-1] + p[:-2]) / dth**2
    fa = (np.roll(f2, -1, axis=1) - np.roll(f2, 1, axis=1)) / (2.0 * daz)
    faa = (np.roll(f2, -1, axis=1) - 2.0 * f2 + np.roll(f2, 1, axis=1)) / daz**2
    pa = _pad_even_theta(fa, latlong=True)
    fta = (pa[2:] - pa[:-2]) / (2.0 * dth)

    st = sin_t.reshape(nt, na)[:, :1]
    ct = cos_t.reshape(nt, na)[:, :1]
    cot = ct / st  # staggered nodes keep sin(theta) >= sin(dtheta/2) > 0
    grad[:, 0] = ft.ravel()
    grad[:, 1] = fa.ravel()
    hess[:, 0, 0] = ftt.ravel()
    hess[:, 0, 1] = hess[:, 1, 0] = (fta - cot * fa).ravel()
    hess[:, 1, 1] = (faa + st * ct * ft).ravel()
    return grad, hess


@dataclass(frozen=True)
class GraphState:
    """Flow time plus the areal-radius field over the grid nodes."""

    t: float
    rho: np.ndarray


@dataclass(frozen=True)
class GeometrySnapshot:
    """Per-node extrinsic geometry of a graph state.

    ``kappa`` holds the principal curvatures ascending, ``F_grad`` the
    eigenvalue derivatives of the speed in the same order.  When any
    node leaves the admissible cone the snapshot is flagged invalid
    (``valid`` False, ``bad_node``/``bad_kappa`` set) and F-derived
    fields are NaN at the offending nodes; downstream consumers must
    not step an invalid snapshot.  All arrays are read-only.
    """

    t: float
    grid: SphericalGrid
    rho: np.ndarray
    warp_prime: np.ndarray
    grad_phi: np.ndarray
    grad_phi_norm: np.ndarray
    v: np.ndarray
    metric: np.ndarray
    second_ff: np.ndarray
    kappa: np.ndarray
    F: np.ndarray
    F_grad: np.ndarray
    u: np.ndarray
    phi_dot: np.ndarray
    valid: bool
    bad_node: int | None = None
    bad_kappa: np.ndarray | None = None


def _pencil_eigenvalues_2x2(g: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Ascending eigenvalues of det(h - kappa g) = 0, stacked over nodes.

    Uses the cancellation-safe discriminant
    (g22 h11 - g11 h22)^2 + 4 (g22 h12 - g12 h22)(g11 h12 - g12 h11)
    so that umbilic points (where the two roots coincide) do not lose
    half the significant digits to subtraction.
    """
    g11, g22, g12 = g[..., 0, 0], g[..., 1, 1], g[..., 0, 1]
    h11, h22, h12 = h[..., 0, 0], h[..., 1, 1], h[..., 0, 1]
    detg = g11 * g22 - g12 * g12
    if np.any(g11 <= 0.0) or np.any(detg <= 0.0):
        raise GeometryError("induced metric is not positive definite")
    trace_num = g22 * h11 + g11 * h22 - 2.0 * g12 * h12
    disc = (g22 * h11 - g11 * h22) ** 2 + 4.0 * (g22 * h12 - g12 * h22) * (
        g11 * h12 - g12 * h11
    )
    root = np.sqrt(np.maximum(disc, 0.0))  # symmetric pencil: real spectrum
    lo = (trace_num - root) / (2.0 * detg)
    hi = (trace_num + root) / (2.0 * detg)
    return np.stack([lo, hi], axis=-1)


def _pencil_eigenvalues(g: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Ascending eigenvalues of the pencil (h, g) for stacked matrices."""
    if g.shape[-1] == 2:
        return _pencil_eigenvalues_2x2(g, h)
    try:
        L = np.linalg.cholesky(g)
    except np.linalg.LinAlgError as exc:
        raise GeometryError("induced metric is not positive definite") from exc
    a = np.linalg.solve(L, h)
    b = np.linalg.solve(L, np.swapaxes(a, -1, -2))
    return np.linalg.eigvalsh(b)


def principal_curvatures(g, h) -> np.ndarray:
    """Eigenvalues of the shape operator for one (g, h) pair, ascending.

    g must be symmetric positive definite; computed by congruence
    (Cholesky of g, then a symmetric eigenproblem), with a closed form
    in the 2 x 2 case.
    """
    g = np.asarray(g, dtype=float)
    h = np.asarray(h, dtype=float)
    if g.shape != h.shape or g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ValueError("g and h must be equal-shape square matrices")
    kappa = _pencil_eigenvalues(g[None], h[None])[0]
    return kappa


def _round_metric_diag(grid: SphericalGrid):
    """Diagonals of sigma and sigma^{-1} in the coordinate basis."""
    if grid.mode == "symmetric":
        d = np.ones((1, grid.n))
        return d, d
    s2 = np.sin(grid.theta) ** 2
    diag = np.stack([np.ones_like(s2), s2], axis=-1)
    inv = np.stack([np.ones_like(s2), 1.0 / s2], axis=-1)
    return diag, inv


def geometry_from_state(state: GraphState, grid: SphericalGrid,
                        ambient: WarpedAmbient, speed: QuotientSpeed) -> GeometrySnapshot:
    """Assemble the full per-node extrinsic geometry of a graph state."""
    if speed.n != grid.n:
        raise ConfigurationError(
            f"speed dimension {speed.n} does not match grid dimension {grid.n}"
        )
    rho = np.asarray(state.rho, dtype=float)
    if rho.shape != (grid.node_count,):
        raise ConfigurationError(
            f"state has {rho.shape} nodes, grid expects ({grid.node_count},)"
        )
    if not np.all(np.isfinite(rho)):
        raise GeometryError("areal radius field contains NaN/Inf")
    if np.any(rho <= ambient.s0):
        raise DomainError(
            f"areal radius must exceed the inner boundary s0={ambient.s0!r}"
        )
    if grid.mode == "symmetric":
        return _symmetric_snapshot(state.t, float(rho[0]), grid, ambient, speed)

    pp, ppp = warp_derivatives(ambient, rho)
    grad_r, hess_r = sphere_derivatives(rho, grid)

    # Chain rule from rho to the graph potential.
    a = 1.0 / (rho * pp)
    b = (pp * pp + rho * ppp) / (rho**2 * pp**3)
    gphi = grad_r * a[:, None]
    hphi = hess_r * a[:, None, None] - b[:, None, None] * (
        grad_r[:, :, None] * grad_r[:, None, :]
    )

    sig_d, sig_inv_d = _round_metric_diag(grid)
    grad2 = np.sum(gphi * gphi * sig_inv_d, axis=1)
    v = np.sqrt(1.0 + grad2)

    outer = gphi[:, :, None] * gphi[:, None, :]
    sig = np.zeros_like(outer)
    sig[:, 0, 0] = sig_d[:, 0]
    sig[:, 1, 1] = sig_d[:, 1]
    metric = (rho * rho)[:, None, None] * (outer + sig)
    second_ff = (rho / v)[:, None, None] * (pp[:, None, None] * (sig + outer) - hphi)

    kappa = _pencil_eigenvalues(metric, second_ff)
    F, F_grad, inside = speed.evaluate(kappa)
    valid = bool(np.all(inside))
    bad_node = None if valid else int(np.argmin(inside))
    bad_kappa = None if valid else kappa[bad_node].copy()

    u = rho / v
    with np.errstate(invalid="ignore"):
        phi_dot = v / (rho * F)
    return GeometrySnapshot(
        t=state.t, grid=grid,
        rho=_frozen(rho), warp_prime=_frozen(pp),
        grad_phi=_frozen(gphi), grad_phi_norm=_frozen(np.sqrt(grad2)),
        v=_frozen(v), metric=_frozen(metric), second_ff=_frozen(second_ff),
        kappa=_frozen(kappa), F=_frozen(F), F_grad=_frozen(F_grad),
        u=_frozen(u), phi_dot=_frozen(phi_dot),
        valid=valid, bad_node=bad_node, bad_kappa=bad_kappa,
    )


def _symmetric_snapshot(t: float, rho0: float, grid: SphericalGrid,
                        ambient: WarpedAmbient, speed: QuotientSpeed) -> GeometrySnapshot:
    """Geodesic-sphere geometry in closed form (one umbilic node).

    With all tangential derivatives exactly zero the node is umbilic with
    kappa_i = phi'/rho, and degree-one homogeneity gives F = n kappa and
    dF/dkappa_i = 1 without touching the sigma_k recurrences.
    """
    n = grid.n
    pp, ppp = warp_derivatives(ambient, rho0)
    c = pp / rho0
    valid = c > 0.0
    F0 = n * c if valid else math.nan
    eye = np.eye(n)
    kap = np.full(n, c)
    return GeometrySnapshot(
        t=t, grid=grid,
        rho=_frozen(np.array([rho0])), warp_prime=_frozen(np.array([pp])),
        grad_phi=_frozen(np.zeros((1, n))), grad_phi_norm=_frozen(np.zeros(1)),
        v=_frozen(np.ones(1)),
        metric=_frozen(rho0 * rho0 * eye[None]),
        second_ff=_frozen(rho0 * pp * eye[None]),
        kappa=_frozen(kap[None]),
        F=_frozen(np.array([F0])),
        F_grad=_frozen(np.ones((1, n)) if valid else np.full((1, n), math.nan)),
        u=_frozen(np.array([rho0])),
        phi_dot=_frozen(np.array([1.0 / (rho0 * F0) if valid else math.nan])),
        valid=valid,
        bad_node=None if valid else 0,
        bad_kappa=None if valid else kap.copy(),
    )


def write_snapshot(snapshot: GeometrySnapshot, path) -> None:
    """Dump one row per node: angles, rho, v, kappa_1..kappa_n, F, u.

    Plain comma-separated text with a header row; floats carry 17
    significant digits so files are bitwise reproducible.
    """
    grid = snapshot.grid
    n = grid.n
    cols = ["theta"]
    if grid.mode == "latlong":
        cols.append("azimuth")
    cols += ["rho", "v"] + [f"kappa_{i + 1}" for i in range(n)] + ["F", "u"]
    with open(path, "w", encoding="ascii") as fh:
        fh.write(",".join(cols) + "\n")
        for j in range(grid.node_count):
            vals = [grid.theta[j]]
            if grid.mode == "latlong":
                vals.append(grid.azimuth[j])
            vals += [snapshot.rho[j], snapshot.v[j]]
            vals += list(snapshot.kappa[j])
            vals += [snapshot.F[j], snapshot.u[j]]
            fh.write(",".join(f"{x:.17g}" for x in vals) + "\n")
