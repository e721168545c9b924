"""Post-processing: rate fits, bound checks, and identity residuals.

Everything here consumes immutable run records or geometry snapshots and
turns them into verdicts:

* ``fit_decay_rate``       least-squares line through (t, ln y); the
                           slope is the signed exponential rate;
* ``shape_deviation``      max_i |kappa_i - 1|, the eigenframe operator
                           norm of the shape operator minus the identity;
* ``check_bounds``         pass/fail entries for the a-priori bounds the
                           flow must satisfy (F bounded above and away
                           from zero, curvatures and the potential's
                           time derivative bounded, tail-window maximum
                           curvature near 1, tail F_min near n);
* ``codazzi_residual`` /   discretization-honesty residuals: both sides
  ``support_identity_residual``
                           of exact structural identities are formed
                           discretely, so the defect must vanish at the
                           stencil order (and to roundoff on constant
                           graphs, where every difference is exactly 0).

Measured constants are reported with margins rather than compared
against unspecified existential constants; only signs, finiteness,
exponents, and tail tolerances gate pass/fail.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .ambient import WarpedAmbient, warp_derivatives
from .errors import DiagnosticError
from .surface import GeometrySnapshot, sphere_derivatives

__all__ = [
    "RateFit",
    "ClaimResult",
    "BoundReport",
    "fit_decay_rate",
    "tail_window",
    "shape_deviation",
    "check_bounds",
    "codazzi_residual",
    "support_identity_residual",
]


@dataclass(frozen=True)
class RateFit:
    """Log-linear fit over a time window."""

    window: tuple
    slope: float
    intercept: float
    r_squared: float
    n_samples: int


@dataclass(frozen=True)
class ClaimResult:
    """One checked claim: measured value against its reference bound."""

    claim: str
    passed: bool
    measured: float
    bound: str
    margin: float
    note: str = ""

    def line(self) -> str:
        status = "pass" if self.passed else "FAIL"
        out = (f"[{self.claim}]\n  status = {status}\n  measured = {self.measured:.17g}\n"
               f"  bound = {self.bound}\n  margin = {self.margin:.17g}")
        if self.note:
            out += f"\n  note = {self.note}"
        return out


@dataclass
class BoundReport:
    """Collection of claim results; passes iff every claim passes."""

    entries: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def add(self, *args, **kwargs) -> ClaimResult:
        entry = ClaimResult(*args, **kwargs)
        self.entries.append(entry)
        return entry

    def extend(self, other: "BoundReport") -> None:
        self.entries.extend(other.entries)

    def to_text(self) -> str:
        blocks = [e.line() for e in self.entries]
        verdict = "ALL CLAIMS PASS" if self.passed else "CLAIM FAILURES PRESENT"
        blocks.append(f"[summary]\n  claims = {len(self.entries)}\n  verdict = {verdict}")
        return "\n\n".join(blocks) + "\n"

    def write(self, path) -> None:
        with open(path, "w", encoding="ascii") as fh:
            fh.write(self.to_text())


def fit_decay_rate(t, y, window) -> RateFit:
    """Least-squares slope of ln y over t in [window[0], window[1]].

    Exact on pure exponentials (r^2 = 1).  Raises DiagnosticError if any
    sample in the window is nonpositive (the decay claim is then vacuous
    or violated) and ValueError for fewer than 3 samples.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    ta, tb = float(window[0]), float(window[1])
    if not ta < tb:
        raise ValueError("window must satisfy t_a < t_b")
    mask = (t >= ta) & (t <= tb)
    count = int(np.sum(mask))
    if count < 3:
        raise ValueError(f"need at least 3 samples in the window, found {count}")
    ys = y[mask]
    if np.any(ys <= 0.0):
        raise DiagnosticError("nonpositive samples in fit window")
    ts = t[mask]
    ln = np.log(ys)
    tm = ts - ts.mean()
    denom = float(np.sum(tm * tm))
    slope = float(np.sum(tm * (ln - ln.mean())) / denom)
    intercept = float(ln.mean() - slope * ts.mean())
    resid = ln - (intercept + slope * ts)
    ss_res = float(np.sum(resid * resid))
    ss_tot = float(np.sum((ln - ln.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return RateFit(window=(ta, tb), slope=slope, intercept=intercept,
                   r_squared=r2, n_samples=count)


def tail_window(t, stopped_early: bool = False):
    """Default fit window: the final half of the run.

    When a stop tolerance ended the run early the last two samples are
    excluded; asymptotic rates should not see the stopping transient.
    """
    t = np.asarray(t, dtype=float)
    if stopped_early and len(t) > 2:
        t = t[:-2]
    return (float(0.5 * (t[0] + t[-1])), float(t[-1]))


def shape_deviation(snapshot_or_kappa) -> float:
    """max over nodes and directions of |kappa_i - 1|."""
    kappa = getattr(snapshot_or_kappa, "kappa", snapshot_or_kappa)
    return float(np.max(np.abs(np.asarray(kappa, dtype=float) - 1.0)))


def check_bounds(record, config, tail_tol: float = 0.02,
                 f_tail_frac: float = 0.05, f_max_cap: float | None = None) -> BoundReport:
    """Evaluate the a-priori bound claims on a run record.

    Failures are report entries, never exceptions, and every check is
    monotone in its tolerance (loosening cannot flip pass into fail).
    The "tail" is the final quarter of the time span.  The tail maximum
    curvature stands in for a limsup statement and is reported as such.
    """
    n = getattr(config, "n", config)
    if record.n_rows == 0:
        raise ValueError("record is empty")
    report = BoundReport()
    t = record.t
    tail = t >= t[-1] - 0.25 * (t[-1] - t[0])

    f_max = float(np.max(record.F_max))
    cap_txt = "finite" if f_max_cap is None else f"< {f_max_cap:.17g}"
    ok = math.isfinite(f_max) and (f_max_cap is None or f_max < f_max_cap)
    report.add("speed_upper_bound", ok, f_max, cap_txt,
               math.inf if f_max_cap is None else f_max_cap - f_max)

    f_min = float(np.min(record.F_min))
    report.add("speed_positive_lower_bound", f_min > 0.0, f_min, "> 0", f_min)

    kap_abs = float(max(np.max(np.abs(record.kappa_min)), np.max(np.abs(record.kappa_max))))
    report.add("curvature_bounded", math.isfinite(kap_abs), kap_abs, "finite", math.inf)

    pd_max = float(np.max(record.phi_dot_max))
    report.add("potential_rate_bounded", math.isfinite(pd_max), pd_max, "finite", math.inf)

    tail_kappa = float(np.max(record.kappa_max[tail]))
    report.add("tail_curvature_max", tail_kappa <= 1.0 + tail_tol, tail_kappa,
               f"<= 1 + {tail_tol:.17g}", 1.0 + tail_tol - tail_kappa,
               note="tail-window maximum standing in for the limsup")

    eps_tail = f_tail_frac * n
    tail_f = float(np.min(record.F_min[tail]))
    report.add("tail_speed_min", tail_f >= n - eps_tail, tail_f,
               f">= {n - eps_tail:.17g}", tail_f - (n - eps_tail))
    return report


def _theta_derivative(field_values, grid) -> np.ndarray:
    grad, _ = sphere_derivatives(field_values, grid)
    return grad[:, 0]


def codazzi_residual(snapshot: GeometrySnapshot, ambient: WarpedAmbient) -> float:
    """Max-norm defect of the Codazzi relation on an axisymmetric snapshot.

    The only independent component compares the surface-covariant
    theta-derivative of the azimuthal second-fundamental-form entry with
    the ambient curvature term

        (phi phi'' + 1 - phi'^2) / v * r_theta * sin^2(theta).

    Induced-metric Christoffel symbols enter through the exact diagonal
    formulas; the removable sin^2(theta) factor of the azimuthal entries
    is pulled out analytically so the defect is O(dtheta^2) on smooth
    data and exactly ~0 on constant graphs.
    """
    grid = snapshot.grid
    if grid.mode != "axisymmetric":
        raise DiagnosticError("codazzi residual requires an axisymmetric snapshot")
    th = grid.theta
    st, ct = np.sin(th), np.cos(th)
    s2 = st * st

    g11 = snapshot.metric[:, 0, 0]
    h11 = snapshot.second_ff[:, 0, 0]
    ghat = snapshot.metric[:, 1, 1] / s2
    hhat = snapshot.second_ff[:, 1, 1] / s2

    dh = _theta_derivative(hhat, grid)
    dg = _theta_derivative(ghat, grid)
    lhs = s2 * (dh - hhat * dg / (2.0 * ghat) - dg * h11 / (2.0 * g11)) \
        + st * ct * (hhat - ghat * h11 / g11)

    pp, ppp = warp_derivatives(ambient, snapshot.rho)
    amb = snapshot.rho * ppp + 1.0 - pp * pp
    r_theta = snapshot.rho * snapshot.grad_phi[:, 0]  # r_i = phi * phi_pot_i
    rhs = amb / snapshot.v * r_theta * s2
    return float(np.max(np.abs(lhs - rhs)))


def support_identity_residual(snapshot: GeometrySnapshot) -> float:
    """Max-norm defect of grad u = h(grad Phi, .) on an axisymmetric snapshot.

    u = rho / v is the support function and grad Phi = phi grad r, so the
    single nontrivial component reads

        d(u)/dtheta = rho * r_theta * h_11 / g_11.
    """
    grid = snapshot.grid
    if grid.mode != "axisymmetric":
        raise DiagnosticError("support identity requires an axisymmetric snapshot")
    du = _theta_derivative(snapshot.u, grid)
    r_theta = snapshot.rho * snapshot.grad_phi[:, 0]
    rhs = snapshot.rho * r_theta * snapshot.second_ff[:, 0, 0] / snapshot.metric[:, 0, 0]
    return float(np.max(np.abs(du - rhs)))
