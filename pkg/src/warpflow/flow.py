"""Time integration of the inverse-speed expansion flow.

The graph evolves by drho/dt = phi' v / F at every node (the chain rule
applied to dr/dt = v/F), which is strictly positive on the admissible
cone, so the surface moves outward monotonically.  Stepping is classical
four-stage Runge-Kutta with the geometry rebuilt at every stage; the
step size obeys a quadratic CFL bound read off the linearized diffusion
tensor D = F' sigma~ / (rho^2 F^2), plus a fixed accuracy cap dt_max so
the step cannot grow with the expanding surface and wash out temporal
convergence studies.

Cone exits are never projected away: they signal that the discretization
has genuinely broken down, so the run aborts carrying the offending
state.

A run owns its state exclusively and touches no module-level mutable
state, so any number of runs may execute concurrently; within a step,
geometry assembly is node-local after the derivative stencils.

Closed-form anchor used throughout the tests: a geodesic sphere has
F = n phi'/rho and v = 1, hence drho/dt = rho/n exactly and
rho(t) = rho0 exp(t/n) for every mass value, which also saturates the
rescaled-extent monotonicity (exp(-t/n) rho_max non-increasing,
exp(-t/n) rho_min non-decreasing).
"""

import math
import os
from dataclasses import dataclass, field, fields

import numpy as np

from .ambient import WarpedAmbient, warp_derivatives
from .errors import ConeViolationError, ConfigurationError, DomainError, FlowAbortError
from .surface import (
    GeometrySnapshot,
    GraphState,
    SphericalGrid,
    build_grid,
    geometry_from_state,
    write_snapshot,
)
from .symfunc import QuotientSpeed

__all__ = [
    "FlowConfig",
    "FlowRecord",
    "RunResult",
    "RECORD_COLUMNS",
    "build_problem",
    "initial_state",
    "evolve_rate",
    "stable_timestep",
    "step",
    "run",
]

PRESETS = ("constant", "legendre-bump", "cos-bump")

# Fixed step used in symmetric mode, where no spatial operator exists.
SYMMETRIC_BASE_DT = 0.01

RECORD_COLUMNS = (
    "t", "dt", "rho_min", "rho_max", "rs_min", "rs_max",
    "F_min", "F_max", "grad_phi_max", "phi_dot_max",
    "kappa_min", "kappa_max", "dev_max",
)


@dataclass
class FlowConfig:
    """Fully resolved run parameters.

    ``dt`` requests a fixed step (still capped by stability), ``dt_max``
    caps the CFL step for accuracy, ``cadence`` is in steps so output is
    deterministic under CFL changes, and ``stop_dev`` stops the run once
    max|kappa - 1| falls below it.
    """

    n: int
    m: float
    k: int
    mode: str
    rho0: float
    t_end: float
    resolution: int | None = None
    preset: str = "constant"
    eps: float = 0.0
    dt: float | None = None
    dt_max: float = 0.005
    cfl_safety: float = 0.2
    cadence: int = 10
    stop_dev: float | None = None

    def validate(self) -> None:
        """Raise ConfigurationError listing every violation at once."""
        problems = []
        if not isinstance(self.n, int) or self.n < 1:
            problems.append("dimension n must be a positive integer")
        if self.m < 0:
            problems.append("mass must be nonnegative")
        if not isinstance(self.k, int) or self.k < 1:
            problems.append("speed order k must be a positive integer")
        elif isinstance(self.n, int) and self.n >= 1 and self.k > self.n:
            problems.append("k exceeds n")
        if self.mode not in ("symmetric", "axisymmetric", "latlong"):
            problems.append(f"unknown grid mode {self.mode!r}")
        elif self.mode != "symmetric":
            if self.n != 2:
                problems.append(f"mode {self.mode!r} requires n = 2")
            if self.resolution is None or self.resolution < 16:
                problems.append("resolution must be >= 16 for angular modes")
        if self.preset not in PRESETS:
            problems.append(f"unknown preset {self.preset!r}")
        if self.t_end < 0:
            problems.append("t_end must be nonnegative")
        if not 0.0 < self.cfl_safety <= 1.0:
            problems.append("cfl_safety must lie in (0, 1]")
        if self.cadence < 1:
            problems.append("cadence must be a positive integer")
        if self.dt is not None and self.dt <= 0:
            problems.append("dt must be positive when given")
        if self.dt_max <= 0:
            problems.append("dt_max must be positive")
        if self.stop_dev is not None and self.stop_dev <= 0:
            problems.append("stop_dev must be positive when given")
        if self.rho0 <= 0:
            problems.append("rho0 must be positive")
        if problems:
            raise ConfigurationError("; ".join(problems))

    def copy_with(self, **changes) -> "FlowConfig":
        kwargs = {f.name: getattr(self, f.name) for f in fields(self)}
        kwargs.update(changes)
        return FlowConfig(**kwargs)


def build_problem(config: FlowConfig):
    """(grid, ambient, speed) triple for a validated config."""
    grid = build_grid(config.mode, config.n, config.resolution)
    ambient = WarpedAmbient(n=config.n, m=config.m)
    speed = QuotientSpeed(n=config.n, k=config.k)
    return grid, ambient, speed


def initial_state(config: FlowConfig, grid: SphericalGrid,
                  ambient: WarpedAmbient) -> GraphState:
    """Evaluate the initial-data preset and reject degenerate fields.

    Fields hugging the inner boundary (min rho - s0 < 1e-6 s0) are
    rejected here: phi' -> 0 makes the rho formulation stiff, and the
    flow only ever moves outward anyway.
    """
    th = grid.theta
    if config.preset == "constant":
        rho = np.full(grid.node_count, float(config.rho0))
    elif config.preset == "legendre-bump":
        p2 = 0.5 * (3.0 * np.cos(th) ** 2 - 1.0)
        rho = config.rho0 * (1.0 + config.eps * p2)
    else:  # cos-bump
        rho = config.rho0 + config.eps * np.cos(2.0 * th)
    s0 = ambient.s0
    if s0 > 0.0:
        if np.min(rho) - s0 < 1e-6 * s0:
            raise ConfigurationError(
                f"initial data too close to the inner boundary: min rho = "
                f"{np.min(rho)!r}, s0 = {s0!r}"
            )
    elif np.min(rho) <= 0.0:
        raise ConfigurationError("initial data must have positive areal radius")
    return GraphState(t=0.0, rho=rho)


def evolve_rate(snapshot: GeometrySnapshot) -> np.ndarray:
    """drho/dt = phi' v / F per node; strictly positive on a valid snapshot."""
    if not snapshot.valid:
        raise ConeViolationError(
            f"snapshot invalid at node {snapshot.bad_node}",
            index=snapshot.bad_node,
            kappa=snapshot.bad_kappa,
        )
    return snapshot.warp_prime * snapshot.v / snapshot.F


def stable_timestep(snapshot: GeometrySnapshot, grid: SphericalGrid,
                    cfl_safety: float, dt_cap: float | None = None) -> float:
    """Quadratic CFL bound for explicit stepping.

    dt = cfl_safety * spacing^2 / (2 n max_nodes lambda) with lambda the
    largest eigenvalue of the diffusion tensor, bounded per node by
    max_i F^ii / (rho^2 F^2) (exact at zero-gradient umbilic nodes; an
    upper bound elsewhere, since the gradient deficit only shrinks
    sigma~).  Symmetric mode has no spatial operator and uses the fixed
    documented step cfl_safety * 0.01, still honoring dt_cap.
    """
    if grid.mode == "symmetric":
        dt = cfl_safety * SYMMETRIC_BASE_DT
        return min(dt, dt_cap) if dt_cap is not None else dt
    lam = np.max(
        np.max(snapshot.F_grad, axis=1) / (snapshot.rho**2 * snapshot.F**2)
    )
    spacing = grid.dtheta
    if grid.mode == "latlong":
        spacing = min(spacing, math.sin(0.5 * grid.dtheta) * grid.dazimuth)
    dt = cfl_safety * spacing**2 / (2.0 * grid.n * lam)
    return min(dt, dt_cap) if dt_cap is not None else dt


def _require_valid(snapshot: GeometrySnapshot, state: GraphState) -> None:
    if not snapshot.valid:
        raise FlowAbortError(
            f"admissible cone violated at t={snapshot.t!r}, node {snapshot.bad_node}, "
            f"kappa={snapshot.bad_kappa!r}",
            t=snapshot.t, node=snapshot.bad_node,
            kappa=snapshot.bad_kappa, state=state,
        )


def _symmetric_warp_prime(rho0: float, ambient: WarpedAmbient) -> float:
    if rho0 <= ambient.s0:
        raise DomainError(f"areal radius fell to the inner boundary: {rho0!r}")
    if ambient.flat:
        return 1.0
    if ambient.m == 0.0:
        return math.hypot(1.0, rho0)
    return math.sqrt(1.0 - ambient.m * rho0 ** (1.0 - ambient.n) + rho0 * rho0)


def _symmetric_rate(rho0: float, ambient: WarpedAmbient, n: int) -> float:
    """Scalar stage rate for the one-node mode.

    The node is umbilic with kappa = phi'/rho > 0 (inside every cone as
    long as rho > s0), and homogeneity gives F = n kappa exactly, so the
    full geometry assembly reduces to one warp evaluation.
    """
    pp = _symmetric_warp_prime(rho0, ambient)
    return pp / (n * (pp / rho0))


def step(state: GraphState, dt: float, grid: SphericalGrid,
         ambient: WarpedAmbient, speed: QuotientSpeed,
         first_snapshot: GeometrySnapshot | None = None) -> GraphState:
    """One classical RK4 step of size dt; geometry rebuilt at each stage.

    Raises FlowAbortError if any stage leaves the admissible cone.
    ``first_snapshot`` lets the caller reuse the geometry it already
    built at the current state.
    """
    if grid.mode == "symmetric":
        r0 = float(state.rho[0])
        n = grid.n
        k1 = _symmetric_rate(r0, ambient, n)
        k2 = _symmetric_rate(r0 + 0.5 * dt * k1, ambient, n)
        k3 = _symmetric_rate(r0 + 0.5 * dt * k2, ambient, n)
        k4 = _symmetric_rate(r0 + dt * k3, ambient, n)
        r1 = r0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        return GraphState(t=state.t + dt, rho=np.array([r1]))

    s1 = first_snapshot
    if s1 is None:
        s1 = geometry_from_state(state, grid, ambient, speed)
    _require_valid(s1, state)
    k1 = evolve_rate(s1)

    st2 = GraphState(t=state.t + 0.5 * dt, rho=state.rho + 0.5 * dt * k1)
    s2 = geometry_from_state(st2, grid, ambient, speed)
    _require_valid(s2, st2)
    k2 = evolve_rate(s2)

    st3 = GraphState(t=state.t + 0.5 * dt, rho=state.rho + 0.5 * dt * k2)
    s3 = geometry_from_state(st3, grid, ambient, speed)
    _require_valid(s3, st3)
    k3 = evolve_rate(s3)

    st4 = GraphState(t=state.t + dt, rho=state.rho + dt * k3)
    s4 = geometry_from_state(st4, grid, ambient, speed)
    _require_valid(s4, st4)
    k4 = evolve_rate(s4)

    rho_new = state.rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return GraphState(t=state.t + dt, rho=rho_new)


@dataclass
class FlowRecord:
    """Column-oriented time series of run diagnostics."""

    data: np.ndarray  # (rows, len(RECORD_COLUMNS))

    def __post_init__(self):
        self.data = np.atleast_2d(np.asarray(self.data, dtype=float))
        if self.data.size and self.data.shape[1] != len(RECORD_COLUMNS):
            raise ValueError("record rows must carry the full column set")

    @property
    def n_rows(self) -> int:
        return self.data.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.data[:, RECORD_COLUMNS.index(name)]

    def __getattr__(self, name):
        if name in RECORD_COLUMNS:
            return self.data[:, RECORD_COLUMNS.index(name)]
        raise AttributeError(name)

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="ascii") as fh:
            fh.write(",".join(RECORD_COLUMNS) + "\n")
            for row in self.data:
                fh.write(",".join(f"{x:.17g}" for x in row) + "\n")

    @classmethod
    def from_csv(cls, path) -> "FlowRecord":
        with open(path, "r", encoding="ascii") as fh:
            header = fh.readline().strip()
            if header.split(",") != list(RECORD_COLUMNS):
                raise ValueError(f"unexpected record header in {path}")
            rows = []
            for line_no, line in enumerate(fh, start=2):
                line = line.strip()
                if not line:
                    continue
                parts = line.split(",")
                if len(parts) != len(RECORD_COLUMNS):
                    raise ValueError(f"malformed record row at line {line_no} in {path}")
                rows.append([float(x) for x in parts])
        if not rows:
            raise ValueError(f"record {path} has no data rows")
        return cls(np.array(rows))


@dataclass
class RunResult:
    """Run output plus the per-step invariant trackers.

    ``rs_max_increase`` is the largest single-step increase of
    exp(-t/n) rho_max (analytically non-increasing), ``rs_min_decrease``
    the largest single-step decrease of exp(-t/n) rho_min, and
    ``min_step_increase`` the smallest nodewise rho increment (the flow
    is strictly expanding).
    """

    record: FlowRecord
    final_state: GraphState
    final_snapshot: GeometrySnapshot
    step_count: int
    rs_max_increase: float
    rs_min_decrease: float
    min_step_increase: float
    stopped_early: bool
    snapshots: list = field(default_factory=list)


def _record_row(snapshot: GeometrySnapshot, dt_used: float, n: int) -> list:
    t = snapshot.t
    rs = math.exp(-t / n)
    rho_min = float(np.min(snapshot.rho))
    rho_max = float(np.max(snapshot.rho))
    return [
        t, dt_used, rho_min, rho_max, rs * rho_min, rs * rho_max,
        float(np.min(snapshot.F)), float(np.max(snapshot.F)),
        float(np.max(snapshot.grad_phi_norm)), float(np.max(np.abs(snapshot.phi_dot))),
        float(np.min(snapshot.kappa)), float(np.max(snapshot.kappa)),
        float(np.max(np.abs(snapshot.kappa - 1.0))),
    ]


def run(config: FlowConfig, out_dir=None, keep_snapshots: bool = False) -> RunResult:
    """Integrate to t_end (or the stop tolerance); deterministic per config.

    Records a row at step 0, every ``cadence`` steps, and at the final
    step.  With ``out_dir`` set, snapshot files are written at the same
    cadence.  Raises FlowAbortError (carrying the state) if the initial
    data or any stage leaves the admissible cone.
    """
    config.validate()
    grid, ambient, speed = build_problem(config)
    state = initial_state(config, grid, ambient)
    snap = geometry_from_state(state, grid, ambient, speed)
    _require_valid(snap, state)

    emitted = []

    def emit(step_idx, snapshot):
        if keep_snapshots:
            emitted.append((step_idx, snapshot))
        if out_dir is not None:
            write_snapshot(snapshot, os.path.join(out_dir, f"snapshot_{step_idx:06d}.csv"))

    if grid.mode == "symmetric":
        return _run_symmetric(config, grid, ambient, speed, state, snap, emit, emitted)

    n = config.n
    t_end = config.t_end
    rows = [_record_row(snap, 0.0, n)]
    emit(0, snap)

    rs_max_increase = 0.0
    rs_min_decrease = 0.0
    min_step_increase = math.inf
    step_idx = 0
    stopped_early = False
    eps_t = 1e-12 * max(t_end, 1.0)

    while state.t < t_end - eps_t:
        dt = stable_timestep(snap, grid, config.cfl_safety, dt_cap=config.dt)
        dt = min(dt, config.dt_max, t_end - state.t)
        new_state = step(state, dt, grid, ambient, speed, first_snapshot=snap)
        new_snap = geometry_from_state(new_state, grid, ambient, speed)
        _require_valid(new_snap, new_state)

        rs_old = math.exp(-state.t / n)
        rs_new = math.exp(-new_state.t / n)
        rs_max_increase = max(
            rs_max_increase,
            rs_new * float(np.max(new_state.rho)) - rs_old * float(np.max(state.rho)),
        )
        rs_min_decrease = max(
            rs_min_decrease,
            rs_old * float(np.min(state.rho)) - rs_new * float(np.min(new_state.rho)),
        )
        min_step_increase = min(
            min_step_increase, float(np.min(new_state.rho - state.rho))
        )

        step_idx += 1
        state, snap = new_state, new_snap

        dev = float(np.max(np.abs(snap.kappa - 1.0)))
        stopped_early = config.stop_dev is not None and dev <= config.stop_dev
        done = stopped_early or state.t >= t_end - eps_t
        if step_idx % config.cadence == 0 or done:
            rows.append(_record_row(snap, dt, n))
            emit(step_idx, snap)
        if done:
            break

    return RunResult(
        record=FlowRecord(np.array(rows)),
        final_state=state,
        final_snapshot=snap,
        step_count=step_idx,
        rs_max_increase=rs_max_increase,
        rs_min_decrease=rs_min_decrease,
        min_step_increase=min_step_increase if step_idx else 0.0,
        stopped_early=stopped_early,
        snapshots=emitted if keep_snapshots else [],
    )


def _run_symmetric(config, grid, ambient, speed, state, snap, emit, emitted):
    """Scalar loop for the one-node mode.

    Same RK4 arithmetic as ``step``; snapshots are assembled only at
    record steps, since the spatially constant state needs no geometry
    to advance or to track the rescaled-extent invariants.
    """
    n = config.n
    t_end = config.t_end
    rows = [_record_row(snap, 0.0, n)]
    emit(0, snap)

    base_dt = stable_timestep(snap, grid, config.cfl_safety, dt_cap=config.dt)
    base_dt = min(base_dt, config.dt_max)
    r = float(state.rho[0])
    t = state.t
    rs_max_increase = 0.0
    rs_min_decrease = 0.0
    min_step_increase = math.inf
    step_idx = 0
    stopped_early = False
    eps_t = 1e-12 * max(t_end, 1.0)

    while t < t_end - eps_t:
        dt = min(base_dt, t_end - t)
        k1 = _symmetric_rate(r, ambient, n)
        k2 = _symmetric_rate(r + 0.5 * dt * k1, ambient, n)
        k3 = _symmetric_rate(r + 0.5 * dt * k2, ambient, n)
        k4 = _symmetric_rate(r + dt * k3, ambient, n)
        r_new = r + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t_new = t + dt

        rs_old, rs_new = math.exp(-t / n), math.exp(-t_new / n)
        rs_max_increase = max(rs_max_increase, rs_new * r_new - rs_old * r)
        rs_min_decrease = max(rs_min_decrease, rs_old * r - rs_new * r_new)
        min_step_increase = min(min_step_increase, r_new - r)

        step_idx += 1
        r, t = r_new, t_new
        if config.stop_dev is not None:
            kappa = _symmetric_warp_prime(r, ambient) / r
            stopped_early = abs(kappa - 1.0) <= config.stop_dev
        done = stopped_early or t >= t_end - eps_t
        if step_idx % config.cadence == 0 or done:
            state = GraphState(t=t, rho=np.array([r]))
            snap = geometry_from_state(state, grid, ambient, speed)
            rows.append(_record_row(snap, dt, n))
            emit(step_idx, snap)
        if done:
            break

    if state.t != t:
        state = GraphState(t=t, rho=np.array([r]))
        snap = geometry_from_state(state, grid, ambient, speed)
    return RunResult(
        record=FlowRecord(np.array(rows)),
        final_state=state,
        final_snapshot=snap,
        step_count=step_idx,
        rs_max_increase=rs_max_increase,
        rs_min_decrease=rs_min_decrease,
        min_step_increase=min_step_increase if step_idx else 0.0,
        stopped_early=stopped_early,
        snapshots=emitted,
    )
