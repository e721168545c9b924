"""warpflow: inverse curvature flow of star-shaped graphs in warped products.

Simulates the expansion flow with velocity nu / F, where F is the
normalized hessian-quotient speed sigma_k / sigma_{k-1} evaluated at the
principal curvatures, over an asymptotically hyperbolic warped-product
ambient space, and verifies the flow's a-priori bounds and exponential
rounding (|kappa_i - 1| decaying like exp(-2t/n)) at desk scale.
"""

from .ambient import (
    CurvatureCoeffs,
    WarpedAmbient,
    curvature_coeffs,
    horizon_radius,
    radial_coordinate,
    warp_derivatives,
)
from .diagnostics import (
    BoundReport,
    ClaimResult,
    RateFit,
    check_bounds,
    codazzi_residual,
    fit_decay_rate,
    shape_deviation,
    support_identity_residual,
    tail_window,
)
from .errors import (
    ConeViolationError,
    ConfigurationError,
    DiagnosticError,
    DomainError,
    FlowAbortError,
    GeometryError,
    WarpflowError,
)
from .flow import (
    FlowConfig,
    FlowRecord,
    RunResult,
    build_problem,
    evolve_rate,
    initial_state,
    run,
    stable_timestep,
    step,
)
from .surface import (
    GeometrySnapshot,
    GraphState,
    SphericalGrid,
    build_grid,
    geometry_from_state,
    principal_curvatures,
    sphere_area,
    sphere_derivatives,
    write_snapshot,
)
from .symfunc import (
    QuotientSpeed,
    elementary_symmetric,
    elementary_symmetric_table,
    gamma_k_contains,
    quotient_speed,
    quotient_speed_gradient,
    sample_gamma_k,
    sigma_gradient,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # ambient
    "WarpedAmbient", "CurvatureCoeffs", "horizon_radius", "warp_derivatives",
    "radial_coordinate", "curvature_coeffs",
    # symfunc
    "QuotientSpeed", "elementary_symmetric", "elementary_symmetric_table",
    "sigma_gradient", "gamma_k_contains", "quotient_speed",
    "quotient_speed_gradient", "sample_gamma_k",
    # surface
    "SphericalGrid", "GraphState", "GeometrySnapshot", "build_grid",
    "sphere_area", "sphere_derivatives", "geometry_from_state",
    "principal_curvatures", "write_snapshot",
    # flow
    "FlowConfig", "FlowRecord", "RunResult", "build_problem", "initial_state",
    "evolve_rate", "stable_timestep", "step", "run",
    # diagnostics
    "RateFit", "ClaimResult", "BoundReport", "fit_decay_rate", "tail_window",
    "shape_deviation", "check_bounds", "codazzi_residual",
    "support_identity_residual",
    # errors
    "WarpflowError", "ConfigurationError", "DomainError", "GeometryError",
    "ConeViolationError", "FlowAbortError", "DiagnosticError",
]
