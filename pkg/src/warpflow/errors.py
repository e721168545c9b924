"""Exception types shared across the package."""


class WarpflowError(Exception):
    """Base class for all warpflow-specific errors."""


class ConfigurationError(WarpflowError):
    """Invalid configuration value or unsupported grid/mode combination."""


class DomainError(WarpflowError):
    """Areal radius at or inside the inner boundary of the ambient space."""


class GeometryError(WarpflowError):
    """Discretization produced a degenerate (non-SPD) induced metric."""


class ConeViolationError(WarpflowError):
    """Principal curvatures left the admissible cone.

    Carries the offending data so callers can report exactly where the
    discretization broke down.
    """

    def __init__(self, message, *, sigmas=None, index=None, kappa=None):
        super().__init__(message)
        self.sigmas = sigmas
        self.index = index
        self.kappa = kappa


class FlowAbortError(WarpflowError):
    """Time stepping aborted.  Carries the failing state for post-mortem."""

    def __init__(self, message, *, t, node=None, kappa=None, state=None):
        super().__init__(message)
        self.t = t
        self.node = node
        self.kappa = kappa
        self.state = state


class DiagnosticError(WarpflowError):
    """A diagnostic quantity could not be evaluated on the given input."""
