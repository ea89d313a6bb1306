"""Exception types raised by harmonica."""


class HarmonicaError(Exception):
    """Base class for all harmonica errors."""


class DimensionError(HarmonicaError, ValueError):
    """Array shapes do not match the game's action counts."""


class BoundaryError(HarmonicaError, ValueError):
    """A point lies on (or outside) the boundary where an interior point is required."""


class SolverError(HarmonicaError, RuntimeError):
    """An iterative solver failed to reach the requested tolerance."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class IntegrationError(HarmonicaError, RuntimeError):
    """The ODE integrator failed (step-size underflow, non-finite state, ...)."""
