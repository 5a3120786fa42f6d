class SolverError(Exception):
    """Base class for every failure raised by the numerical engine."""


class DimensionMismatchError(SolverError):
    """Matrix and vector shapes do not agree."""


class SingularSystemError(SolverError):
    """The sparse factorization failed or produced an inaccurate solution."""


class NonFiniteResidualError(SolverError):
    """A kernel produced NaN/Inf values, usually a nonphysical state (J <= 0)."""

    def __init__(self, message, cell=None):
        super().__init__(message)
        self.cell = cell


class DivergenceError(SolverError):
    """Newton iterations stopped making progress."""

    def __init__(self, message, iterations=0, residuals=None):
        super().__init__(message)
        self.iterations = iterations
        self.residuals = list(residuals or [])


class MeshError(ValueError):
    """Invalid mesh construction input or facet query."""
