from fem.exceptions import SolverError


class ConstitutiveDomainError(ValueError):
    """A barrier was violated: porosity or Jacobian determinant not positive."""


class BoundaryConditionError(ValueError):
    """Boundary specification references unknown tags or constrains a DoF twice."""


class ConfigurationError(ValueError):
    """Invalid run configuration; ``errors`` maps offending keys to messages."""

    def __init__(self, message, errors=None):
        super().__init__(message)
        self.errors = dict(errors or {})


class StationarityError(RuntimeError):
    """The stationarity monitor was queried before its normalization was captured."""


class MaxStepsExceededError(SolverError):
    """Time marching hit the configured step limit before becoming stationary."""

    def __init__(self, message, steps=0):
        super().__init__(message)
        self.steps = steps


class StepFailedError(SolverError):
    """A time step failed; carries the time and ramp level at which it happened."""

    def __init__(self, message, time=None, ramp=None, stage=None):
        super().__init__(message)
        self.time = time
        self.ramp = ramp
        self.stage = stage


class RoundTripError(SolverError):
    """A round-trip stage failed; ``stage`` is 'refconf', 'warp' or 'forward'."""

    def __init__(self, message, stage=None):
        super().__init__(message)
        self.stage = stage
