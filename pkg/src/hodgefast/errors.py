"""Exception hierarchy shared by every stage."""


class HodgeFastError(Exception):
    """Base class for all package errors."""


class ValidationError(HodgeFastError, ValueError):
    """Input data or configuration failed validation."""


class InvalidParameterError(ValidationError):
    pass


class InvalidBandError(InvalidParameterError):
    pass


class DegenerateChannelError(ValidationError):
    """A channel has zero variance, so its correlation is undefined."""

    def __init__(self, message, channel=None, epoch=None):
        super().__init__(message)
        self.channel = channel
        self.epoch = epoch


class DegenerateVarianceError(ValidationError):
    pass


class SolverError(HodgeFastError, RuntimeError):
    """Iterative solver did not reach the requested tolerance."""

    def __init__(self, message, residual=float("nan"), iterations=0, window=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
        self.window = window


class StageError(HodgeFastError):
    """A pipeline stage failed; wraps the original cause."""

    def __init__(self, stage, entity, cause):
        self.stage = stage
        self.entity = entity
        self.cause = cause
        super().__init__(f"stage '{stage}' failed on {entity}: {cause}")

    def to_dict(self):
        return {
            "error": type(self.cause).__name__,
            "stage": self.stage,
            "entity": self.entity,
            "message": str(self.cause),
        }
