"""Exception types shared across the toolkit."""


class RisktrajError(Exception):
    """Base class for all toolkit errors; the CLI maps these to exit codes."""


class ParameterError(RisktrajError, ValueError):
    """An argument violates a documented precondition."""


class ConfigurationError(RisktrajError, ValueError):
    """A scenario or integrator configuration is inconsistent."""


class IntegrationDivergedError(RisktrajError, RuntimeError):
    """A non-finite state or derivative appeared during integration."""

    def __init__(self, message: str, time: float):
        super().__init__(message)
        self.time = time


class InsufficientRecoveryDataError(RisktrajError, RuntimeError):
    """The recovery segment is too short for a damping fit."""


class NoDampingError(RisktrajError, RuntimeError):
    """The fitted decay rate is non-positive (risk is not decaying)."""


class TableParseError(RisktrajError, ValueError):
    """A trajectory table or report document failed to parse."""

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no
