"""Exception hierarchy shared by the library and the command line."""


class SpinHallError(Exception):
    """Base class for all package errors."""


class ConfigError(SpinHallError, ValueError):
    """Invalid configuration or input parameters (CLI exit code 2)."""


class IntegrationError(SpinHallError, RuntimeError):
    """An ODE integration could not be completed (CLI exit code 3).

    ``last_time`` holds the last time reached with a valid state.
    """

    def __init__(self, message: str, last_time: float | None = None):
        if last_time is not None:
            message = f"{message} (last valid t = {last_time:.17g})"
        super().__init__(message)
        self.last_time = last_time


class PropagationError(IntegrationError):
    """The Hessian propagator became singular or ill-conditioned."""


class DegenerateAmplitudeError(SpinHallError, ValueError):
    """The polarisation amplitude is numerically zero."""


class HessianDegeneracyError(SpinHallError, ValueError):
    """det(A / 2 pi i) is not real positive."""


class VerificationFailure(SpinHallError):
    """A verification check failed (CLI exit code 4)."""
