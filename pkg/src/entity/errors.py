import numpy as np

from src.conf import messages

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CHART_EXIT = 3
EXIT_VALIDATION = 4
EXIT_NUMERICAL = 5

NUMERICAL_ERRORS = (ArithmeticError, ValueError, np.linalg.LinAlgError)


class TangentBodyError(Exception):
    """Base class; ``exit_code`` is what the CLI returns when this escapes a command."""

    exit_code = EXIT_NUMERICAL
    default_message = "Internal numerical failure"

    def __init__(self, message: str | None = None, **details):
        self.message = message or self.default_message
        self.details = details
        super().__init__(self.message)

    def __str__(self):
        if not self.details:
            return self.message
        extra = ", ".join(f"{key}={value}" for key, value in self.details.items())
        return f"{self.message} ({extra})"


class ConfigError(TangentBodyError):
    exit_code = EXIT_CONFIG
    default_message = "Invalid configuration"

    def __init__(self, message: str | None = None, field: str | None = None, **details):
        self.field = field
        if field is not None:
            details = {"field": field, **details}
        super().__init__(message, **details)


class UnknownScenario(ConfigError):
    default_message = messages.UNKNOWN_SCENARIO


class EmptyBody(ConfigError):
    default_message = messages.EMPTY_BODY


class CenterOffset(ConfigError):
    default_message = messages.CENTER_OFFSET

    def __init__(self, offset, message: str | None = None, **details):
        self.offset = offset
        super().__init__(message, offset=list(offset), **details)


class AnisotropicBody(ConfigError):
    default_message = messages.ANISOTROPIC_BODY


class ShapeMismatch(ConfigError):
    default_message = messages.SHAPE_MISMATCH


class DimensionMismatch(ConfigError):
    default_message = messages.DIMENSION_MISMATCH


class SingularFrame(TangentBodyError):
    default_message = messages.SINGULAR_FRAME


class OutOfChart(TangentBodyError):
    default_message = messages.OUT_OF_CHART


class DerivativeUnavailable(TangentBodyError):
    default_message = messages.DERIVATIVE_UNAVAILABLE


class OracleUnavailable(TangentBodyError):
    default_message = messages.ORACLE_UNAVAILABLE


class NonConvergence(TangentBodyError):
    default_message = messages.NON_CONVERGENCE


class ChartExit(TangentBodyError):
    exit_code = EXIT_CHART_EXIT
    default_message = messages.CHART_EXIT


class TooFewSamples(TangentBodyError):
    default_message = messages.TOO_FEW_SAMPLES


class ValidationFailure(TangentBodyError):
    exit_code = EXIT_VALIDATION
    default_message = messages.VALIDATION_FAILED
