"""
Custom exceptions for the application.
"""


class TmulaError(Exception):
    """Base class for every error raised by the sampling library."""

    pass


class InvalidParameterError(TmulaError, ValueError):
    """Exception raised when a constructor or operation receives invalid parameters."""

    pass


class ConfigError(TmulaError):
    """Exception raised when a JSON document fails schema validation."""

    def __init__(self, message, errors=None):
        super().__init__(message)
        self.errors = errors or {}


class MapSchemaError(ConfigError):
    """Exception raised for malformed map files, unknown kinds or version mismatches."""

    pass


class NumericsError(TmulaError):
    """Base class for numerical failures."""

    pass


class InversionError(NumericsError):
    """Exception raised when a triangular component cannot be inverted."""

    def __init__(self, message, component=None):
        super().__init__(message)
        self.component = component


class TrainingNumericsError(NumericsError):
    """Exception raised when the training objective becomes nonfinite."""

    def __init__(self, message, sample_index=None):
        super().__init__(message)
        self.sample_index = sample_index


class StepError(NumericsError):
    """Exception raised when a single kernel step produces a nonfinite drift or a failed solve."""

    pass


class ImplicitSolveError(StepError):
    """Exception raised when the split-step Newton solve does not converge."""

    pass


class ChainTooShortError(InvalidParameterError):
    """Exception raised when a diagnostic needs more retained states than the chain has."""

    pass
