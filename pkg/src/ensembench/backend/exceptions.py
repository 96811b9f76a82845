"""
Exception classes for ensembench operations.

Provides custom exception types for the error conditions raised by the
training stack, the metrics, persistence and the experiment runner.
"""


class EnsembenchError(Exception):
    """Base exception class for ensembench errors."""
    pass


class DimensionError(EnsembenchError, ValueError):
    """Raised when array shapes do not agree."""
    pass


class LabelIndexError(EnsembenchError, IndexError):
    """Raised when a class label or epoch index is out of range."""
    pass


class ValidationError(EnsembenchError, ValueError):
    """Raised when numeric inputs violate a precondition."""
    pass


class NonFiniteError(EnsembenchError, ArithmeticError):
    """Raised when a loss or gradient becomes NaN or infinite."""
    pass


class ConfigurationError(EnsembenchError):
    """Raised when configuration is invalid or missing."""
    pass


class SerializationError(EnsembenchError):
    """Raised when a stored predictor or dataset cannot be read back."""
    pass


class ExperimentError(EnsembenchError):
    """Raised when an experiment run or aggregation cannot proceed."""
    pass
