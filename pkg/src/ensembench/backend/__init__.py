"""
Backend module for ensembench.

Contains the exception hierarchy, experiment configuration management,
binary persistence and the experiment runner. Submodules are imported
directly (ensembench.backend.runner, ...) so that low-level packages can use
the exceptions without pulling in the runner.
"""

from .exceptions import (
    EnsembenchError,
    DimensionError,
    LabelIndexError,
    ValidationError,
    NonFiniteError,
    ConfigurationError,
    SerializationError,
    ExperimentError,
)

__all__ = [
    'EnsembenchError',
    'DimensionError',
    'LabelIndexError',
    'ValidationError',
    'NonFiniteError',
    'ConfigurationError',
    'SerializationError',
    'ExperimentError',
]
