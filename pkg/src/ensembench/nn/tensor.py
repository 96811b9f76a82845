"""
Dense float64 tensor helpers.

A Tensor is a row-major numpy array of dtype float64. These helpers convert
inputs, check shapes and finiteness, and draw seeded initialisations.
"""

import math
from typing import Sequence, Tuple

import numpy as np
import numpy.typing as npt

from ensembench.backend.exceptions import DimensionError, NonFiniteError

Tensor = npt.NDArray[np.float64]


def as_tensor(data: npt.ArrayLike) -> Tensor:
    """Convert array-like data into a contiguous float64 tensor."""
    return np.ascontiguousarray(data, dtype=np.float64)


def require_shape(name: str, array: np.ndarray, shape: Sequence[object]) -> None:
    """
    Check an array against an expected shape.

    Args:
        name: Name used in the error message
        array: Array to check
        shape: Expected extents; None matches any extent

    Raises:
        DimensionError: If rank or any fixed extent differs
    """
    if array.ndim != len(shape) or any(
        want is not None and have != want for have, want in zip(array.shape, shape)
    ):
        raise DimensionError(f"{name}: expected shape {tuple(shape)}, got {array.shape}")


def check_finite(name: str, *arrays: np.ndarray) -> None:
    """
    Abort on NaN or infinite values.

    Raises:
        NonFiniteError: If any array holds a non-finite value
    """
    for array in arrays:
        if not np.all(np.isfinite(array)):
            bad = int(np.count_nonzero(~np.isfinite(array)))
            raise NonFiniteError(f"{name}: {bad} non-finite value(s) in array of shape {array.shape}")


def he_uniform(rng: np.random.Generator, fan_in: int, shape: Tuple[int, ...]) -> Tensor:
    """He-uniform initialisation, U(-sqrt(6/fan_in), sqrt(6/fan_in))."""
    limit = math.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape).astype(np.float64)
