"""
Central finite-difference gradient checking.
"""

from typing import Callable

import numpy as np

from ensembench.nn.tensor import Tensor


def numerical_gradient(func: Callable[[], float], array: Tensor, h: float = 1e-5) -> Tensor:
    """
    Central-difference gradient of a scalar function with respect to an array.

    The array is perturbed in place one coordinate at a time and restored.

    Args:
        func: Zero-argument function reading the array
        array: Array the function depends on
        h: Step size

    Returns:
        Array of partial derivatives with the shape of array
    """
    grad = np.zeros_like(array)
    flat = array.reshape(-1)
    out = grad.reshape(-1)
    for j in range(flat.size):
        original = flat[j]
        flat[j] = original + h
        f_plus = func()
        flat[j] = original - h
        f_minus = func()
        flat[j] = original
        out[j] = (f_plus - f_minus) / (2.0 * h)
    return grad


def relative_error(analytic: Tensor, numeric: Tensor, floor: float = 1e-8) -> float:
    """Max absolute difference scaled by the larger of the two gradients' max magnitude."""
    scale = max(float(np.max(np.abs(analytic), initial=0.0)),
                float(np.max(np.abs(numeric), initial=0.0)), floor)
    return float(np.max(np.abs(analytic - numeric), initial=0.0)) / scale
