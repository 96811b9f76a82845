"""
Shape rasterisation for the procedural image datasets.

Each shape is defined by an inside-test in a canonical frame where it spans
roughly [-1, 1] on both axes. A pose maps pixel centres into that frame:
translate by the centre, rotate by -rotation, divide by the scale. Coordinates
are fractions of the canvas side; x runs along columns, y down the rows.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, Tuple

import numpy as np

from ensembench.backend.exceptions import ValidationError
from ensembench.nn.tensor import Tensor

Mask = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ShapePose:
    """Placement of a shape on the canvas."""

    center: Tuple[float, float] = (0.5, 0.5)
    scale: float = 0.35
    rotation: float = 0.0
    intensity: float = 1.0


def _disk(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return x * x + y * y <= 0.75 ** 2


def _square(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return (np.abs(x) <= 0.9) & (np.abs(y) <= 0.9)


def _triangle(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    # apex at the top (y = -0.9), base along y = 0.6
    return (y <= 0.6) & (y >= -0.9) & (np.abs(x) <= 0.85 * (y + 0.9) / 1.5)


def _cross(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    vertical = (np.abs(x) <= 0.25) & (np.abs(y) <= 0.9)
    horizontal = (np.abs(y) <= 0.25) & (np.abs(x) <= 0.9)
    return vertical | horizontal


def _bar(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return (np.abs(x) <= 0.9) & (np.abs(y) <= 0.25)


def _ring(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    r2 = x * x + y * y
    return (r2 >= 0.55 ** 2) & (r2 <= 0.95 ** 2)


def _diamond(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.abs(x) + np.abs(y) <= 0.9


def _l_shape(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    stem = (x >= -0.7) & (x <= -0.3) & (np.abs(y) <= 0.9)
    foot = (x >= -0.7) & (x <= 0.7) & (y >= 0.5) & (y <= 0.9)
    return stem | foot


def _t_shape(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    top = (np.abs(x) <= 0.8) & (y >= -0.9) & (y <= -0.5)
    stem = (np.abs(x) <= 0.2) & (np.abs(y) <= 0.9)
    return top | stem


def _dot_pair(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    left = (x + 0.5) ** 2 + y * y <= 0.35 ** 2
    right = (x - 0.5) ** 2 + y * y <= 0.35 ** 2
    return left | right


SHAPES: Dict[str, Mask] = {
    "disk": _disk,
    "square": _square,
    "triangle": _triangle,
    "cross": _cross,
    "bar": _bar,
    "ring": _ring,
    "diamond": _diamond,
    "l-shape": _l_shape,
    "t-shape": _t_shape,
    "dot-pair": _dot_pair,
}


@lru_cache(maxsize=8)
def _pixel_centres(side: int) -> Tuple[np.ndarray, np.ndarray]:
    coords = (np.arange(side, dtype=np.float64) + 0.5) / side
    cols, rows = np.meshgrid(coords, coords)
    cols.setflags(write=False)
    rows.setflags(write=False)
    return cols, rows


def render_shape(kind: str, pose: ShapePose, side: int) -> Tensor:
    """
    Rasterise a shape into a flattened side x side image.

    Args:
        kind: Shape name, one of SHAPES
        pose: Centre, scale, rotation (radians) and intensity
        side: Canvas side in pixels

    Returns:
        Row-major vector of side*side pixel values in [0, 1]

    Raises:
        ValidationError: If the kind is unknown or the pose is off-canvas
    """
    if kind not in SHAPES:
        raise ValidationError(f"unknown shape kind '{kind}' (known: {', '.join(SHAPES)})")
    cx, cy = pose.center
    if not (0.0 <= cx <= 1.0 and 0.0 <= cy <= 1.0):
        raise ValidationError(f"shape centre {pose.center} outside the canvas")
    if not pose.scale > 0:
        raise ValidationError(f"shape scale must be positive, got {pose.scale}")
    if not 0.0 <= pose.intensity <= 1.0:
        raise ValidationError(f"intensity must lie in [0, 1], got {pose.intensity}")

    cols, rows = _pixel_centres(side)
    dx = cols - cx
    dy = rows - cy
    cos_t, sin_t = np.cos(pose.rotation), np.sin(pose.rotation)
    x = (cos_t * dx + sin_t * dy) / pose.scale
    y = (-sin_t * dx + cos_t * dy) / pose.scale
    mask = SHAPES[kind](x, y)
    return (pose.intensity * mask.astype(np.float64)).reshape(-1)
