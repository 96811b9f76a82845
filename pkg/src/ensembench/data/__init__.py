"""
Procedural shape-image datasets.
"""

from .shapes import SHAPES, ShapePose, render_shape
from .synth import (
    OOD_LABEL,
    SplitDataset,
    generate,
    augment_flips,
    iterate_minibatches,
)

__all__ = [
    'SHAPES',
    'ShapePose',
    'render_shape',
    'OOD_LABEL',
    'SplitDataset',
    'generate',
    'augment_flips',
    'iterate_minibatches',
]
