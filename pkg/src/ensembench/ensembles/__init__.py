"""
Ensemble construction, training and inference.
"""

from .builders import build_network, layer_widths
from .predictor import EnsemblePredictor
from .mimo import MimoSampler
from .trainers import (
    MEMBER_SEED_STRIDE,
    TRAINERS,
    member_seed,
    train_single,
    train_deep,
    train_snapshot,
    train_batch_ensemble,
    train_mimo,
    train_ensemble,
)
from .tuning import TuningResult, apply_overrides, grid_search

__all__ = [
    'build_network',
    'layer_widths',
    'EnsemblePredictor',
    'MimoSampler',
    'MEMBER_SEED_STRIDE',
    'TRAINERS',
    'member_seed',
    'train_single',
    'train_deep',
    'train_snapshot',
    'train_batch_ensemble',
    'train_mimo',
    'train_ensemble',
    'TuningResult',
    'apply_overrides',
    'grid_search',
]
