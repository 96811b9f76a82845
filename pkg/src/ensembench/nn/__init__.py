"""
Minimal dense training stack.

Contains float64 tensor helpers, layers with exact gradients, losses, the
Adam optimizer, learning-rate schedules and the shared training loop.
"""

from .tensor import Tensor, as_tensor, check_finite, he_uniform
from .layers import (
    Parameter,
    Layer,
    DenseLayer,
    ReLU,
    BatchEnsembleDense,
    MimoHeads,
    FastInit,
    dense_forward,
)
from .network import Network
from .losses import softmax, softmax_cross_entropy, multi_head_cross_entropy
from .optim import Adam, AdamState, adam_step
from .schedules import ScheduleKind, lr_at, cycle_end_epochs, cycle_count, cycle_length
from .training import fit, TrainHistory

__all__ = [
    'Tensor',
    'as_tensor',
    'check_finite',
    'he_uniform',
    'Parameter',
    'Layer',
    'DenseLayer',
    'ReLU',
    'BatchEnsembleDense',
    'MimoHeads',
    'FastInit',
    'dense_forward',
    'Network',
    'softmax',
    'softmax_cross_entropy',
    'multi_head_cross_entropy',
    'Adam',
    'AdamState',
    'adam_step',
    'ScheduleKind',
    'lr_at',
    'cycle_end_epochs',
    'cycle_count',
    'cycle_length',
    'fit',
    'TrainHistory',
]
