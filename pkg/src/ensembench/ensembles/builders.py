"""
Network construction for each ensemble strategy.
"""

from typing import List, Optional

import numpy as np

from ensembench.models.config import ModelSpec, Strategy
from ensembench.nn.layers import BatchEnsembleDense, DenseLayer, FastInit, Layer, MimoHeads, ReLU
from ensembench.nn.network import Network


def layer_widths(model: ModelSpec, strategy: Strategy, members: int) -> List[int]:
    """Input, hidden and output widths; MIMO takes M concatenated inputs."""
    input_width = model.input_dim * members if strategy == Strategy.MIMO else model.input_dim
    return [input_width, *model.hidden, model.num_classes]


def build_network(
    model: ModelSpec,
    strategy: Strategy,
    members: int,
    rng: Optional[np.random.Generator] = None,
    fast_init: FastInit = FastInit.RANDOM_SIGN,
    fast_lr_scale: float = 1.0,
) -> Network:
    """
    Build a freshly initialised ReLU network for a strategy.

    Single, deep and snapshot members are plain dense stacks. Batch ensembles
    replace every dense layer with a BatchEnsembleDense. MIMO networks widen
    the input layer M-fold and end in M classification heads.

    Args:
        model: Architecture
        strategy: Ensembling strategy
        members: Ensemble size M
        rng: Generator for the initial weights (seed 0 when omitted)
        fast_init: Fast-weight initialisation for batch ensembles
        fast_lr_scale: Learning-rate multiplier for fast weights

    Returns:
        Network instance
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    widths = layer_widths(model, strategy, members)
    layers: List[Layer] = []
    for i, (fan_in, fan_out) in enumerate(zip(widths[:-1], widths[1:])):
        last = i == len(widths) - 2
        if strategy == Strategy.BATCH:
            layers.append(BatchEnsembleDense.initialize(
                fan_in, fan_out, members, rng, fast_init, fast_lr_scale
            ))
        elif strategy == Strategy.MIMO and last:
            layers.append(MimoHeads.initialize(fan_in, fan_out, members, rng))
        else:
            layers.append(DenseLayer.initialize(fan_in, fan_out, rng))
        if not last:
            layers.append(ReLU())
    return Network(layers)
