"""
Trained ensemble artifact producing per-member class distributions.
"""

from dataclasses import dataclass, field
from typing import List

import numpy as np

from ensembench.models.config import ModelSpec, Strategy
from ensembench.nn.losses import softmax
from ensembench.nn.network import Network
from ensembench.nn.tensor import Tensor, as_tensor, require_shape
from ensembench.nn.training import TrainHistory


@dataclass
class EnsemblePredictor:
    """
    M-member predictor.

    Single, deep and snapshot predictors hold one network per member; batch
    and MIMO predictors hold a single network that produces all M members in
    one forward pass.
    """

    strategy: Strategy
    members: int
    model: ModelSpec
    networks: List[Network]
    config_hash: str = ""
    histories: List[TrainHistory] = field(default_factory=list, repr=False)

    @property
    def num_classes(self) -> int:
        return self.model.num_classes

    @property
    def input_dim(self) -> int:
        return self.model.input_dim

    @property
    def parameter_count(self) -> int:
        return sum(net.parameter_count for net in self.networks)

    def predict_members(self, batch: Tensor) -> Tensor:
        """
        Per-member softmax distributions.

        Args:
            batch: [B, d] raw inputs

        Returns:
            [M, B, K] array whose [B, K] slices are row-stochastic

        Raises:
            DimensionError: If d differs from the model input width
        """
        x = as_tensor(batch)
        require_shape("predictor input", x, (None, self.input_dim))
        rows, m, k = x.shape[0], self.members, self.num_classes

        if self.strategy == Strategy.BATCH:
            logits = self.networks[0].forward(np.tile(x, (m, 1))).reshape(m, rows, k)
        elif self.strategy == Strategy.MIMO:
            logits = self.networks[0].forward(np.tile(x, (1, m)))
            logits = logits.reshape(rows, m, k).transpose(1, 0, 2)
        else:
            logits = np.stack([net.forward(x) for net in self.networks])
        return np.ascontiguousarray(softmax(logits, axis=-1))

    def predict(self, batch: Tensor) -> Tensor:
        """Member-averaged [B, K] distribution."""
        return self.predict_members(batch).mean(axis=0)
