"""
Sequential network container with state capture and restore.
"""

from typing import Dict, List, Tuple

import numpy as np

from ensembench.backend.exceptions import DimensionError
from ensembench.nn.layers import Layer, Parameter
from ensembench.nn.tensor import Tensor


class Network:
    """A stack of layers applied in order."""

    def __init__(self, layers: List[Layer]):
        self.layers = layers

    def forward(self, x: Tensor) -> Tensor:
        for layer in self.layers:
            x = layer.forward(x)
        return x

    def backward(self, grad: Tensor) -> Tensor:
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return grad

    def named_parameters(self) -> List[Tuple[str, Parameter]]:
        """(qualified name, Parameter) pairs, e.g. ('layers.0.weight', p)."""
        return [
            (f"layers.{i}.{p.name}", p)
            for i, layer in enumerate(self.layers)
            for p in layer.parameters()
        ]

    def parameters(self) -> List[Parameter]:
        return [p for _, p in self.named_parameters()]

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    @property
    def parameter_count(self) -> int:
        return sum(p.size for p in self.parameters())

    def state(self) -> Dict[str, Tensor]:
        """Copy of every parameter array, keyed by qualified name."""
        return {name: p.value.copy() for name, p in self.named_parameters()}

    def load_state(self, state: Dict[str, Tensor]) -> None:
        """
        Overwrite parameters from a state produced by state().

        Raises:
            DimensionError: If names or shapes differ
        """
        named = dict(self.named_parameters())
        if set(named) != set(state):
            missing = sorted(set(named) - set(state))
            extra = sorted(set(state) - set(named))
            raise DimensionError(f"state mismatch: missing {missing}, unexpected {extra}")
        for name, p in named.items():
            value = np.asarray(state[name], dtype=np.float64)
            if value.shape != p.value.shape:
                raise DimensionError(f"{name}: expected shape {p.value.shape}, got {value.shape}")
            p.value[...] = value
