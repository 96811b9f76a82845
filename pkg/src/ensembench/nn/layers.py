"""
Layer set with exact reverse-mode gradients.

Every layer caches what its backward pass needs during forward, accumulates
parameter gradients into its Parameter objects and returns the gradient with
respect to its input.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional

import numpy as np

from ensembench.backend.exceptions import DimensionError
from ensembench.nn.tensor import Tensor, as_tensor, he_uniform, require_shape


class FastInit(str, Enum):
    """Initialisation of batch-ensemble fast weights."""

    RANDOM_SIGN = "random-sign"
    RANDOM_GAUSSIAN = "random-gaussian"


@dataclass
class Parameter:
    """A trainable array with its gradient and a per-parameter LR factor."""

    name: str
    value: Tensor
    grad: Tensor = field(init=False)
    lr_scale: float = 1.0

    def __post_init__(self) -> None:
        self.value = as_tensor(self.value)
        self.grad = np.zeros_like(self.value)

    def zero_grad(self) -> None:
        self.grad.fill(0.0)

    @property
    def size(self) -> int:
        return int(self.value.size)


class Layer:
    """Base class for layers."""

    def forward(self, x: Tensor) -> Tensor:
        raise NotImplementedError

    def backward(self, grad_out: Tensor) -> Tensor:
        raise NotImplementedError

    def parameters(self) -> List[Parameter]:
        return []

    @property
    def parameter_count(self) -> int:
        return sum(p.size for p in self.parameters())


class DenseLayer(Layer):
    """Affine map y = x W + b with W of shape [m, n]."""

    def __init__(self, weight: Tensor, bias: Tensor):
        weight = as_tensor(weight)
        bias = as_tensor(bias)
        require_shape("dense weight", weight, (None, None))
        require_shape("dense bias", bias, (weight.shape[1],))
        self.weight = Parameter("weight", weight)
        self.bias = Parameter("bias", bias)
        self._input: Optional[Tensor] = None

    @classmethod
    def initialize(cls, in_features: int, out_features: int, rng: np.random.Generator) -> 'DenseLayer':
        """He-uniform weights, zero bias."""
        return cls(
            he_uniform(rng, in_features, (in_features, out_features)),
            np.zeros(out_features),
        )

    @property
    def in_features(self) -> int:
        return int(self.weight.value.shape[0])

    @property
    def out_features(self) -> int:
        return int(self.weight.value.shape[1])

    def forward(self, x: Tensor) -> Tensor:
        require_shape("dense input", x, (None, self.in_features))
        self._input = x
        return x @ self.weight.value + self.bias.value

    def backward(self, grad_out: Tensor) -> Tensor:
        if self._input is None:
            raise DimensionError("dense backward called before forward")
        require_shape("dense grad", grad_out, (self._input.shape[0], self.out_features))
        self.weight.grad += self._input.T @ grad_out
        self.bias.grad += grad_out.sum(axis=0)
        return grad_out @ self.weight.value.T

    def parameters(self) -> List[Parameter]:
        return [self.weight, self.bias]


def dense_forward(layer: DenseLayer, batch: Tensor) -> Tensor:
    """Forward a [B, m] batch through a dense layer, caching it for backward."""
    return layer.forward(as_tensor(batch))


class ReLU(Layer):
    """Elementwise max(x, 0)."""

    def __init__(self) -> None:
        self._mask: Optional[np.ndarray] = None

    def forward(self, x: Tensor) -> Tensor:
        mask = x > 0
        self._mask = mask
        return np.where(mask, x, 0.0)

    def backward(self, grad_out: Tensor) -> Tensor:
        if self._mask is None:
            raise DimensionError("relu backward called before forward")
        return np.where(self._mask, grad_out, 0.0)


class BatchEnsembleDense(Layer):
    """
    Rank-1 batch-ensemble dense layer.

    Member i uses the weight W * outer(r_i, s_i) and its own bias. Inputs are
    member-major: rows [i*B, (i+1)*B) of a [M*B, m] batch belong to member i.
    """

    def __init__(self, weight: Tensor, fast_r: Tensor, fast_s: Tensor, bias: Tensor,
                 fast_lr_scale: float = 1.0):
        weight = as_tensor(weight)
        fast_r = as_tensor(fast_r)
        fast_s = as_tensor(fast_s)
        bias = as_tensor(bias)
        require_shape("batch-ensemble weight", weight, (None, None))
        m, n = weight.shape
        require_shape("batch-ensemble fast_r", fast_r, (None, m))
        members = fast_r.shape[0]
        require_shape("batch-ensemble fast_s", fast_s, (members, n))
        require_shape("batch-ensemble bias", bias, (members, n))
        self.weight = Parameter("weight", weight)
        self.fast_r = Parameter("fast_r", fast_r, lr_scale=fast_lr_scale)
        self.fast_s = Parameter("fast_s", fast_s, lr_scale=fast_lr_scale)
        self.bias = Parameter("bias", bias)
        self._input: Optional[Tensor] = None
        self._scaled: Optional[Tensor] = None
        self._hidden: Optional[Tensor] = None

    @classmethod
    def initialize(
        cls,
        in_features: int,
        out_features: int,
        members: int,
        rng: np.random.Generator,
        fast_init: FastInit = FastInit.RANDOM_SIGN,
        fast_lr_scale: float = 1.0,
    ) -> 'BatchEnsembleDense':
        """He-uniform slow weight, random fast weights, zero biases."""
        weight = he_uniform(rng, in_features, (in_features, out_features))
        if fast_init == FastInit.RANDOM_SIGN:
            fast_r = rng.integers(0, 2, size=(members, in_features)) * 2.0 - 1.0
            fast_s = rng.integers(0, 2, size=(members, out_features)) * 2.0 - 1.0
        else:
            fast_r = rng.normal(1.0, 0.5, size=(members, in_features))
            fast_s = rng.normal(1.0, 0.5, size=(members, out_features))
        return cls(weight, fast_r, fast_s, np.zeros((members, out_features)), fast_lr_scale)

    @property
    def members(self) -> int:
        return int(self.fast_r.value.shape[0])

    @property
    def in_features(self) -> int:
        return int(self.weight.value.shape[0])

    @property
    def out_features(self) -> int:
        return int(self.weight.value.shape[1])

    def member_weight(self, member: int) -> Tensor:
        """Materialise W_i = W * r_i s_i^T."""
        return self.weight.value * np.outer(self.fast_r.value[member], self.fast_s.value[member])

    def _split(self, x: Tensor, width: int, name: str) -> Tensor:
        require_shape(name, x, (None, width))
        if x.shape[0] % self.members:
            raise DimensionError(
                f"{name}: {x.shape[0]} rows not divisible by {self.members} members"
            )
        return x.reshape(self.members, x.shape[0] // self.members, width)

    def forward(self, x: Tensor) -> Tensor:
        x3 = self._split(x, self.in_features, "batch-ensemble input")
        scaled = x3 * self.fast_r.value[:, None, :]
        hidden = scaled @ self.weight.value
        out = hidden * self.fast_s.value[:, None, :] + self.bias.value[:, None, :]
        self._input, self._scaled, self._hidden = x3, scaled, hidden
        return out.reshape(x.shape[0], self.out_features)

    def backward(self, grad_out: Tensor) -> Tensor:
        if self._input is None or self._scaled is None or self._hidden is None:
            raise DimensionError("batch-ensemble backward called before forward")
        g3 = self._split(grad_out, self.out_features, "batch-ensemble grad")
        if g3.shape[1] != self._input.shape[1]:
            raise DimensionError("batch-ensemble grad batch size differs from forward")
        self.bias.grad += g3.sum(axis=1)
        self.fast_s.grad += (g3 * self._hidden).sum(axis=1)
        grad_hidden = g3 * self.fast_s.value[:, None, :]
        self.weight.grad += np.einsum('kbm,kbn->mn', self._scaled, grad_hidden)
        grad_scaled = grad_hidden @ self.weight.value.T
        self.fast_r.grad += (grad_scaled * self._input).sum(axis=1)
        grad_in = grad_scaled * self.fast_r.value[:, None, :]
        return grad_in.reshape(grad_out.shape[0], self.in_features)

    def parameters(self) -> List[Parameter]:
        return [self.weight, self.fast_r, self.fast_s, self.bias]


class MimoHeads(Layer):
    """
    M independent K-logit affine heads over a shared hidden representation.

    Output columns [m*K, (m+1)*K) hold head m's logits.
    """

    def __init__(self, weight: Tensor, bias: Tensor):
        weight = as_tensor(weight)
        bias = as_tensor(bias)
        require_shape("mimo head weight", weight, (None, None, None))
        heads, _, classes = weight.shape
        require_shape("mimo head bias", bias, (heads, classes))
        self.weight = Parameter("weight", weight)
        self.bias = Parameter("bias", bias)
        self._input: Optional[Tensor] = None

    @classmethod
    def initialize(cls, in_features: int, num_classes: int, heads: int,
                   rng: np.random.Generator) -> 'MimoHeads':
        """He-uniform head weights, zero biases."""
        return cls(
            he_uniform(rng, in_features, (heads, in_features, num_classes)),
            np.zeros((heads, num_classes)),
        )

    @property
    def heads(self) -> int:
        return int(self.weight.value.shape[0])

    @property
    def in_features(self) -> int:
        return int(self.weight.value.shape[1])

    @property
    def num_classes(self) -> int:
        return int(self.weight.value.shape[2])

    def forward(self, x: Tensor) -> Tensor:
        require_shape("mimo head input", x, (None, self.in_features))
        self._input = x
        logits = np.einsum('bh,mhk->bmk', x, self.weight.value) + self.bias.value[None, :, :]
        return logits.reshape(x.shape[0], self.heads * self.num_classes)

    def backward(self, grad_out: Tensor) -> Tensor:
        if self._input is None:
            raise DimensionError("mimo head backward called before forward")
        require_shape("mimo head grad", grad_out,
                      (self._input.shape[0], self.heads * self.num_classes))
        g3 = grad_out.reshape(grad_out.shape[0], self.heads, self.num_classes)
        self.weight.grad += np.einsum('bh,bmk->mhk', self._input, g3)
        self.bias.grad += g3.sum(axis=0)
        return np.einsum('bmk,mhk->bh', g3, self.weight.value)

    def parameters(self) -> List[Parameter]:
        return [self.weight, self.bias]
