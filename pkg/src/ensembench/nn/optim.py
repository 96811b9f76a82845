"""
Adam optimizer with classical L2 regularisation.

The L2 term l2 * theta is added to each gradient before the moment updates.
Each parameter's step size is multiplied by its lr_scale, which is how the
batch-ensemble fast-weight learning-rate multiplier is applied.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ensembench.backend.exceptions import DimensionError
from ensembench.nn.layers import Parameter
from ensembench.nn.tensor import Tensor


@dataclass
class AdamState:
    """First and second moment estimates plus the step counter."""

    m: List[Tensor] = field(default_factory=list)
    v: List[Tensor] = field(default_factory=list)
    t: int = 0

    @classmethod
    def zeros_like(cls, params: Sequence[Tensor]) -> 'AdamState':
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params], 0)


def adam_step(
    params: Sequence[Tensor],
    grads: Sequence[Tensor],
    state: AdamState,
    lr: float,
    l2: float,
    betas: Tuple[float, float] = (0.9, 0.999),
    eps: float = 1e-8,
    lr_scales: Optional[Sequence[float]] = None,
) -> Tuple[Sequence[Tensor], AdamState]:
    """
    One bias-corrected Adam update, applied in place.

    Args:
        params: Parameter arrays, updated in place
        grads: Gradients matching params
        state: Moment state, updated in place
        lr: Step size
        l2: L2 penalty weight added to each gradient
        betas: Moment decay rates
        eps: Denominator offset
        lr_scales: Optional per-parameter step-size multipliers

    Returns:
        (params, state)
    """
    if len(params) != len(grads):
        raise DimensionError(f"{len(params)} parameters but {len(grads)} gradients")
    if not state.m:
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
    if len(state.m) != len(params):
        raise DimensionError(f"optimizer state holds {len(state.m)} entries for {len(params)} parameters")
    scales = lr_scales if lr_scales is not None else [1.0] * len(params)

    beta1, beta2 = betas
    state.t += 1
    correction1 = 1.0 - beta1 ** state.t
    correction2 = 1.0 - beta2 ** state.t
    for i, (theta, grad) in enumerate(zip(params, grads)):
        if theta.shape != grad.shape or theta.shape != state.m[i].shape:
            raise DimensionError(
                f"parameter {i}: shape {theta.shape}, gradient {grad.shape}, state {state.m[i].shape}"
            )
        g = grad + l2 * theta if l2 else grad
        state.m[i] *= beta1
        state.m[i] += (1.0 - beta1) * g
        state.v[i] *= beta2
        state.v[i] += (1.0 - beta2) * g * g
        m_hat = state.m[i] / correction1
        v_hat = state.v[i] / correction2
        theta -= (lr * scales[i]) * m_hat / (np.sqrt(v_hat) + eps)
    return params, state


class Adam:
    """Adam over a list of Parameters, honouring each Parameter's lr_scale."""

    def __init__(self, params: List[Parameter], lr: float = 1e-3, l2: float = 0.0,
                 betas: Tuple[float, float] = (0.9, 0.999), eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.l2 = l2
        self.betas = betas
        self.eps = eps
        self.state = AdamState.zeros_like([p.value for p in params])

    def step(self, lr: Optional[float] = None) -> None:
        adam_step(
            [p.value for p in self.params],
            [p.grad for p in self.params],
            self.state,
            self.lr if lr is None else lr,
            self.l2,
            self.betas,
            self.eps,
            [p.lr_scale for p in self.params],
        )

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()
