"""
Minibatch training loop shared by every ensemble strategy.
"""

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable, Iterable, List, Optional, Tuple

import numpy as np

from ensembench.backend.exceptions import NonFiniteError
from ensembench.nn.network import Network
from ensembench.nn.optim import Adam
from ensembench.nn.schedules import lr_at
from ensembench.nn.tensor import Tensor, check_finite
from ensembench.utils.logging_config import get_logger

if TYPE_CHECKING:
    from ensembench.models.config import TrainConfig

logger = get_logger(__name__)

BatchSource = Callable[[np.random.Generator], Iterable[Tuple[Tensor, np.ndarray]]]
LossFn = Callable[[Tensor, np.ndarray], Tuple[float, Tensor]]
EpochHook = Callable[[int, Network], None]


@dataclass
class TrainHistory:
    """Per-epoch mean training loss and learning rate."""

    losses: List[float] = field(default_factory=list)
    learning_rates: List[float] = field(default_factory=list)

    @property
    def final_loss(self) -> float:
        return self.losses[-1] if self.losses else float('nan')


def fit(
    network: Network,
    config: 'TrainConfig',
    batches: BatchSource,
    loss_fn: LossFn,
    rng: np.random.Generator,
    on_epoch_end: Optional[EpochHook] = None,
) -> TrainHistory:
    """
    Train a network with Adam under the configured learning-rate schedule.

    Args:
        network: Network to train in place
        config: Optimisation settings
        batches: Callable yielding (inputs, labels) minibatches for one epoch
        loss_fn: Maps (logits, labels) to (loss, gradient of logits)
        rng: Generator driving minibatch order and augmentation
        on_epoch_end: Called with (completed epoch count, network)

    Returns:
        TrainHistory of the run

    Raises:
        NonFiniteError: If a loss or gradient becomes NaN or infinite
    """
    optimizer = Adam(network.parameters(), lr=config.initial_lr, l2=config.l2_penalty,
                     betas=config.adam_betas, eps=config.adam_eps)
    history = TrainHistory()

    for epoch in range(config.epochs):
        lr = lr_at(config.schedule, epoch, config.epochs, config.initial_lr, config.num_cycles)
        total, count = 0.0, 0
        for inputs, labels in batches(rng):
            optimizer.zero_grad()
            logits = network.forward(inputs)
            loss, grad = loss_fn(logits, labels)
            if not np.isfinite(loss):
                raise NonFiniteError(f"non-finite loss at epoch {epoch}: {loss}")
            network.backward(grad)
            for name, p in network.named_parameters():
                check_finite(f"gradient of {name} at epoch {epoch}", p.grad)
            optimizer.step(lr)
            total += loss * inputs.shape[0]
            count += inputs.shape[0]

        mean_loss = total / max(count, 1)
        history.losses.append(mean_loss)
        history.learning_rates.append(lr)
        logger.debug(f"epoch {epoch + 1}/{config.epochs}: loss={mean_loss:.6f} lr={lr:.6g}")
        if on_epoch_end is not None:
            on_epoch_end(epoch + 1, network)

    logger.info(f"Training finished after {config.epochs} epochs, final loss {history.final_loss:.6f}")
    return history
