"""
Learning-rate schedules.

The cosine-cyclic schedule is shifted cosine annealing with hard restarts,
evaluated once per epoch. Each cycle starts at the initial learning rate and
decays towards zero; the cycle length is ceil(total_epochs / num_cycles), with
the last cycle shortened when the division is not exact.
"""

import math
from enum import Enum
from typing import List

from ensembench.backend.exceptions import LabelIndexError


class ScheduleKind(str, Enum):
    """Supported learning-rate schedules."""

    CONSTANT = "constant"
    COSINE_CYCLIC = "cosine-cyclic"


def cycle_length(total_epochs: int, num_cycles: int) -> int:
    """Nominal epochs per cycle."""
    return math.ceil(total_epochs / max(num_cycles, 1))


def cycle_count(total_epochs: int, num_cycles: int) -> int:
    """Number of cycles the schedule actually produces over total_epochs."""
    return math.ceil(total_epochs / cycle_length(total_epochs, num_cycles))


def cycle_end_epochs(total_epochs: int, num_cycles: int) -> List[int]:
    """
    Epoch counts after which a cycle ends.

    Args:
        total_epochs: Length of the run
        num_cycles: Requested cycle count

    Returns:
        Completed-epoch counts, e.g. [10, 20, 30, 40] for 40 epochs and 4 cycles
    """
    length = cycle_length(total_epochs, num_cycles)
    return [min(start + length, total_epochs) for start in range(0, total_epochs, length)]


def lr_at(
    schedule: ScheduleKind,
    epoch: int,
    total_epochs: int,
    initial_lr: float,
    num_cycles: int = 1,
) -> float:
    """
    Learning rate for a zero-based epoch index.

    Args:
        schedule: Schedule kind
        epoch: Zero-based epoch, 0 <= epoch < total_epochs
        total_epochs: Length of the run
        initial_lr: Learning rate at the start of every cycle
        num_cycles: Cycle count for the cosine-cyclic schedule

    Returns:
        Learning rate for the epoch

    Raises:
        LabelIndexError: If epoch is outside [0, total_epochs)
    """
    if not 0 <= epoch < total_epochs:
        raise LabelIndexError(f"epoch {epoch} outside [0, {total_epochs})")

    if schedule == ScheduleKind.CONSTANT:
        return initial_lr

    length = cycle_length(total_epochs, num_cycles)
    start = (epoch // length) * length
    current = min(length, total_epochs - start)
    t = epoch - start
    return (initial_lr / 2.0) * (math.cos(math.pi * t / current) + 1.0)
