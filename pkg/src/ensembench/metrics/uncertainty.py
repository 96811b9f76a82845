"""
Ensemble averaging and entropy-based uncertainty decomposition.

Total uncertainty (TU) is the entropy of the member-averaged distribution,
aleatoric uncertainty (AU) the mean member entropy and epistemic uncertainty
(EU) their difference. Entropies are in bits; NLL is in nats.
"""

import math
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from ensembench.backend.exceptions import DimensionError, LabelIndexError, ValidationError
from ensembench.nn.tensor import Tensor, as_tensor

ENTROPY_UNIT = "bits"
NLL_UNIT = "nats"
PROBABILITY_FLOOR = 1e-12
STOCHASTIC_TOLERANCE = 1e-6


@dataclass
class UncertaintyTriple:
    """Per-point TU, AU and EU in bits."""

    tu: Tensor
    au: Tensor
    eu: Tensor

    def __len__(self) -> int:
        return len(self.tu)


def _check_member_probs(member_probs: npt.ArrayLike) -> Tensor:
    probs = as_tensor(member_probs)
    if probs.ndim != 3:
        raise DimensionError(f"member probabilities must be [M, B, K], got shape {probs.shape}")
    if probs.shape[0] < 1 or probs.shape[2] < 1:
        raise DimensionError(f"member probabilities need M >= 1 and K >= 1, got {probs.shape}")
    if np.any(probs < -STOCHASTIC_TOLERANCE) or np.any(
        np.abs(probs.sum(axis=-1) - 1.0) > STOCHASTIC_TOLERANCE
    ):
        raise ValidationError("member probabilities contain rows that are not probability vectors")
    return probs


def entropy_bits(probs: npt.ArrayLike, axis: int = -1) -> Tensor:
    """Shannon entropy in bits along an axis, with 0 * log 0 taken as 0."""
    p = as_tensor(probs)
    positive = p > 0
    logs = np.log2(np.where(positive, p, 1.0))
    return -np.sum(np.where(positive, p * logs, 0.0), axis=axis)


def ensemble_mean(member_probs: npt.ArrayLike) -> Tensor:
    """
    Average member distributions.

    Args:
        member_probs: [M, B, K] row-stochastic member outputs

    Returns:
        [B, K] ensemble prediction
    """
    return _check_member_probs(member_probs).mean(axis=0)


def decompose(member_probs: npt.ArrayLike) -> UncertaintyTriple:
    """
    Split predictive uncertainty into aleatoric and epistemic parts.

    Args:
        member_probs: [M, B, K] row-stochastic member outputs

    Returns:
        UncertaintyTriple of length B; TU and AU lie in [0, log2 K] and
        EU = TU - AU is clamped at 0

    Raises:
        ValidationError: If a row is not a probability vector
    """
    probs = _check_member_probs(member_probs)
    upper = math.log2(probs.shape[2])
    tu = np.clip(entropy_bits(probs.mean(axis=0)), 0.0, upper)
    au = np.clip(entropy_bits(probs).mean(axis=0), 0.0, upper)
    eu = np.maximum(tu - au, 0.0)
    return UncertaintyTriple(tu=tu, au=au, eu=eu)


def _check_labels(probs: Tensor, labels: npt.ArrayLike, allow_negative: bool) -> npt.NDArray[np.int64]:
    if probs.ndim != 2:
        raise DimensionError(f"probabilities must be [B, K], got shape {probs.shape}")
    y = np.asarray(labels, dtype=np.int64)
    if y.shape != (probs.shape[0],):
        raise DimensionError(f"labels shape {y.shape} does not match {probs.shape[0]} rows")
    low = y < 0 if not allow_negative else np.zeros(len(y), dtype=bool)
    if np.any(low) or np.any(y >= probs.shape[1]):
        raise LabelIndexError(f"labels must lie in [0, {probs.shape[1]}), got range "
                              f"[{y.min()}, {y.max()}]")
    return y


def nll(ensemble_probs: npt.ArrayLike, labels: npt.ArrayLike) -> float:
    """
    Mean negative log-likelihood in nats.

    Probabilities are floored at 1e-12 before the log.
    """
    probs = as_tensor(ensemble_probs)
    y = _check_labels(probs, labels, allow_negative=False)
    if len(y) == 0:
        return 0.0
    picked = probs[np.arange(len(y)), y]
    return float(-np.mean(np.log(np.maximum(picked, PROBABILITY_FLOOR))))


def accuracy(ensemble_probs: npt.ArrayLike, labels: npt.ArrayLike) -> float:
    """
    Fraction of argmax predictions equal to the label.

    Ties go to the lowest class index. Negative labels (OOD points) never match.
    """
    probs = as_tensor(ensemble_probs)
    y = _check_labels(probs, labels, allow_negative=True)
    if len(y) == 0:
        return 0.0
    return float(np.mean(np.argmax(probs, axis=1) == y))
