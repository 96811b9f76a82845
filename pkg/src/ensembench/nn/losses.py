"""
Softmax and cross-entropy losses.
"""

from typing import Tuple

import numpy as np
import numpy.typing as npt

from ensembench.backend.exceptions import DimensionError, LabelIndexError
from ensembench.nn.tensor import Tensor, check_finite, require_shape


def softmax(logits: Tensor, axis: int = -1) -> Tensor:
    """Numerically stable softmax along an axis."""
    shifted = logits - logits.max(axis=axis, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=axis, keepdims=True)


def _check_labels(labels: npt.NDArray[np.int64], rows: int, num_classes: int) -> npt.NDArray[np.int64]:
    labels = np.asarray(labels)
    if labels.shape != (rows,):
        raise DimensionError(f"labels: expected shape ({rows},), got {labels.shape}")
    if not np.issubdtype(labels.dtype, np.integer):
        raise DimensionError(f"labels must be integer class indices, got {labels.dtype}")
    if rows and (labels.min() < 0 or labels.max() >= num_classes):
        raise LabelIndexError(
            f"labels must lie in [0, {num_classes}), got range [{labels.min()}, {labels.max()}]"
        )
    return labels.astype(np.int64)


def softmax_cross_entropy(logits: Tensor, labels: npt.NDArray[np.int64]) -> Tuple[float, Tensor]:
    """
    Mean cross-entropy of integer labels under softmax(logits).

    Args:
        logits: [B, K] scores
        labels: [B] class indices in [0, K)

    Returns:
        (loss, gradient of loss with respect to logits)

    Raises:
        LabelIndexError: If a label is outside [0, K)
        NonFiniteError: If the loss or gradient is not finite
    """
    require_shape("logits", logits, (None, None))
    rows, num_classes = logits.shape
    labels = _check_labels(labels, rows, num_classes)

    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    log_probs = shifted - log_norm[:, None]
    index = np.arange(rows)
    loss = float(-log_probs[index, labels].mean())

    grad = np.exp(log_probs)
    grad[index, labels] -= 1.0
    grad /= rows
    check_finite("cross-entropy loss", np.asarray(loss))
    check_finite("cross-entropy gradient", grad)
    return loss, grad


def multi_head_cross_entropy(logits: Tensor, labels: npt.NDArray[np.int64],
                             heads: int) -> Tuple[float, Tensor]:
    """
    Sum of per-head mean cross-entropies.

    Args:
        logits: [B, heads*K] with head m in columns [m*K, (m+1)*K)
        labels: [B, heads] class index per head
        heads: Number of heads

    Returns:
        (summed loss, gradient with respect to logits)
    """
    require_shape("multi-head logits", logits, (None, None))
    labels = np.asarray(labels)
    if labels.shape != (logits.shape[0], heads) or logits.shape[1] % heads:
        raise DimensionError(
            f"multi-head shapes disagree: logits {logits.shape}, labels {labels.shape}, heads {heads}"
        )
    width = logits.shape[1] // heads
    total = 0.0
    grad = np.empty_like(logits)
    for m in range(heads):
        cols = slice(m * width, (m + 1) * width)
        loss, grad[:, cols] = softmax_cross_entropy(logits[:, cols], labels[:, m])
        total += loss
    return total, grad
