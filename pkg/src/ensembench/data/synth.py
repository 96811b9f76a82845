"""
Seeded procedural shape datasets with disjoint ID and OOD classes.

The ID pool is split 85/15 into training and validation per class; ID and OOD
test sets are drawn separately. Augmentation (random horizontal and vertical
flips) is applied only while iterating training batches.
"""

import math
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np
import numpy.typing as npt

from ensembench.backend.exceptions import DimensionError
from ensembench.data.shapes import ShapePose, render_shape
from ensembench.models.config import DatasetSpec
from ensembench.nn.tensor import Tensor
from ensembench.utils.logging_config import get_logger

logger = get_logger(__name__)

OOD_LABEL = -1

Labels = npt.NDArray[np.int64]


@dataclass
class SplitDataset:
    """Training, validation, ID test and OOD test arrays of flattened images."""

    spec: DatasetSpec
    train_x: Tensor
    train_y: Labels
    val_x: Tensor
    val_y: Labels
    id_test_x: Tensor
    id_test_y: Labels
    ood_test_x: Tensor
    ood_test_kind: Labels  # index into spec.ood_classes

    @property
    def input_dim(self) -> int:
        return self.spec.input_dim

    @property
    def num_classes(self) -> int:
        return self.spec.num_classes

    @property
    def image_side(self) -> int:
        return self.spec.image_side

    def combined_test(self) -> Tuple[Tensor, Labels]:
        """ID test followed by OOD test; OOD points carry OOD_LABEL."""
        x = np.concatenate([self.id_test_x, self.ood_test_x], axis=0)
        y = np.concatenate([self.id_test_y, np.full(len(self.ood_test_x), OOD_LABEL, dtype=np.int64)])
        return x, y

    def counts(self) -> Dict[str, int]:
        return {
            'train': int(len(self.train_y)),
            'validation': int(len(self.val_y)),
            'id_test': int(len(self.id_test_y)),
            'ood_test': int(len(self.ood_test_kind)),
        }


def _sample_pose(rng: np.random.Generator) -> ShapePose:
    return ShapePose(
        center=(0.5 + rng.uniform(-0.05, 0.05), 0.5 + rng.uniform(-0.05, 0.05)),
        scale=rng.uniform(0.32, 0.40),
        rotation=rng.uniform(-math.pi / 12, math.pi / 12),
        intensity=rng.uniform(0.6, 1.0),
    )


def _render_class(kind: str, count: int, spec: DatasetSpec, rng: np.random.Generator) -> Tensor:
    images = np.empty((count, spec.input_dim), dtype=np.float64)
    for i in range(count):
        images[i] = render_shape(kind, _sample_pose(rng), spec.image_side)
    if spec.noise_sigma > 0:
        images += rng.normal(0.0, spec.noise_sigma, size=images.shape)
    np.clip(images, 0.0, 1.0, out=images)
    return images


def generate(spec: DatasetSpec) -> SplitDataset:
    """
    Generate a dataset deterministically from its spec.

    Args:
        spec: Dataset specification; spec.seed drives all randomness

    Returns:
        SplitDataset with stratified train/validation split
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    n_val = int(round(spec.validation_fraction * spec.per_class_train))
    n_val = min(max(n_val, 1), spec.per_class_train - 1)

    train_x: List[Tensor] = []
    train_y: List[Labels] = []
    val_x: List[Tensor] = []
    val_y: List[Labels] = []
    test_x: List[Tensor] = []
    test_y: List[Labels] = []
    for label, kind in enumerate(spec.id_classes):
        pool = _render_class(kind, spec.per_class_train, spec, rng)
        order = rng.permutation(spec.per_class_train)
        val_idx, train_idx = order[:n_val], order[n_val:]
        train_x.append(pool[train_idx])
        train_y.append(np.full(len(train_idx), label, dtype=np.int64))
        val_x.append(pool[val_idx])
        val_y.append(np.full(n_val, label, dtype=np.int64))
        test_x.append(_render_class(kind, spec.per_class_id_test, spec, rng))
        test_y.append(np.full(spec.per_class_id_test, label, dtype=np.int64))

    ood_x: List[Tensor] = []
    ood_kind: List[Labels] = []
    for index, kind in enumerate(spec.ood_classes):
        ood_x.append(_render_class(kind, spec.per_class_ood_test, spec, rng))
        ood_kind.append(np.full(spec.per_class_ood_test, index, dtype=np.int64))

    dataset = SplitDataset(
        spec=spec,
        train_x=np.concatenate(train_x),
        train_y=np.concatenate(train_y),
        val_x=np.concatenate(val_x),
        val_y=np.concatenate(val_y),
        id_test_x=np.concatenate(test_x),
        id_test_y=np.concatenate(test_y),
        ood_test_x=np.concatenate(ood_x) if ood_x else np.empty((0, spec.input_dim)),
        ood_test_kind=np.concatenate(ood_kind) if ood_kind else np.empty(0, dtype=np.int64),
    )
    logger.info(f"Generated dataset {dataset.counts()} (side {spec.image_side}, seed {spec.seed})")
    return dataset


def augment_flips(batch: Tensor, side: int, rng: np.random.Generator) -> Tensor:
    """
    Flip each image horizontally and vertically, each with probability 1/2.

    Rows may hold several concatenated images (MIMO slots); every image is
    flipped independently.

    Args:
        batch: [B, k*side*side] flattened images
        side: Image side in pixels
        rng: Generator for the flip decisions

    Returns:
        New array of the same shape
    """
    pixels = side * side
    if batch.ndim != 2 or batch.shape[1] % pixels:
        raise DimensionError(f"batch of shape {batch.shape} does not hold {side}x{side} images")
    images = batch.reshape(-1, side, side).copy()
    horizontal = rng.random(len(images)) < 0.5
    vertical = rng.random(len(images)) < 0.5
    images[horizontal] = images[horizontal][:, :, ::-1]
    images[vertical] = images[vertical][:, ::-1, :]
    return images.reshape(batch.shape)


def iterate_minibatches(
    x: Tensor,
    y: np.ndarray,
    batch_size: int,
    rng: np.random.Generator,
    side: Optional[int] = None,
    augment: bool = False,
) -> Iterator[Tuple[Tensor, np.ndarray]]:
    """
    Yield shuffled minibatches for one epoch.

    Args:
        x: [N, d] inputs
        y: [N] labels
        batch_size: Rows per batch; the last batch may be smaller
        rng: Generator for the shuffle and the flips
        side: Image side, required when augment is set
        augment: Apply random flips to every batch

    Yields:
        (inputs, labels) pairs
    """
    order = rng.permutation(len(x))
    for start in range(0, len(x), batch_size):
        idx = order[start:start + batch_size]
        inputs = x[idx]
        if augment:
            if side is None:
                raise DimensionError("augmentation requires the image side")
            inputs = augment_flips(inputs, side, rng)
        yield inputs, y[idx]
