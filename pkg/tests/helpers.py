"""
Shared fixtures for the test suite.
"""

import sys
import os

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from ensembench.data.synth import SplitDataset
from ensembench.models.config import (
    DatasetSpec,
    EnsembleConfig,
    ExperimentConfig,
    ModelSpec,
    Strategy,
    TrainConfig,
)
from ensembench.nn.schedules import ScheduleKind


def toy_dataset(seed: int = 0, per_class: int = 60) -> SplitDataset:
    """
    Two linearly separable classes of 4x4 'images'.

    Class 0 is bright in the top half, class 1 in the bottom half. The OOD
    set is uniform noise.
    """
    rng = np.random.default_rng(seed)
    spec = DatasetSpec(image_side=4, id_classes=["disk", "square"], ood_classes=["ring"],
                       per_class_train=per_class, per_class_id_test=20, per_class_ood_test=20,
                       seed=seed)
    top = np.r_[np.ones(8), np.zeros(8)]
    bottom = top[::-1].copy()

    def draw(count: int):
        x = np.concatenate([top + rng.normal(0, 0.1, (count, 16)),
                            bottom + rng.normal(0, 0.1, (count, 16))])
        y = np.r_[np.zeros(count, dtype=np.int64), np.ones(count, dtype=np.int64)]
        return np.clip(x, 0.0, 1.0), y

    train_x, train_y = draw(per_class)
    val_x, val_y = draw(10)
    test_x, test_y = draw(20)
    return SplitDataset(
        spec=spec,
        train_x=train_x,
        train_y=train_y,
        val_x=val_x,
        val_y=val_y,
        id_test_x=test_x,
        id_test_y=test_y,
        ood_test_x=rng.uniform(0.0, 1.0, (20, 16)),
        ood_test_kind=np.zeros(20, dtype=np.int64),
    )


def toy_model() -> ModelSpec:
    return ModelSpec(input_dim=16, hidden=[8], num_classes=2)


def toy_config(strategy: Strategy, members: int, name: str = "", epochs: int = 12,
               **kwargs) -> EnsembleConfig:
    """Small ensemble configuration for the toy dataset."""
    if strategy == Strategy.SNAPSHOT:
        train = TrainConfig(epochs=epochs, batch_size=16, initial_lr=1e-2, l2_penalty=1e-5,
                            schedule=ScheduleKind.COSINE_CYCLIC, num_cycles=members)
    else:
        train = TrainConfig(epochs=epochs, batch_size=16, initial_lr=1e-2, l2_penalty=1e-5)
    return EnsembleConfig(name or f"{strategy.value}_m{members}", strategy, members,
                          toy_model(), train, **kwargs)


def tiny_experiment(output_dir: str = "results") -> ExperimentConfig:
    """A fast experiment on a small shape dataset."""
    dataset = DatasetSpec(image_side=8, per_class_train=24, per_class_id_test=6,
                          per_class_ood_test=6, seed=3)
    model = ModelSpec(input_dim=64, hidden=[12], num_classes=5)

    def train(cycles: int = 0) -> TrainConfig:
        if cycles:
            return TrainConfig(epochs=4, batch_size=32, initial_lr=5e-3,
                               schedule=ScheduleKind.COSINE_CYCLIC, num_cycles=cycles)
        return TrainConfig(epochs=4, batch_size=32, initial_lr=5e-3)

    models = [
        EnsembleConfig("single", Strategy.SINGLE, 1, model, train()),
        EnsembleConfig("deep_m2", Strategy.DEEP, 2, model, train()),
        EnsembleConfig("snapshot_m2", Strategy.SNAPSHOT, 2, model, train(cycles=2)),
        EnsembleConfig("batch_m2", Strategy.BATCH, 2, model, train()),
        EnsembleConfig("mimo_m2", Strategy.MIMO, 2, model, train(), mimo_input_repetition=0.5),
    ]
    return ExperimentConfig(dataset=dataset, models=models, seeds=[0, 1], betas=[0.5, 1.0, 2.0],
                            n_thresholds=11, histogram_bins=5, eval_repeats=1,
                            output_dir=output_dir)
