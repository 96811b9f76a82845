"""
Exhaustive hyperparameter grid search selecting by validation NLL.
"""

import itertools
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence

from ensembench.backend.exceptions import ConfigurationError, EnsembenchError, ExperimentError
from ensembench.data.synth import SplitDataset
from ensembench.ensembles.trainers import train_ensemble
from ensembench.metrics.uncertainty import accuracy, nll
from ensembench.models.config import EnsembleConfig
from ensembench.utils.logging_config import get_logger

logger = get_logger(__name__)


@dataclass
class TuningResult:
    """Outcome of a grid search."""

    best_config: EnsembleConfig
    best_val_nll: float
    trials: List[Dict[str, Any]] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'best_config': self.best_config.to_dict(),
            'best_val_nll': self.best_val_nll,
            'trials': list(self.trials),
        }


def apply_overrides(config: EnsembleConfig, overrides: Mapping[str, Any]) -> EnsembleConfig:
    """
    Return a copy of config with dotted-key overrides applied.

    Args:
        config: Base ensemble configuration
        overrides: e.g. {'train.initial_lr': 1e-3, 'mimo_input_repetition': 0.5}

    Raises:
        ConfigurationError: If a key does not name an existing field or the
            result is invalid
    """
    data = config.to_dict()
    for key, value in overrides.items():
        *parents, leaf = key.split('.')
        node = data
        for part in parents:
            if not isinstance(node.get(part), dict):
                raise ConfigurationError(f"unknown configuration key: {key}")
            node = node[part]
        if leaf not in node:
            raise ConfigurationError(f"unknown configuration key: {key}")
        node[leaf] = value
    updated = EnsembleConfig.from_dict(data)
    updated.validate()
    return updated


def grid_search(
    config: EnsembleConfig,
    grid: Mapping[str, Sequence[Any]],
    dataset: SplitDataset,
    augment: bool = True,
) -> TuningResult:
    """
    Train every combination of the grid and keep the lowest validation NLL.

    Invalid combinations and failed trainings are recorded and skipped; ties
    keep the first combination in grid order.

    Args:
        config: Base configuration
        grid: Dotted key to candidate values
        dataset: Data with a validation split
        augment: Random flips during training

    Returns:
        TuningResult with the best configuration and every trial

    Raises:
        ExperimentError: If no combination could be trained
    """
    keys = sorted(grid)
    combinations = list(itertools.product(*(grid[k] for k in keys))) if keys else [()]
    logger.info(f"Grid search for {config.name}: {len(combinations)} combination(s)")

    best: Optional[EnsembleConfig] = None
    best_nll = float('inf')
    trials: List[Dict[str, Any]] = []
    for values in combinations:
        overrides = dict(zip(keys, values))
        trial: Dict[str, Any] = {'overrides': overrides}
        try:
            candidate = apply_overrides(config, overrides)
            predictor = train_ensemble(candidate, dataset, augment=augment)
            probs = predictor.predict(dataset.val_x)
            trial['val_nll'] = nll(probs, dataset.val_y)
            trial['val_accuracy'] = accuracy(probs, dataset.val_y)
            trial['status'] = 'ok'
        except EnsembenchError as e:
            logger.warning(f"Grid point {overrides} failed: {e}")
            trial['status'] = 'failed'
            trial['error'] = str(e)
            trials.append(trial)
            continue
        logger.info(f"Grid point {overrides}: val_nll={trial['val_nll']:.4f}")
        trials.append(trial)
        if trial['val_nll'] < best_nll:
            best, best_nll = candidate, trial['val_nll']

    if best is None:
        raise ExperimentError(f"grid search for {config.name} produced no trained model")
    return TuningResult(best_config=best, best_val_nll=best_nll, trials=trials)
