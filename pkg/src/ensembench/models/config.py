"""
Configuration data models for ensembench.

Holds the optimisation, architecture, ensemble, dataset and experiment
settings, with JSON persistence and a stable configuration hash.
"""

import copy
import hashlib
import json
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from ensembench.backend.exceptions import ConfigurationError
from ensembench.nn.layers import FastInit
from ensembench.nn.schedules import ScheduleKind, cycle_count


class Strategy(str, Enum):
    """Ensembling strategy of a trained predictor."""

    SINGLE = "single"
    DEEP = "deep"
    SNAPSHOT = "snapshot"
    BATCH = "batch"
    MIMO = "mimo"


DEFAULT_ID_SHAPES = ["disk", "square", "triangle", "cross", "bar"]
DEFAULT_OOD_SHAPES = ["ring", "diamond", "l-shape", "t-shape", "dot-pair"]

# Fields that control how a run executes but not what it computes.
HASH_EXCLUDED_FIELDS = ("output_dir", "workers", "exclusive_timing", "log_level")


@dataclass
class TrainConfig:
    """Optimisation hyperparameters for one training run."""

    epochs: int = 24
    batch_size: int = 64
    initial_lr: float = 3e-3
    l2_penalty: float = 1e-4
    schedule: ScheduleKind = ScheduleKind.CONSTANT
    num_cycles: int = 1
    seed: int = 0
    adam_betas: Tuple[float, float] = (0.9, 0.999)
    adam_eps: float = 1e-8

    def validate(self) -> None:
        """Raise ConfigurationError if any invariant is broken."""
        if self.epochs < 1:
            raise ConfigurationError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be >= 1, got {self.batch_size}")
        if not self.initial_lr > 0:
            raise ConfigurationError(f"initial_lr must be positive, got {self.initial_lr}")
        if self.l2_penalty < 0:
            raise ConfigurationError(f"l2_penalty must be nonnegative, got {self.l2_penalty}")
        beta1, beta2 = self.adam_betas
        if not (0.0 <= beta1 < 1.0 and 0.0 <= beta2 < 1.0):
            raise ConfigurationError(f"adam_betas must lie in [0, 1), got {self.adam_betas}")
        if not self.adam_eps > 0:
            raise ConfigurationError(f"adam_eps must be positive, got {self.adam_eps}")
        if self.schedule == ScheduleKind.COSINE_CYCLIC:
            if self.num_cycles < 1:
                raise ConfigurationError(f"num_cycles must be >= 1, got {self.num_cycles}")
            if self.epochs < self.num_cycles:
                raise ConfigurationError(
                    f"{self.epochs} epochs cannot hold {self.num_cycles} cycles"
                )
            produced = cycle_count(self.epochs, self.num_cycles)
            if produced != self.num_cycles:
                raise ConfigurationError(
                    f"{self.epochs} epochs with cycle length ceil({self.epochs}/{self.num_cycles}) "
                    f"yield {produced} cycles, not {self.num_cycles}"
                )

    def to_dict(self) -> Dict[str, Any]:
        """Convert to a JSON-compatible dictionary."""
        return {
            'epochs': self.epochs,
            'batch_size': self.batch_size,
            'initial_lr': self.initial_lr,
            'l2_penalty': self.l2_penalty,
            'schedule': self.schedule.value,
            'num_cycles': self.num_cycles,
            'seed': self.seed,
            'adam_betas': list(self.adam_betas),
            'adam_eps': self.adam_eps,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'TrainConfig':
        """Create a TrainConfig from a dictionary, defaulting missing keys."""
        defaults = cls()
        betas = data.get('adam_betas', defaults.adam_betas)
        return cls(
            epochs=int(data.get('epochs', defaults.epochs)),
            batch_size=int(data.get('batch_size', defaults.batch_size)),
            initial_lr=float(data.get('initial_lr', defaults.initial_lr)),
            l2_penalty=float(data.get('l2_penalty', defaults.l2_penalty)),
            schedule=_parse_enum(ScheduleKind, data.get('schedule', defaults.schedule)),
            num_cycles=int(data.get('num_cycles', defaults.num_cycles)),
            seed=int(data.get('seed', defaults.seed)),
            adam_betas=(float(betas[0]), float(betas[1])),
            adam_eps=float(data.get('adam_eps', defaults.adam_eps)),
        )


@dataclass
class ModelSpec:
    """Dense architecture: raw input width, hidden widths and class count."""

    input_dim: int = 256
    hidden: List[int] = field(default_factory=lambda: [160, 64])
    num_classes: int = 5

    def validate(self) -> None:
        """Raise ConfigurationError if any width is not positive."""
        if self.input_dim < 1:
            raise ConfigurationError(f"input_dim must be >= 1, got {self.input_dim}")
        if self.num_classes < 2:
            raise ConfigurationError(f"num_classes must be >= 2, got {self.num_classes}")
        if any(width < 1 for width in self.hidden):
            raise ConfigurationError(f"hidden widths must be >= 1, got {self.hidden}")

    def to_dict(self) -> Dict[str, Any]:
        """Convert to a JSON-compatible dictionary."""
        return {
            'input_dim': self.input_dim,
            'hidden': list(self.hidden),
            'num_classes': self.num_classes,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ModelSpec':
        """Create a ModelSpec from a dictionary."""
        defaults = cls()
        return cls(
            input_dim=int(data.get('input_dim', defaults.input_dim)),
            hidden=[int(w) for w in data.get('hidden', defaults.hidden)],
            num_classes=int(data.get('num_classes', defaults.num_classes)),
        )


@dataclass
class EnsembleConfig:
    """One ensemble to train: strategy, size, architecture and optimisation."""

    name: str = "single"
    strategy: Strategy = Strategy.SINGLE
    members: int = 1
    model: ModelSpec = field(default_factory=ModelSpec)
    train: TrainConfig = field(default_factory=TrainConfig)
    batch_fast_lr_multiplier: float = 0.5
    batch_fast_init: FastInit = FastInit.RANDOM_SIGN
    mimo_input_repetition: float = 0.0
    mimo_batch_repetition: int = 1

    def validate(self) -> None:
        """Raise ConfigurationError if the configuration is inconsistent."""
        if not self.name:
            raise ConfigurationError("ensemble name must not be empty")
        self.model.validate()
        self.train.validate()
        if self.strategy == Strategy.SINGLE and self.members != 1:
            raise ConfigurationError(f"{self.name}: single NN requires members == 1")
        if self.strategy != Strategy.SINGLE and self.members < 2:
            raise ConfigurationError(f"{self.name}: {self.strategy.value} requires members >= 2")
        if self.strategy == Strategy.SNAPSHOT:
            if self.train.schedule != ScheduleKind.COSINE_CYCLIC:
                raise ConfigurationError(f"{self.name}: snapshot requires the cosine-cyclic schedule")
            if self.train.num_cycles != self.members:
                raise ConfigurationError(
                    f"{self.name}: snapshot requires num_cycles == members "
                    f"({self.train.num_cycles} != {self.members})"
                )
        if not 0.0 < self.batch_fast_lr_multiplier <= 1.0:
            raise ConfigurationError(
                f"{self.name}: batch_fast_lr_multiplier must lie in (0, 1], "
                f"got {self.batch_fast_lr_multiplier}"
            )
        if not 0.0 <= self.mimo_input_repetition <= 1.0:
            raise ConfigurationError(
                f"{self.name}: mimo_input_repetition must lie in [0, 1], "
                f"got {self.mimo_input_repetition}"
            )
        if self.mimo_batch_repetition < 1:
            raise ConfigurationError(
                f"{self.name}: mimo_batch_repetition must be >= 1, got {self.mimo_batch_repetition}"
            )

    def with_seed(self, seed: int) -> 'EnsembleConfig':
        """Return a copy whose training seed is replaced."""
        return replace(self, train=replace(self.train, seed=seed))

    def to_dict(self) -> Dict[str, Any]:
        """Convert to a JSON-compatible dictionary."""
        return {
            'name': self.name,
            'strategy': self.strategy.value,
            'members': self.members,
            'model': self.model.to_dict(),
            'train': self.train.to_dict(),
            'batch_fast_lr_multiplier': self.batch_fast_lr_multiplier,
            'batch_fast_init': self.batch_fast_init.value,
            'mimo_input_repetition': self.mimo_input_repetition,
            'mimo_batch_repetition': self.mimo_batch_repetition,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'EnsembleConfig':
        """Create an EnsembleConfig from a dictionary."""
        defaults = cls()
        return cls(
            name=str(data.get('name', defaults.name)),
            strategy=_parse_enum(Strategy, data.get('strategy', defaults.strategy)),
            members=int(data.get('members', defaults.members)),
            model=ModelSpec.from_dict(data.get('model', {})),
            train=TrainConfig.from_dict(data.get('train', {})),
            batch_fast_lr_multiplier=float(
                data.get('batch_fast_lr_multiplier', defaults.batch_fast_lr_multiplier)
            ),
            batch_fast_init=_parse_enum(FastInit, data.get('batch_fast_init', defaults.batch_fast_init)),
            mimo_input_repetition=float(
                data.get('mimo_input_repetition', defaults.mimo_input_repetition)
            ),
            mimo_batch_repetition=int(
                data.get('mimo_batch_repetition', defaults.mimo_batch_repetition)
            ),
        )


@dataclass
class DatasetSpec:
    """Procedural shape-image dataset with disjoint ID and OOD class sets."""

    image_side: int = 16
    id_classes: List[str] = field(default_factory=lambda: list(DEFAULT_ID_SHAPES))
    ood_classes: List[str] = field(default_factory=lambda: list(DEFAULT_OOD_SHAPES))
    per_class_train: int = 400
    per_class_id_test: int = 100
    per_class_ood_test: int = 100
    noise_sigma: float = 0.05
    validation_fraction: float = 0.15
    seed: int = 0

    @property
    def input_dim(self) -> int:
        """Flattened image width."""
        return self.image_side * self.image_side

    @property
    def num_classes(self) -> int:
        """Number of ID classes."""
        return len(self.id_classes)

    def validate(self) -> None:
        """Raise ConfigurationError if the spec is unusable."""
        if self.image_side < 4:
            raise ConfigurationError(f"image_side must be >= 4, got {self.image_side}")
        if len(self.id_classes) < 2:
            raise ConfigurationError("at least two ID classes are required")
        if len(set(self.id_classes)) != len(self.id_classes):
            raise ConfigurationError(f"duplicate ID classes: {self.id_classes}")
        overlap = set(self.id_classes) & set(self.ood_classes)
        if overlap:
            raise ConfigurationError(f"ID and OOD classes overlap: {sorted(overlap)}")
        if self.per_class_train < 2:
            raise ConfigurationError("per_class_train must be >= 2")
        if self.per_class_id_test < 0 or self.per_class_ood_test < 0:
            raise ConfigurationError("test counts must be nonnegative")
        if self.noise_sigma < 0:
            raise ConfigurationError(f"noise_sigma must be nonnegative, got {self.noise_sigma}")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ConfigurationError(
                f"validation_fraction must lie in (0, 1), got {self.validation_fraction}"
            )

    def to_dict(self) -> Dict[str, Any]:
        """Convert to a JSON-compatible dictionary."""
        return {
            'image_side': self.image_side,
            'id_classes': list(self.id_classes),
            'ood_classes': list(self.ood_classes),
            'per_class_train': self.per_class_train,
            'per_class_id_test': self.per_class_id_test,
            'per_class_ood_test': self.per_class_ood_test,
            'noise_sigma': self.noise_sigma,
            'validation_fraction': self.validation_fraction,
            'seed': self.seed,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'DatasetSpec':
        """Create a DatasetSpec from a dictionary."""
        defaults = cls()
        return cls(
            image_side=int(data.get('image_side', defaults.image_side)),
            id_classes=[str(k) for k in data.get('id_classes', defaults.id_classes)],
            ood_classes=[str(k) for k in data.get('ood_classes', defaults.ood_classes)],
            per_class_train=int(data.get('per_class_train', defaults.per_class_train)),
            per_class_id_test=int(data.get('per_class_id_test', defaults.per_class_id_test)),
            per_class_ood_test=int(data.get('per_class_ood_test', defaults.per_class_ood_test)),
            noise_sigma=float(data.get('noise_sigma', defaults.noise_sigma)),
            validation_fraction=float(data.get('validation_fraction', defaults.validation_fraction)),
            seed=int(data.get('seed', defaults.seed)),
        )


def default_roster(dataset: DatasetSpec, base_epochs: int = 24) -> List[EnsembleConfig]:
    """
    Build the desk-scale model roster: single, deep, snapshot, batch and MIMO.

    Batch and MIMO ensembles get 50% more epochs because they converge slower.

    Args:
        dataset: Dataset the models are trained on
        base_epochs: Epochs for single, deep and snapshot models

    Returns:
        List of EnsembleConfig instances
    """
    model = ModelSpec(input_dim=dataset.input_dim, hidden=[160, 64], num_classes=dataset.num_classes)
    long_epochs = base_epochs + base_epochs // 2

    def train(epochs: int, lr: float, l2: float, cycles: int = 0) -> TrainConfig:
        if cycles:
            return TrainConfig(epochs=epochs, initial_lr=lr, l2_penalty=l2,
                               schedule=ScheduleKind.COSINE_CYCLIC, num_cycles=cycles)
        return TrainConfig(epochs=epochs, initial_lr=lr, l2_penalty=l2)

    roster = [EnsembleConfig("single", Strategy.SINGLE, 1, copy.deepcopy(model), train(base_epochs, 3e-3, 3e-4))]
    for m in (4, 8):
        roster.append(EnsembleConfig(f"deep_m{m}", Strategy.DEEP, m, copy.deepcopy(model),
                                     train(base_epochs, 3e-3, 3e-4)))
    for m in (4, 6, 8):
        roster.append(EnsembleConfig(f"snapshot_m{m}", Strategy.SNAPSHOT, m, copy.deepcopy(model),
                                     train(base_epochs, 5e-3, 2e-4, cycles=m)))
    for m, multiplier in ((4, 0.49), (8, 0.39)):
        roster.append(EnsembleConfig(f"batch_m{m}", Strategy.BATCH, m, copy.deepcopy(model),
                                     train(long_epochs, 2e-3, 1.5e-4),
                                     batch_fast_lr_multiplier=multiplier))
    for m, rho in ((3, 0.3), (4, 0.8)):
        roster.append(EnsembleConfig(f"mimo_m{m}", Strategy.MIMO, m, copy.deepcopy(model),
                                     train(long_epochs, 3e-3, 1.8e-4),
                                     mimo_input_repetition=rho))
    return roster


@dataclass
class ExperimentConfig:
    """A full experiment: dataset, model roster, seeds and reporting options."""

    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    models: List[EnsembleConfig] = field(default_factory=list)
    seeds: List[int] = field(default_factory=lambda: [0, 1, 2, 3, 4])
    betas: List[float] = field(default_factory=lambda: [0.25, 0.5, 1.0, 2.0, 4.0])
    cost_weights: Tuple[float, float, float] = (0.7, 0.2, 0.1)
    n_thresholds: int = 201
    histogram_bins: int = 20
    eval_repeats: int = 3
    grid: Dict[str, List[Any]] = field(default_factory=dict)

    # Execution settings (not part of the config hash)
    output_dir: str = "results"
    workers: int = 1
    exclusive_timing: bool = False
    log_level: str = "INFO"

    @classmethod
    def default(cls) -> 'ExperimentConfig':
        """Create the default desk-scale experiment."""
        dataset = DatasetSpec()
        return cls(dataset=dataset, models=default_roster(dataset))

    def validate(self) -> None:
        """Raise ConfigurationError if the experiment cannot run."""
        self.dataset.validate()
        if not self.models:
            raise ConfigurationError("at least one model is required")
        names = [m.name for m in self.models]
        if len(set(names)) != len(names):
            raise ConfigurationError(f"model names must be unique: {names}")
        for model in self.models:
            model.validate()
            if model.model.num_classes != self.dataset.num_classes:
                raise ConfigurationError(
                    f"{model.name}: num_classes {model.model.num_classes} != "
                    f"dataset ID classes {self.dataset.num_classes}"
                )
            if model.model.input_dim != self.dataset.input_dim:
                raise ConfigurationError(
                    f"{model.name}: input_dim {model.model.input_dim} != "
                    f"dataset input width {self.dataset.input_dim}"
                )
        if not self.seeds:
            raise ConfigurationError("at least one seed is required")
        if any(beta <= 0 for beta in self.betas):
            raise ConfigurationError(f"betas must be positive, got {self.betas}")
        if abs(sum(self.cost_weights) - 1.0) > 1e-9:
            raise ConfigurationError(f"cost weights must sum to 1, got {self.cost_weights}")
        if self.n_thresholds < 2:
            raise ConfigurationError("n_thresholds must be >= 2")
        if self.histogram_bins < 1:
            raise ConfigurationError("histogram_bins must be >= 1")
        if self.eval_repeats < 1:
            raise ConfigurationError("eval_repeats must be >= 1")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")

    def model_by_name(self, name: str) -> EnsembleConfig:
        """Look up a roster entry by name."""
        for model in self.models:
            if model.name == name:
                return model
        raise ConfigurationError(f"unknown model: {name}")

    def config_hash(self) -> str:
        """
        Stable hash of the experiment-defining fields.

        Returns:
            First 16 hex digits of the SHA-256 of the canonical JSON form
        """
        payload = {k: v for k, v in self.to_dict().items() if k not in HASH_EXCLUDED_FIELDS}
        canonical = json.dumps(payload, sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()[:16]

    def to_dict(self) -> Dict[str, Any]:
        """Convert to a JSON-compatible dictionary."""
        return {
            'dataset': self.dataset.to_dict(),
            'models': [m.to_dict() for m in self.models],
            'seeds': list(self.seeds),
            'betas': list(self.betas),
            'cost_weights': list(self.cost_weights),
            'n_thresholds': self.n_thresholds,
            'histogram_bins': self.histogram_bins,
            'eval_repeats': self.eval_repeats,
            'grid': {k: list(v) for k, v in self.grid.items()},
            'output_dir': self.output_dir,
            'workers': self.workers,
            'exclusive_timing': self.exclusive_timing,
            'log_level': self.log_level,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ExperimentConfig':
        """Create an ExperimentConfig from a dictionary."""
        defaults = cls()
        dataset = DatasetSpec.from_dict(data.get('dataset', {}))
        if 'models' in data:
            models = [EnsembleConfig.from_dict(m) for m in data['models']]
        else:
            models = default_roster(dataset)
        weights = data.get('cost_weights', defaults.cost_weights)
        return cls(
            dataset=dataset,
            models=models,
            seeds=[int(s) for s in data.get('seeds', defaults.seeds)],
            betas=[float(b) for b in data.get('betas', defaults.betas)],
            cost_weights=(float(weights[0]), float(weights[1]), float(weights[2])),
            n_thresholds=int(data.get('n_thresholds', defaults.n_thresholds)),
            histogram_bins=int(data.get('histogram_bins', defaults.histogram_bins)),
            eval_repeats=int(data.get('eval_repeats', defaults.eval_repeats)),
            grid={str(k): list(v) for k, v in data.get('grid', {}).items()},
            output_dir=str(data.get('output_dir', defaults.output_dir)),
            workers=int(data.get('workers', defaults.workers)),
            exclusive_timing=bool(data.get('exclusive_timing', defaults.exclusive_timing)),
            log_level=str(data.get('log_level', defaults.log_level)),
        )

    def save_to_file(self, config_path: Path) -> None:
        """
        Save configuration to a JSON file.

        Args:
            config_path: Destination path
        """
        config_path.parent.mkdir(parents=True, exist_ok=True)
        with open(config_path, 'w', encoding='utf-8') as f:
            json.dump(self.to_dict(), f, indent=2, ensure_ascii=False)

    @classmethod
    def load_from_file(cls, config_path: Optional[Path] = None) -> 'ExperimentConfig':
        """
        Load configuration from a JSON file.

        Args:
            config_path: Path to config file; None gives the default experiment

        Returns:
            ExperimentConfig instance
        """
        if config_path is None:
            return cls.default()
        if not config_path.exists():
            raise ConfigurationError(f"Config file not found: {config_path}")
        try:
            with open(config_path, 'r', encoding='utf-8') as f:
                config_dict = json.load(f)
            return cls.from_dict(config_dict)
        except (json.JSONDecodeError, KeyError, TypeError, ValueError, IndexError) as e:
            raise ConfigurationError(f"Could not load config file {config_path}: {e}") from e


def _parse_enum(enum_cls: Any, value: Any) -> Any:
    """Convert a stored string into the given enum, with a configuration error on failure."""
    if isinstance(value, enum_cls):
        return value
    try:
        return enum_cls(value)
    except ValueError as e:
        allowed = ", ".join(member.value for member in enum_cls)
        raise ConfigurationError(f"Invalid {enum_cls.__name__} '{value}' (expected one of: {allowed})") from e
