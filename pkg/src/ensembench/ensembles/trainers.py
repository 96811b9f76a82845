"""
Training entry points for every ensemble strategy.

Each trainer takes an EnsembleConfig and a SplitDataset and returns an
EnsemblePredictor. All randomness flows from config.train.seed.
"""

from pathlib import Path
from typing import Callable, Dict, Iterator, List, Optional, Tuple

import numpy as np

from ensembench.backend.exceptions import ConfigurationError
from ensembench.data.synth import SplitDataset, augment_flips, iterate_minibatches
from ensembench.ensembles.builders import build_network
from ensembench.ensembles.mimo import MimoSampler
from ensembench.ensembles.predictor import EnsemblePredictor
from ensembench.models.config import EnsembleConfig, Strategy
from ensembench.nn.losses import multi_head_cross_entropy, softmax_cross_entropy
from ensembench.nn.network import Network
from ensembench.nn.schedules import cycle_end_epochs
from ensembench.nn.tensor import Tensor
from ensembench.nn.training import BatchSource, TrainHistory, fit
from ensembench.utils.logging_config import get_logger

logger = get_logger(__name__)

MEMBER_SEED_STRIDE = 0x9E3779B9

Trainer = Callable[..., EnsemblePredictor]


def member_seed(base_seed: int, member: int) -> int:
    """Seed of deep-ensemble member i: base + i * 0x9E3779B9 (mod 2**64)."""
    return (base_seed + member * MEMBER_SEED_STRIDE) % (1 << 64)


def _require(config: EnsembleConfig, strategy: Strategy) -> None:
    config.validate()
    if config.strategy != strategy:
        raise ConfigurationError(
            f"{config.name}: expected strategy {strategy.value}, got {config.strategy.value}"
        )


def _plain_batches(dataset: SplitDataset, batch_size: int, augment: bool) -> BatchSource:
    def batches(rng: np.random.Generator) -> Iterator[Tuple[Tensor, np.ndarray]]:
        return iterate_minibatches(dataset.train_x, dataset.train_y, batch_size, rng,
                                   side=dataset.image_side, augment=augment)
    return batches


def _train_plain(config: EnsembleConfig, dataset: SplitDataset, seed: int,
                 augment: bool) -> Tuple[Network, TrainHistory]:
    rng = np.random.default_rng(seed)
    network = build_network(config.model, config.strategy, config.members, rng)
    history = fit(network, config.train, _plain_batches(dataset, config.train.batch_size, augment),
                  softmax_cross_entropy, rng)
    return network, history


def train_single(config: EnsembleConfig, dataset: SplitDataset, augment: bool = True) -> EnsemblePredictor:
    """Train the single-network baseline (M == 1)."""
    _require(config, Strategy.SINGLE)
    network, history = _train_plain(config, dataset, config.train.seed, augment)
    return EnsemblePredictor(Strategy.SINGLE, 1, config.model, [network], histories=[history])


def train_deep(config: EnsembleConfig, dataset: SplitDataset, augment: bool = True) -> EnsemblePredictor:
    """
    Train M independent networks.

    Member i is initialised and shuffled from member_seed(seed, i), so every
    member has its own weights and its own minibatch order.
    """
    _require(config, Strategy.DEEP)
    networks: List[Network] = []
    histories: List[TrainHistory] = []
    for i in range(config.members):
        logger.info(f"{config.name}: training member {i + 1}/{config.members}")
        network, history = _train_plain(config, dataset, member_seed(config.train.seed, i), augment)
        networks.append(network)
        histories.append(history)
    return EnsemblePredictor(Strategy.DEEP, config.members, config.model, networks, histories=histories)


def train_snapshot(
    config: EnsembleConfig,
    dataset: SplitDataset,
    augment: bool = True,
    snapshot_dir: Optional[Path] = None,
) -> EnsemblePredictor:
    """
    Train one network under the cyclic schedule and harvest a snapshot at the
    end of every cycle.

    Args:
        config: Snapshot configuration (num_cycles == members)
        dataset: Training data
        augment: Random flips on training batches
        snapshot_dir: When given, snapshots are written there as they are
            taken and read back once training is done

    Returns:
        Predictor holding the M snapshots in harvest order
    """
    _require(config, Strategy.SNAPSHOT)
    from ensembench.backend import persistence

    ends = set(cycle_end_epochs(config.train.epochs, config.train.num_cycles))
    snapshots: List[Dict[str, Tensor]] = []
    stored: List[Tuple[Path, List[Dict]]] = []

    def harvest(epoch: int, network: Network) -> None:
        if epoch not in ends:
            return
        state = network.state()
        if snapshot_dir is None:
            snapshots.append(state)
        else:
            path = snapshot_dir / f"snapshot_{len(stored)}.bin"
            stored.append((path, persistence.save_parameters(state, path)))
        logger.debug(f"{config.name}: snapshot taken at epoch {epoch}")

    rng = np.random.default_rng(config.train.seed)
    network = build_network(config.model, Strategy.SNAPSHOT, config.members, rng)
    history = fit(network, config.train, _plain_batches(dataset, config.train.batch_size, augment),
                  softmax_cross_entropy, rng, on_epoch_end=harvest)

    if snapshot_dir is not None:
        snapshots = [persistence.load_parameters(path, entries) for path, entries in stored]
    members = []
    for state in snapshots:
        member = build_network(config.model, Strategy.SNAPSHOT, config.members)
        member.load_state(state)
        members.append(member)
    return EnsemblePredictor(Strategy.SNAPSHOT, len(members), config.model, members, histories=[history])


def train_batch_ensemble(config: EnsembleConfig, dataset: SplitDataset,
                         augment: bool = True) -> EnsemblePredictor:
    """
    Train a batch ensemble.

    Every minibatch is tiled M times so member i sees copy i; the loss is the
    mean cross-entropy over the tiled batch.
    """
    _require(config, Strategy.BATCH)
    members = config.members
    rng = np.random.default_rng(config.train.seed)
    network = build_network(config.model, Strategy.BATCH, members, rng,
                            config.batch_fast_init, config.batch_fast_lr_multiplier)
    plain = _plain_batches(dataset, config.train.batch_size, augment)

    def tiled(rng: np.random.Generator) -> Iterator[Tuple[Tensor, np.ndarray]]:
        for inputs, labels in plain(rng):
            yield np.tile(inputs, (members, 1)), np.tile(labels, members)

    history = fit(network, config.train, tiled, softmax_cross_entropy, rng)
    return EnsemblePredictor(Strategy.BATCH, members, config.model, [network], histories=[history])


def train_mimo(config: EnsembleConfig, dataset: SplitDataset, augment: bool = True) -> EnsemblePredictor:
    """
    Train a MIMO network.

    Each row concatenates M training images; head m is scored on the label of
    slot m and the head losses are summed.
    """
    _require(config, Strategy.MIMO)
    heads = config.members
    rng = np.random.default_rng(config.train.seed)
    network = build_network(config.model, Strategy.MIMO, heads, rng)
    sampler = MimoSampler(len(dataset.train_y), heads, config.train.batch_size,
                          config.mimo_input_repetition, config.mimo_batch_repetition)

    def batches(rng: np.random.Generator) -> Iterator[Tuple[Tensor, np.ndarray]]:
        for index in sampler.epoch(rng):
            inputs = dataset.train_x[index].reshape(len(index), -1)
            if augment:
                inputs = augment_flips(inputs, dataset.image_side, rng)
            yield inputs, dataset.train_y[index]

    def loss(logits: Tensor, labels: np.ndarray) -> Tuple[float, Tensor]:
        return multi_head_cross_entropy(logits, labels, heads)

    history = fit(network, config.train, batches, loss, rng)
    return EnsemblePredictor(Strategy.MIMO, heads, config.model, [network], histories=[history])


TRAINERS: Dict[Strategy, Trainer] = {
    Strategy.SINGLE: train_single,
    Strategy.DEEP: train_deep,
    Strategy.SNAPSHOT: train_snapshot,
    Strategy.BATCH: train_batch_ensemble,
    Strategy.MIMO: train_mimo,
}


def train_ensemble(config: EnsembleConfig, dataset: SplitDataset, augment: bool = True,
                   work_dir: Optional[Path] = None) -> EnsemblePredictor:
    """
    Train any ensemble by dispatching on its strategy.

    Args:
        config: Ensemble configuration
        dataset: Training data
        augment: Random flips on training batches
        work_dir: Scratch directory; snapshot ensembles keep their snapshots
            there between cycles instead of in memory

    Returns:
        Trained predictor
    """
    logger.info(f"Training {config.name} ({config.strategy.value}, M={config.members}, "
                f"seed={config.train.seed})")
    if config.strategy == Strategy.SNAPSHOT and work_dir is not None:
        return train_snapshot(config, dataset, augment=augment, snapshot_dir=work_dir)
    return TRAINERS[config.strategy](config, dataset, augment=augment)
