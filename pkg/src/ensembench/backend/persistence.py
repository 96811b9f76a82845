"""
Binary persistence for parameters, predictors and datasets.

Parameters are stored as flat little-endian float64 files described by a JSON
shape manifest. Datasets use a single container: magic bytes, a length-prefixed
JSON header (spec, counts, block layout, SHA-256 checksum) and the raw blocks.
Round trips are bit-exact.
"""

import hashlib
import json
import struct
from pathlib import Path
from typing import Any, Dict, List, Tuple

import numpy as np

from ensembench.backend.exceptions import SerializationError
from ensembench.data.synth import SplitDataset
from ensembench.ensembles.builders import build_network
from ensembench.ensembles.predictor import EnsemblePredictor
from ensembench.models.config import DatasetSpec, ModelSpec, Strategy
from ensembench.nn.tensor import Tensor
from ensembench.utils.logging_config import get_logger

logger = get_logger(__name__)

MANIFEST_NAME = "manifest.json"
PREDICTOR_FORMAT = 1
DATASET_MAGIC = b"ENSDATA1"
DATASET_BLOCKS: Tuple[Tuple[str, str], ...] = (
    ("train_x", "<f8"),
    ("train_y", "<i8"),
    ("val_x", "<f8"),
    ("val_y", "<i8"),
    ("id_test_x", "<f8"),
    ("id_test_y", "<i8"),
    ("ood_test_x", "<f8"),
    ("ood_test_kind", "<i8"),
)


def save_parameters(state: Dict[str, Tensor], path: Path) -> List[Dict[str, Any]]:
    """
    Write a parameter state as one flat little-endian float64 file.

    Args:
        state: Arrays keyed by qualified parameter name
        path: Destination file

    Returns:
        Manifest entries: name, shape and element offset of each array
    """
    entries = []
    offset = 0
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'wb') as f:
        for name, array in state.items():
            data = np.ascontiguousarray(array, dtype='<f8')
            f.write(data.tobytes())
            entries.append({'name': name, 'shape': list(data.shape), 'offset': offset})
            offset += int(data.size)
    return entries


def load_parameters(path: Path, entries: List[Dict[str, Any]]) -> Dict[str, Tensor]:
    """
    Read a parameter file written by save_parameters.

    Raises:
        SerializationError: If the file size disagrees with the manifest
    """
    try:
        flat = np.fromfile(path, dtype='<f8')
    except OSError as e:
        raise SerializationError(f"Could not read parameters from {path}: {e}") from e
    expected = sum(int(np.prod(entry['shape'], dtype=np.int64)) for entry in entries)
    if flat.size != expected:
        raise SerializationError(f"{path}: holds {flat.size} values, manifest expects {expected}")
    state = {}
    for entry in entries:
        size = int(np.prod(entry['shape'], dtype=np.int64))
        start = int(entry['offset'])
        state[entry['name']] = flat[start:start + size].astype(np.float64).reshape(entry['shape'])
    return state


def save_predictor(predictor: EnsemblePredictor, directory: Path) -> Path:
    """
    Save a predictor as a JSON manifest plus one parameter file per network.

    Args:
        predictor: Trained predictor
        directory: Target directory, created if needed

    Returns:
        Path of the manifest
    """
    directory.mkdir(parents=True, exist_ok=True)
    networks = []
    for i, network in enumerate(predictor.networks):
        filename = f"member_{i}.bin"
        tensors = save_parameters(network.state(), directory / filename)
        networks.append({'file': filename, 'tensors': tensors})
    manifest = {
        'format': PREDICTOR_FORMAT,
        'strategy': predictor.strategy.value,
        'members': predictor.members,
        'model': predictor.model.to_dict(),
        'config_hash': predictor.config_hash,
        'dtype': 'float64',
        'byte_order': 'little',
        'networks': networks,
    }
    manifest_path = directory / MANIFEST_NAME
    with open(manifest_path, 'w', encoding='utf-8') as f:
        json.dump(manifest, f, indent=2)
    logger.debug(f"Saved {predictor.strategy.value} predictor to {directory}")
    return manifest_path


def load_predictor(directory: Path) -> EnsemblePredictor:
    """
    Load a predictor saved by save_predictor.

    Raises:
        SerializationError: If the manifest is missing or inconsistent
    """
    manifest_path = directory / MANIFEST_NAME
    try:
        with open(manifest_path, 'r', encoding='utf-8') as f:
            manifest = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise SerializationError(f"Could not read predictor manifest {manifest_path}: {e}") from e
    if manifest.get('format') != PREDICTOR_FORMAT:
        raise SerializationError(f"Unsupported predictor format: {manifest.get('format')}")

    try:
        strategy = Strategy(manifest['strategy'])
        members = int(manifest['members'])
        model = ModelSpec.from_dict(manifest['model'])
        networks = []
        for entry in manifest['networks']:
            network = build_network(model, strategy, members)
            network.load_state(load_parameters(directory / entry['file'], entry['tensors']))
            networks.append(network)
    except (KeyError, ValueError) as e:
        raise SerializationError(f"Invalid predictor manifest {manifest_path}: {e}") from e
    return EnsemblePredictor(strategy, members, model, networks, manifest.get('config_hash', ''))


def _dataset_blocks(dataset: SplitDataset) -> List[Tuple[str, np.ndarray]]:
    return [
        (name, np.ascontiguousarray(getattr(dataset, name), dtype=dtype))
        for name, dtype in DATASET_BLOCKS
    ]


def save_dataset(dataset: SplitDataset, path: Path, config_hash: str = "") -> None:
    """
    Export a dataset as a single binary container.

    Args:
        dataset: Dataset to write
        path: Destination file
        config_hash: Hash of the experiment the dataset belongs to
    """
    blocks = _dataset_blocks(dataset)
    digest = hashlib.sha256()
    for _, array in blocks:
        digest.update(array.tobytes())
    header = {
        'spec': dataset.spec.to_dict(),
        'counts': dataset.counts(),
        'blocks': [{'name': name, 'dtype': array.dtype.str, 'shape': list(array.shape)}
                   for name, array in blocks],
        'checksum': digest.hexdigest(),
        'config_hash': config_hash,
    }
    encoded = json.dumps(header, sort_keys=True).encode('utf-8')
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'wb') as f:
        f.write(DATASET_MAGIC)
        f.write(struct.pack('<Q', len(encoded)))
        f.write(encoded)
        for _, array in blocks:
            f.write(array.tobytes())
    logger.info(f"Exported dataset to {path}")


def _read_container(path: Path) -> Tuple[bytes, Dict[str, Any], int]:
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise SerializationError(f"Could not read dataset {path}: {e}") from e
    if not raw.startswith(DATASET_MAGIC):
        raise SerializationError(f"{path} is not a dataset container")
    start = len(DATASET_MAGIC)
    if len(raw) < start + 8:
        raise SerializationError(f"{path}: truncated header")
    (header_len,) = struct.unpack('<Q', raw[start:start + 8])
    start += 8
    try:
        header = json.loads(raw[start:start + header_len].decode('utf-8'))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise SerializationError(f"{path}: corrupt header: {e}") from e
    return raw, header, start + header_len


def read_dataset_header(path: Path) -> Dict[str, Any]:
    """Return the JSON header of a dataset container (spec, counts, checksum, config_hash)."""
    return _read_container(path)[1]


def load_dataset(path: Path) -> SplitDataset:
    """
    Import a dataset container written by save_dataset.

    Raises:
        SerializationError: On bad magic, truncated data or checksum mismatch
    """
    raw, header, start = _read_container(path)

    digest = hashlib.sha256()
    arrays: Dict[str, np.ndarray] = {}
    for block in header['blocks']:
        dtype = np.dtype(block['dtype'])
        count = int(np.prod(block['shape'], dtype=np.int64))
        end = start + count * dtype.itemsize
        if end > len(raw):
            raise SerializationError(f"{path}: truncated block {block['name']}")
        chunk = raw[start:end]
        digest.update(chunk)
        native = np.float64 if dtype.kind == 'f' else np.int64
        arrays[block['name']] = np.frombuffer(chunk, dtype=dtype).astype(native).reshape(block['shape'])
        start = end
    if digest.hexdigest() != header['checksum']:
        raise SerializationError(f"{path}: checksum mismatch")

    return SplitDataset(spec=DatasetSpec.from_dict(header['spec']), **arrays)
