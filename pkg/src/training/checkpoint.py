"""
Checkpoint container.

Layout (all integers little-endian):

    magic        8 bytes   b"AMDCKPT\\0"
    version      uint32    CHECKPOINT_VERSION
    header_len   uint64    length of the JSON header in bytes
    header       JSON      {"config": ..., "manifest": [...], "metadata": ...}
    payload      raw       concatenated little-endian float64 tensors

Each manifest entry is {"name", "shape", "dtype": "<f8", "offset", "nbytes"}
with offsets relative to the payload start. Entries tile the payload exactly.
"""

import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from src.exceptions import CheckpointError, ConfigError, ShapeError
from src.model.amd import AmdModel
from src.model.config import ModelConfig

logger = logging.getLogger(__name__)

MAGIC = b"AMDCKPT\0"
CHECKPOINT_VERSION = 1
DTYPE = "<f8"
_PREAMBLE = struct.Struct("<8sIQ")


@dataclass
class Checkpoint:
    config: Dict[str, Any]
    params: Dict[str, np.ndarray]
    metadata: Dict[str, Any] = field(default_factory=dict)
    version: int = CHECKPOINT_VERSION


def save_checkpoint(model: AmdModel, path: str, metadata: Optional[Dict[str, Any]] = None) -> int:
    """Write the model to `path`. Returns the number of bytes written."""
    manifest: List[Dict[str, Any]] = []
    chunks: List[bytes] = []
    offset = 0
    for name, tensor in model.registry.items():
        raw = np.ascontiguousarray(tensor.data, dtype=DTYPE).tobytes()
        manifest.append({'name': name, 'shape': list(tensor.shape), 'dtype': DTYPE,
                         'offset': offset, 'nbytes': len(raw)})
        chunks.append(raw)
        offset += len(raw)

    meta = dict(model.metadata)
    meta.update(metadata or {})
    header = json.dumps({'config': model.config.to_dict(), 'manifest': manifest, 'metadata': meta},
                        sort_keys=True).encode('utf-8')

    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'wb') as f:
        f.write(_PREAMBLE.pack(MAGIC, CHECKPOINT_VERSION, len(header)))
        f.write(header)
        for chunk in chunks:
            f.write(chunk)
    size = _PREAMBLE.size + len(header) + offset
    logger.info(f"Saved checkpoint {path} ({len(manifest)} tensors, {size} bytes)")
    return size


def read_checkpoint(path: str) -> Checkpoint:
    """Parse and validate a checkpoint file without building a model."""
    try:
        blob = Path(path).read_bytes()
    except OSError as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from e

    if len(blob) < _PREAMBLE.size:
        raise CheckpointError(f"{path}: truncated before the header")
    magic, version, header_len = _PREAMBLE.unpack_from(blob)
    if magic != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint (bad magic {magic!r})")
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: checkpoint version {version}, expected {CHECKPOINT_VERSION}")
    start = _PREAMBLE.size + header_len
    if start > len(blob):
        raise CheckpointError(f"{path}: truncated inside the header")
    try:
        header = json.loads(blob[_PREAMBLE.size:start].decode('utf-8'))
        config, manifest = header['config'], header['manifest']
        metadata = header.get('metadata', {})
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError) as e:
        raise CheckpointError(f"{path}: malformed header: {e}") from e

    payload = memoryview(blob)[start:]
    params: Dict[str, np.ndarray] = {}
    expected = 0
    for entry in manifest:
        try:
            name, shape, dtype = entry['name'], tuple(int(s) for s in entry['shape']), entry['dtype']
            offset, nbytes = int(entry['offset']), int(entry['nbytes'])
        except (KeyError, TypeError, ValueError) as e:
            raise CheckpointError(f"{path}: malformed manifest entry {entry!r}") from e
        if dtype != DTYPE:
            raise CheckpointError(f"{path}: tensor '{name}' has dtype {dtype}, expected {DTYPE}")
        if offset != expected:
            raise CheckpointError(f"{path}: tensor '{name}' at offset {offset}, expected {expected}")
        if nbytes != int(np.prod(shape, dtype=np.int64)) * 8:
            raise CheckpointError(f"{path}: tensor '{name}' size {nbytes} bytes does not match shape {shape}")
        if offset + nbytes > len(payload):
            raise CheckpointError(f"{path}: payload truncated in tensor '{name}'")
        if name in params:
            raise CheckpointError(f"{path}: tensor '{name}' listed twice")
        params[name] = np.frombuffer(payload[offset:offset + nbytes], dtype=DTYPE).reshape(shape).astype(np.float64)
        expected = offset + nbytes
    if expected != len(payload):
        raise CheckpointError(f"{path}: manifest covers {expected} payload bytes, file has {len(payload)}")

    return Checkpoint(config=config, params=params, metadata=metadata, version=version)


def load_checkpoint(path: str) -> AmdModel:
    """Rebuild the model bit-exactly; raises CheckpointError and returns nothing on any inconsistency."""
    ckpt = read_checkpoint(path)
    try:
        config = ModelConfig.from_dict(ckpt.config)
        model = AmdModel(config)
        model.registry.load_state_dict(ckpt.params)
    except (ConfigError, ShapeError) as e:
        raise CheckpointError(f"{path}: {e}") from e
    model.metadata = ckpt.metadata
    logger.info(f"Loaded checkpoint {path} ({len(ckpt.params)} tensors)")
    return model
