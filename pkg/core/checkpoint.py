"""core.checkpoint

JSON checkpoints: parameters (and optionally optimizer moments) stored as
base64 little-endian float64 buffers keyed by module path. See
``docs/CHECKPOINT_FORMAT.md``.
"""

import base64
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np

from core.errors import CheckpointError
from core.logger import get_logger

logger = get_logger("checkpoint")

FORMAT = "toporeuse-checkpoint"
VERSION = 1
_WIRE_DTYPE = "<f8"


def encode_array(arr: np.ndarray) -> Dict[str, Any]:
    arr = np.ascontiguousarray(arr, dtype=_WIRE_DTYPE)
    return {
        "shape": list(arr.shape),
        "dtype": _WIRE_DTYPE,
        "data": base64.b64encode(arr.tobytes()).decode("ascii"),
    }


def decode_array(entry: Dict[str, Any]) -> np.ndarray:
    shape = tuple(int(n) for n in entry["shape"])
    raw = base64.b64decode(entry["data"])
    arr = np.frombuffer(raw, dtype=entry.get("dtype", _WIRE_DTYPE))
    if arr.size != int(np.prod(shape)):
        raise ValueError(f"buffer holds {arr.size} values, shape {list(shape)} needs {int(np.prod(shape))}")
    return arr.reshape(shape).astype(np.float64)


@dataclass
class Checkpoint:
    params: Dict[str, np.ndarray]
    config: Dict[str, Any] = field(default_factory=dict)
    step: int = 0
    optimizer: Optional[Dict[str, Any]] = None
    extra: Dict[str, Any] = field(default_factory=dict)


def _encode_optimizer(state: Dict[str, Any]) -> Dict[str, Any]:
    return {
        "t": int(state["t"]),
        "lr": float(state["lr"]),
        "m": {k: encode_array(v) for k, v in state["m"].items()},
        "v": {k: encode_array(v) for k, v in state["v"].items()},
    }


def _decode_optimizer(doc: Dict[str, Any]) -> Dict[str, Any]:
    return {
        "t": int(doc["t"]),
        "lr": float(doc["lr"]),
        "m": {k: decode_array(v) for k, v in doc["m"].items()},
        "v": {k: decode_array(v) for k, v in doc["v"].items()},
    }


def save_checkpoint(path, ckpt: Checkpoint) -> Path:
    """Write ``ckpt`` atomically (temp file + rename)."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    doc = {
        "format": FORMAT,
        "version": VERSION,
        "step": int(ckpt.step),
        "config": ckpt.config,
        "params": {name: encode_array(arr) for name, arr in ckpt.params.items()},
        "optimizer": _encode_optimizer(ckpt.optimizer) if ckpt.optimizer is not None else None,
        "extra": ckpt.extra,
    }
    tmp = p.with_suffix(p.suffix + ".tmp")
    try:
        with tmp.open("w", encoding="utf-8") as fh:
            json.dump(doc, fh)
        os.replace(tmp, p)
    except OSError as e:
        raise CheckpointError(str(p), f"cannot write checkpoint: {e}")
    logger.info(f"Saved checkpoint step={ckpt.step} ({len(ckpt.params)} tensors) to {p}")
    return p


def load_checkpoint(path) -> Checkpoint:
    p = Path(path)
    if not p.exists():
        raise CheckpointError(str(p), "checkpoint not found")
    try:
        with p.open("r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise CheckpointError(str(p), f"unreadable checkpoint: {e}")

    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise CheckpointError(str(p), "not a toporeuse checkpoint")
    if doc.get("version") != VERSION:
        raise CheckpointError(str(p), f"unsupported checkpoint version {doc.get('version')!r}")
    try:
        params = {name: decode_array(entry) for name, entry in doc["params"].items()}
        optimizer = _decode_optimizer(doc["optimizer"]) if doc.get("optimizer") else None
    except (KeyError, TypeError, ValueError) as e:
        raise CheckpointError(str(p), f"corrupt tensor entry: {e}")
    return Checkpoint(
        params=params,
        config=doc.get("config") or {},
        step=int(doc.get("step", 0)),
        optimizer=optimizer,
        extra=doc.get("extra") or {},
    )
