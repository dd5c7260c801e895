"""Checkpoint files.

A checkpoint is a numpy ``.npz`` archive.  Each parameter is stored under its
own name as a row-major float64 array (shape preserved).  The reserved entry
``__meta__`` holds a UTF-8 JSON object::

    {"format": "docmanip-checkpoint", "version": 1,
     "params": {name: [dim, ...], ...}, ...caller metadata...}

Loaders reject archives whose format tag or version differ.
"""
from __future__ import annotations

import io
import json
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .tensor import Tensor

FORMAT_TAG = "docmanip-checkpoint"
FORMAT_VERSION = 1


class CheckpointError(ValueError):
    pass


def save_checkpoint(path, params: Mapping[str, Tensor], meta: Mapping[str, Any] | None = None) -> None:
    header = dict(meta or {})
    header["format"] = FORMAT_TAG
    header["version"] = FORMAT_VERSION
    header["params"] = {k: list(p.shape) for k, p in params.items()}
    arrays = {k: np.ascontiguousarray(p.data, dtype=np.float64) for k, p in params.items()}
    if "__meta__" in arrays:
        raise CheckpointError("parameter name __meta__ is reserved")
    arrays["__meta__"] = np.frombuffer(json.dumps(header, sort_keys=True).encode("utf-8"), dtype=np.uint8)
    buf = io.BytesIO()
    np.savez(buf, **arrays)
    Path(path).write_bytes(buf.getvalue())


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], dict[str, Any]]:
    with np.load(path, allow_pickle=False) as z:
        if "__meta__" not in z.files:
            raise CheckpointError(f"{path}: missing __meta__ header")
        meta = json.loads(bytes(z["__meta__"]).decode("utf-8"))
        if meta.get("format") != FORMAT_TAG or meta.get("version") != FORMAT_VERSION:
            raise CheckpointError(f"{path}: unsupported checkpoint format {meta.get('format')!r} v{meta.get('version')!r}")
        arrays = {k: z[k] for k in meta["params"]}
    for k, shape in meta["params"].items():
        if list(arrays[k].shape) != shape:
            raise CheckpointError(f"{path}: parameter {k!r} has shape {arrays[k].shape}, header says {shape}")
    return arrays, meta
