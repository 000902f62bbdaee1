"""Versioned model checkpoints: exact float64 round-trip via npz."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import DataError

FORMAT_VERSION = 1
_META_KEY = "__meta__"


def save_checkpoint(path: str | Path, kind: str, meta: dict, arrays: dict[str, np.ndarray]):
    """Write arrays plus a JSON header describing the model."""
    if _META_KEY in arrays:
        raise DataError(f"array name {_META_KEY!r} is reserved")
    header = {"format_version": FORMAT_VERSION, "kind": kind, "meta": meta}
    payload = {name: np.asarray(a, dtype=np.float64) for name, a in arrays.items()}
    payload[_META_KEY] = np.frombuffer(json.dumps(header, sort_keys=True).encode(), dtype=np.uint8)
    with open(path, "wb") as fh:
        np.savez(fh, **payload)


def load_checkpoint(path: str | Path) -> tuple[str, dict, dict[str, np.ndarray]]:
    """Return (kind, meta, arrays); raises DataError on bad version."""
    with np.load(path, allow_pickle=False) as data:
        if _META_KEY not in data:
            raise DataError(f"{path}: not a model checkpoint (missing header)")
        header = json.loads(bytes(data[_META_KEY].tobytes()).decode())
        if header.get("format_version") != FORMAT_VERSION:
            raise DataError(f"{path}: unsupported checkpoint version {header.get('format_version')}")
        arrays = {name: data[name] for name in data.files if name != _META_KEY}
    return header["kind"], header["meta"], arrays
