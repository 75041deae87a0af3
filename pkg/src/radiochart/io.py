"""Shared helpers for the on-disk formats (raw little-endian blobs + JSON)."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np


def write_raw(path, array, dtype):
    """Write an array as a raw little-endian blob, row-major."""
    np.ascontiguousarray(array).astype(dtype).tofile(path)


def read_raw(path, dtype, shape):
    flat = np.fromfile(path, dtype=dtype)
    expected = int(np.prod(shape))
    if flat.size != expected:
        raise ValueError(
            f"{path}: expected {expected} values for shape {tuple(shape)}, found {flat.size}"
        )
    return flat.reshape(shape)


def write_f32(path, array):
    write_raw(path, array, "<f4")


def write_f64(path, array):
    write_raw(path, array, "<f8")


def read_f32(path, shape):
    return read_raw(path, "<f4", shape)


def read_f64(path, shape):
    return read_raw(path, "<f8", shape)


def write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_json(path):
    return json.loads(Path(path).read_text())


def sha256_of_files(paths) -> str:
    """Stable content hash over a sequence of files (order matters)."""
    h = hashlib.sha256()
    for p in paths:
        h.update(Path(p).read_bytes())
    return h.hexdigest()
