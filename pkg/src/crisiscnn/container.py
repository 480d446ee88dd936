"""Versioned binary model container.

Layout (all integers little-endian)::

    b"CCNN" | u32 version | u64 meta_len | meta_len bytes of UTF-8 JSON
    then, until EOF, one section per tensor:
    u32 name_len | name | u32 rank | rank x u64 dims | float32 data (row-major)

The metadata JSON is written with sorted keys and no whitespace so a
save/load/save cycle is byte-identical.
"""
from __future__ import annotations

import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

MAGIC = b"CCNN"
VERSION = 1


class ContainerError(ValueError):
    pass


def dumps(meta: dict, tensors: dict[str, np.ndarray]) -> bytes:
    blob = json.dumps(meta, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")
    parts = [MAGIC, struct.pack("<IQ", VERSION, len(blob)), blob]
    for name, arr in tensors.items():
        arr = np.asarray(arr, dtype="<f4")  # ascontiguousarray would promote 0-d to 1-d
        raw = name.encode("utf-8")
        parts.append(struct.pack("<I", len(raw)) + raw)
        parts.append(struct.pack("<I", arr.ndim) + struct.pack(f"<{arr.ndim}Q", *arr.shape))
        parts.append(arr.tobytes(order="C"))
    return b"".join(parts)


def loads(data: bytes) -> tuple[dict, dict[str, np.ndarray]]:
    if data[:4] != MAGIC:
        raise ContainerError("not a model container")
    pos = 4

    def take(n: int) -> bytes:
        nonlocal pos
        if pos + n > len(data):
            raise ContainerError("model container is truncated")
        chunk = data[pos:pos + n]
        pos += n
        return chunk

    version, meta_len = struct.unpack("<IQ", take(12))
    if version != VERSION:
        raise ContainerError(f"unsupported container version {version}")
    try:
        meta = json.loads(take(meta_len).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ContainerError(f"corrupt container metadata: {exc}") from None
    tensors: dict[str, np.ndarray] = {}
    while pos < len(data):
        (name_len,) = struct.unpack("<I", take(4))
        name = take(name_len).decode("utf-8")
        (rank,) = struct.unpack("<I", take(4))
        dims = struct.unpack(f"<{rank}Q", take(8 * rank))
        count = int(np.prod(dims)) if rank else 1
        arr = np.frombuffer(take(4 * count), dtype="<f4").reshape(dims)
        tensors[name] = arr.astype(np.float64)
    return meta, tensors


def atomic_write_bytes(path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save(path, meta: dict, tensors: dict[str, np.ndarray]) -> None:
    atomic_write_bytes(path, dumps(meta, tensors))


def load(path) -> tuple[dict, dict[str, np.ndarray]]:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise ContainerError(f"cannot read model file {path}: {exc.strerror}") from None
    return loads(data)
