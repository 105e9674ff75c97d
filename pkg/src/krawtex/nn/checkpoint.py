"""Binary checkpoint format.

Layout (all integers little-endian): magic bytes ``OTGK``, u32 format
version, u32 entry count, then per entry: u32 name length, UTF-8 name bytes,
u32 rank, u32 dims, raw little-endian float32 data; finally u64 step counter
and u64 seed. Save -> load -> save is byte-identical.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

__all__ = ["save_checkpoint", "load_checkpoint", "MAGIC", "FORMAT_VERSION"]

MAGIC = b"OTGK"
FORMAT_VERSION = 1


def save_checkpoint(
    path: str | Path,
    entries: dict[str, np.ndarray],
    step: int,
    seed: int,
) -> None:
    """Write entries in iteration order; values are stored as float32."""
    chunks = [MAGIC, struct.pack("<II", FORMAT_VERSION, len(entries))]
    for name, value in entries.items():
        raw = name.encode("utf-8")
        # asarray, not ascontiguousarray: the latter promotes 0-d to 1-d,
        # and tobytes() serializes in C order either way
        arr = np.asarray(value, dtype="<f4")
        chunks.append(struct.pack("<I", len(raw)))
        chunks.append(raw)
        chunks.append(struct.pack("<I", arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        chunks.append(arr.tobytes())
    chunks.append(struct.pack("<QQ", step, seed))
    Path(path).write_bytes(b"".join(chunks))


def load_checkpoint(path: str | Path) -> tuple[dict[str, np.ndarray], int, int]:
    """Read a checkpoint back; returns (entries, step, seed)."""
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise ValueError(f"{path}: not a checkpoint (bad magic {data[:4]!r})")
    version, count = struct.unpack_from("<II", data, 4)
    if version != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported format version {version}")
    offset = 12
    entries: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack_from("<I", data, offset)
        offset += 4
        name = data[offset : offset + name_len].decode("utf-8")
        offset += name_len
        (rank,) = struct.unpack_from("<I", data, offset)
        offset += 4
        shape = struct.unpack_from(f"<{rank}I", data, offset)
        offset += 4 * rank
        size = int(np.prod(shape)) if rank else 1
        arr = np.frombuffer(data, dtype="<f4", count=size, offset=offset).reshape(shape)
        offset += 4 * size
        entries[name] = arr.astype(np.float64)
    step, seed = struct.unpack_from("<QQ", data, offset)
    return entries, step, seed
