#!/usr/bin/env python3
"""
Repository for the RMG raw grid format.

Layout (little-endian): magic "RMG1" (4 bytes), width u32, height u32,
spacing f64, then width·height f64 values row-major. Round trips are
bit-exact on the payload.
"""

import struct
from pathlib import Path

import numpy as np

from app.core.errors import BadMagic, DimensionMismatch, MissingInput, TruncatedFile, ValueOutOfRange
from app.schemas.grid import Grid2D
from app.storage.file_guard import write_bytes_guarded

MAGIC = b"RMG1"
_HEADER = struct.Struct("<4sIId")
_VALUE_DTYPE = np.dtype("<f8")


def encode_rmg(grid: Grid2D) -> bytes:
    header = _HEADER.pack(MAGIC, grid.width, grid.height, grid.spacing_h)
    return header + grid.values.astype(_VALUE_DTYPE, copy=False).tobytes(order="C")


def decode_rmg(data: bytes, source: str = "<bytes>") -> Grid2D:
    if len(data) < len(MAGIC):
        raise TruncatedFile(f"{source}: {len(data)} bytes, too short for an RMG header")
    if data[: len(MAGIC)] != MAGIC:
        raise BadMagic(f"{source}: magic {data[:4]!r} != {MAGIC!r}")
    if len(data) < _HEADER.size:
        raise TruncatedFile(f"{source}: header needs {_HEADER.size} bytes, found {len(data)}")

    _, width, height, spacing = _HEADER.unpack_from(data)
    if width == 0 or height == 0:
        raise DimensionMismatch(f"{source}: zero dimension {width}x{height}")

    expected = width * height * _VALUE_DTYPE.itemsize
    payload = data[_HEADER.size:]
    if len(payload) < expected:
        raise TruncatedFile(f"{source}: payload has {len(payload)} bytes, header implies {expected}")
    if len(payload) > expected:
        raise DimensionMismatch(
            f"{source}: {len(payload) - expected} trailing bytes after a {width}x{height} payload"
        )

    values = np.frombuffer(payload, dtype=_VALUE_DTYPE).reshape(height, width)
    if not np.all(np.isfinite(values)):
        raise ValueOutOfRange(f"{source}: payload holds non-finite values")
    if not spacing > 0:
        raise ValueOutOfRange(f"{source}: spacing must be positive, got {spacing}")
    return Grid2D(width=width, height=height, spacing_h=spacing, values=values.astype(np.float64))


def write_rmg_repo(grid: Grid2D, path: Path, force: bool = False) -> Path:
    return write_bytes_guarded(Path(path), encode_rmg(grid), force=force)


def read_rmg_repo(path: Path) -> Grid2D:
    path = Path(path)
    if not path.is_file():
        raise MissingInput(f"{path} does not exist")
    return decode_rmg(path.read_bytes(), source=str(path))
