#!/usr/bin/env python3
"""Repository for 8-bit binary PGM (P5) exports, for human inspection only."""

from pathlib import Path

import numpy as np

from app.storage.file_guard import write_bytes_guarded


def encode_pgm(pixels: np.ndarray) -> bytes:
    """pixels: 2D uint8 array (height, width)."""
    height, width = pixels.shape
    header = f"P5\n{width} {height}\n255\n".encode("ascii")
    return header + np.ascontiguousarray(pixels, dtype=np.uint8).tobytes()


def write_pgm_repo(pixels: np.ndarray, path: Path, force: bool = False) -> Path:
    return write_bytes_guarded(Path(path), encode_pgm(pixels), force=force)
