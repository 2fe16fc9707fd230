#!/usr/bin/env python3
# app/services/grid_services.py
"""Grid services: normalization, amplitude conversion and map I/O."""

from pathlib import Path
from typing import Tuple, Union

import numpy as np

from app.core.errors import NegativePower, ValueOutOfRange
from app.core.logging_config import logger
from app.schemas.grid import AmplitudeMap, BinaryMask, Grid2D, GridLike, RadioMap
import app.storage.pgm_repo as pgm_repo
import app.storage.rmg_repo as rmg_repo


# ── Normalization ─────────────────────────────────────────────────────────────

def normalize_minmax(g: Grid2D) -> Tuple[Grid2D, Tuple[float, float]]:
    """
    Linearly map g onto [0, 1].

    A constant grid maps to all zeros with bounds (min, min); callers detect
    the degenerate case from the bounds.
    """
    lo = float(g.values.min())
    hi = float(g.values.max())
    if hi == lo:
        return g.with_values(np.zeros(g.shape)), (lo, lo)
    return g.with_values((g.values - lo) / (hi - lo)), (lo, hi)


def denormalize(g: Grid2D, bounds: Tuple[float, float]) -> Grid2D:
    """Inverse of normalize_minmax when bounds[1] > bounds[0]."""
    lo, hi = bounds
    return g.with_values(g.values * (hi - lo) + lo)


def amplitude(power: Union[RadioMap, Grid2D]) -> AmplitudeMap:
    """A = √I elementwise."""
    grid = power.grid if isinstance(power, RadioMap) else power
    if grid.values.min() < 0.0:
        raise NegativePower(
            f"power map holds negative values (min {grid.values.min():.6g}); "
            "normalization upstream is corrupted"
        )
    return AmplitudeMap(grid=grid.with_values(np.sqrt(grid.values)))


# ── Mask conversions ──────────────────────────────────────────────────────────

def mask_to_grid(mask: BinaryMask, spacing_h: float = 1.0) -> Grid2D:
    return Grid2D(width=mask.width, height=mask.height, spacing_h=spacing_h,
                  values=mask.bits.astype(np.float64))


def grid_to_mask(g: Grid2D, threshold: float = 0.5) -> BinaryMask:
    """Cells with value >= threshold become 1."""
    return BinaryMask.from_array(g.values >= threshold)


# ── File I/O ──────────────────────────────────────────────────────────────────

def write_rmg(g: GridLike, path: Path, force: bool = False, spacing_h: float = 1.0) -> Path:
    """Write a grid (or a mask as 0.0/1.0 values) to the RMG raw format."""
    grid = mask_to_grid(g, spacing_h) if isinstance(g, BinaryMask) else g
    out = rmg_repo.write_rmg_repo(grid, Path(path), force=force)
    logger.debug(f"Wrote {grid.width}x{grid.height} RMG grid to {out}")
    return out


def read_rmg(path: Path) -> Grid2D:
    return rmg_repo.read_rmg_repo(Path(path))


def to_pixels(g: GridLike) -> np.ndarray:
    """8-bit pixels: round-half-up of 255·v for grids, {0, 1} → {0, 255} for masks."""
    if isinstance(g, BinaryMask):
        return (g.bits * 255).astype(np.uint8)
    v = g.values
    if v.min() < 0.0 or v.max() > 1.0:
        raise ValueOutOfRange(
            f"PGM export needs values in [0, 1], got [{v.min():.6g}, {v.max():.6g}]"
        )
    return np.floor(255.0 * v + 0.5).astype(np.uint8)


def write_pgm(g: GridLike, path: Path, force: bool = False) -> Path:
    return pgm_repo.write_pgm_repo(to_pixels(g), Path(path), force=force)
