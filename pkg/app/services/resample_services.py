#!/usr/bin/env python3
# app/services/resample_services.py
"""
Low-resolution input construction and upsampling baselines.

All resamplers are separable: a per-axis weight matrix W (out × src) is built
once and applied as W_r · G · W_cᵀ. Integral sample locations carry a single
weight of exactly 1, so they reproduce source values bit for bit.
"""

from typing import Callable, Optional, Tuple, Union

import numpy as np

from app.core.errors import DimensionMismatch, IndivisibleStride, SourceTooSmall
from app.schemas.edge import EdgeParams
from app.schemas.grid import BinaryMask, Grid2D
from app.schemas.resample import SamplingSpec
from app.services.grid_services import amplitude, mask_to_grid, normalize_minmax
from app.services.helm_edge_services import k_edge_map

Size = Union[int, Tuple[int, int]]


def _as_shape(size: Size) -> Tuple[int, int]:
    if isinstance(size, int):
        return (size, size)
    rows, cols = size
    return (int(rows), int(cols))


# ── Sample coordinates and weights ────────────────────────────────────────────

def sample_coords(n_src: int, n_out: int, stride: Optional[int] = None) -> np.ndarray:
    """
    Continuous source coordinate of each output index.

    Default is align-corners, x_i = i·(n_src − 1)/(n_out − 1). With a stride the
    mapping is lattice-anchored, x_i = i / stride, clamped to the last sample.
    """
    idx = np.arange(n_out, dtype=np.float64)
    if stride is not None:
        return np.minimum(idx / stride, n_src - 1)
    if n_out == 1:
        return np.zeros(1)
    return idx * (n_src - 1) / (n_out - 1)


def bilinear_weights(n_src: int, n_out: int, stride: Optional[int] = None) -> np.ndarray:
    x = sample_coords(n_src, n_out, stride)
    p0 = np.minimum(np.floor(x).astype(np.int64), n_src - 1)
    frac = x - p0
    p1 = np.minimum(p0 + 1, n_src - 1)
    rows = np.arange(n_out)
    w = np.zeros((n_out, n_src))
    np.add.at(w, (rows, p0), 1.0 - frac)
    np.add.at(w, (rows, p1), frac)
    return w


def catmull_rom_weights(n_src: int, n_out: int, stride: Optional[int] = None) -> np.ndarray:
    """Catmull-Rom (a = −½) taps p−1 … p+2 with replicate borders."""
    x = sample_coords(n_src, n_out, stride)
    p = np.minimum(np.floor(x).astype(np.int64), n_src - 1)
    t = x - p
    t2, t3 = t * t, t * t * t
    taps = (
        (-1, 0.5 * (-t3 + 2.0 * t2 - t)),
        (0, 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0)),
        (1, 0.5 * (-3.0 * t3 + 4.0 * t2 + t)),
        (2, 0.5 * (t3 - t2)),
    )
    rows = np.arange(n_out)
    w = np.zeros((n_out, n_src))
    for offset, weight in taps:
        np.add.at(w, (rows, np.clip(p + offset, 0, n_src - 1)), weight)
    return w


def _apply_separable(g: Grid2D, w_rows: np.ndarray, w_cols: np.ndarray, spacing_h: float) -> Grid2D:
    return Grid2D.from_array(w_rows @ g.values @ w_cols.T, spacing_h=spacing_h)


# ── Downsampling ──────────────────────────────────────────────────────────────

def uniform_downsample(p: Grid2D, s: int) -> Grid2D:
    """P_LR(i, j) = P(s·i, s·j), anchored at the origin."""
    if s < 1:
        raise IndivisibleStride(f"stride must be a positive integer, got {s}")
    if p.height % s or p.width % s:
        raise IndivisibleStride(f"{p.height}x{p.width} grid is not divisible by stride {s}")
    return Grid2D.from_array(p.values[::s, ::s], spacing_h=p.spacing_h * s)


def bilinear_resample(k: Grid2D, n: Size) -> Grid2D:
    """Align-corners bilinear resampling of K onto an n×n (or rows×cols) grid."""
    rows, cols = _as_shape(n)
    if k.height < 2 or k.width < 2:
        raise SourceTooSmall(f"bilinear_resample needs a source of at least 2x2, got {k.height}x{k.width}")
    if rows < 2 or cols < 2 or rows > k.height or cols > k.width:
        raise SourceTooSmall(
            f"cannot resample a {k.height}x{k.width} source to {rows}x{cols} "
            "(need 2 <= n <= source size)"
        )
    spacing = k.spacing_h * (k.width - 1) / (cols - 1)
    return _apply_separable(
        k, bilinear_weights(k.height, rows), bilinear_weights(k.width, cols), spacing
    )


# ── Upsampling ────────────────────────────────────────────────────────────────

def _upsampled_spacing(g: Grid2D, cols: int, stride: Optional[int]) -> float:
    if stride is not None:
        return g.spacing_h / stride
    if cols == 1 or g.width == 1:
        return g.spacing_h
    return g.spacing_h * (g.width - 1) / (cols - 1)


def _check_upsample(g: Grid2D, rows: int, cols: int) -> None:
    if rows < g.height or cols < g.width:
        raise SourceTooSmall(f"cannot upsample {g.height}x{g.width} to smaller {rows}x{cols}")


def upsample_bilinear(g: Grid2D, size: Size, stride: Optional[int] = None) -> Grid2D:
    rows, cols = _as_shape(size)
    _check_upsample(g, rows, cols)
    if (rows, cols) == g.shape and stride in (None, 1):
        return g
    return _apply_separable(
        g,
        bilinear_weights(g.height, rows, stride),
        bilinear_weights(g.width, cols, stride),
        _upsampled_spacing(g, cols, stride),
    )


def upsample_bicubic(g: Grid2D, size: Size, stride: Optional[int] = None) -> Grid2D:
    """Catmull-Rom upsampling, clamped to the source min/max."""
    rows, cols = _as_shape(size)
    _check_upsample(g, rows, cols)
    if (rows, cols) == g.shape and stride in (None, 1):
        return g
    out = _apply_separable(
        g,
        catmull_rom_weights(g.height, rows, stride),
        catmull_rom_weights(g.width, cols, stride),
        _upsampled_spacing(g, cols, stride),
    )
    return out.with_values(np.clip(out.values, g.values.min(), g.values.max()))


# ── LR pair ───────────────────────────────────────────────────────────────────

def make_lr_pair(
    p: Grid2D,
    k: Optional[BinaryMask],
    s: int,
    realistic: bool = False,
    params: EdgeParams = EdgeParams(),
    extract: Optional[Callable[[Grid2D], BinaryMask]] = None,
) -> Tuple[Grid2D, Grid2D]:
    """
    Build (P_LR, K_LR), both min-max normalized.

    By default K_LR comes from the high-resolution K map (the idealized
    upper-bound setting). With realistic=True it is extracted from the
    bilinearly upsampled P_LR instead and k is ignored; extract picks the
    detector (K-edge of the amplitude when omitted).
    """
    p_lr, _ = normalize_minmax(uniform_downsample(p, s))
    lr_shape = (SamplingSpec.for_grid(p.height, s).lr_size_n, SamplingSpec.for_grid(p.width, s).lr_size_n)

    if realistic:
        lifted = upsample_bilinear(p_lr, p.shape, stride=s)
        k = extract(lifted) if extract is not None else k_edge_map(amplitude(lifted), params)
    elif k is None:
        k = BinaryMask.from_array(np.zeros(p.shape, dtype=np.uint8))

    if k.shape != p.shape:
        raise DimensionMismatch(f"K map {k.shape} does not match P {p.shape}")

    k_grid = mask_to_grid(k, p.spacing_h)
    if lr_shape == p.shape:
        k_lr_raw = k_grid
    else:
        k_lr_raw = bilinear_resample(k_grid, lr_shape)
    k_lr, _ = normalize_minmax(k_lr_raw)
    return p_lr, k_lr
