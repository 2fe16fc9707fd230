#!/usr/bin/env python3
# app/services/helm_edge_services.py
"""
Helmholtz-curvature edge extraction and the classical comparison baselines.

Every stencil uses replicate padding: an out-of-range neighbour takes the
border value, so outputs keep the input's full size.
"""

import math
from typing import NamedTuple, Union

import numpy as np
from scipy import ndimage

from app.core.errors import BadThresholds, GridTooSmall
from app.schemas.edge import CurvatureKind, CurvatureMap, EdgeParams
from app.schemas.grid import AmplitudeMap, BinaryMask, Grid2D

# Clockwise from top-left: (di, dj)
_LBP_OFFSETS = ((-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1))

_EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


def _grid_of(a: Union[AmplitudeMap, Grid2D]) -> Grid2D:
    return a.grid if isinstance(a, AmplitudeMap) else a


def _require_min_size(g: Grid2D, minimum: int, op: str) -> None:
    if g.width < minimum or g.height < minimum:
        raise GridTooSmall(f"{op} needs at least {minimum}x{minimum} cells, got {g.width}x{g.height}")


def _laplacian_values(v: np.ndarray, h: float) -> np.ndarray:
    p = np.pad(v, 1, mode="edge")
    return (p[2:, 1:-1] + p[:-2, 1:-1] + p[1:-1, 2:] + p[1:-1, :-2] - 4.0 * v) / (h * h)


# ── Helmholtz curvature ───────────────────────────────────────────────────────

def laplacian5(a: Union[AmplitudeMap, Grid2D]) -> Grid2D:
    """5-point finite-difference Laplacian with replicate borders."""
    g = _grid_of(a)
    _require_min_size(g, 3, "laplacian5")
    return g.with_values(_laplacian_values(g.values, g.spacing_h))


def k_eff_sq(a: AmplitudeMap, params: EdgeParams = EdgeParams()) -> CurvatureMap:
    """k_eff² = −∇²A / (A + ε)."""
    g = _grid_of(a)
    lap = laplacian5(g).values
    return CurvatureMap(
        grid=g.with_values(-lap / (g.values + params.epsilon)),
        kind=CurvatureKind.EFFECTIVE_WAVENUMBER_SQ,
    )


def k_log(a: AmplitudeMap, params: EdgeParams = EdgeParams()) -> CurvatureMap:
    """k_log = −∇² log(A + ε); invariant to global gain where A ≫ ε."""
    g = _grid_of(a)
    _require_min_size(g, 3, "k_log")
    log_a = np.log(g.values + params.epsilon)
    return CurvatureMap(
        grid=g.with_values(-_laplacian_values(log_a, g.spacing_h)),
        kind=CurvatureKind.LOG_CURVATURE,
    )


def k_edge_map(a: AmplitudeMap, params: EdgeParams = EdgeParams()) -> BinaryMask:
    """
    Binary K map: 1 where k_eff² < 0, ties at 0 map to 0.

    A + ε > 0, so the sign of k_eff² is the opposite of the Laplacian's sign;
    the indicator is read off the Laplacian directly, which stays exact where
    the division would underflow to zero.
    """
    lap = laplacian5(_grid_of(a)).values
    bits = lap < 0.0 if params.flip_sign else lap > 0.0
    return BinaryMask.from_array(bits)


# ── Canny baseline ────────────────────────────────────────────────────────────

class CannyStages(NamedTuple):
    blurred: np.ndarray
    magnitude: np.ndarray
    suppressed: np.ndarray
    strong: np.ndarray
    weak: np.ndarray
    edges: np.ndarray


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Normalized 1D Gaussian with radius ⌈3σ⌉."""
    radius = int(math.ceil(3.0 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def _non_maximum_suppression(gx: np.ndarray, gy: np.ndarray, mag: np.ndarray) -> np.ndarray:
    """
    4-way quantized NMS. A cell survives if it is >= its neighbour against the
    gradient and > its neighbour along it, so plateaus keep a single pixel.
    """
    height, width = mag.shape
    angle = np.rad2deg(np.arctan2(gy, gx)) % 180.0
    padded = np.pad(mag, 1, mode="constant")

    bins = (
        ((angle < 22.5) | (angle >= 157.5), (0, 1)),
        ((angle >= 22.5) & (angle < 67.5), (1, 1)),
        ((angle >= 67.5) & (angle < 112.5), (1, 0)),
        ((angle >= 112.5) & (angle < 157.5), (1, -1)),
    )
    keep = np.zeros(mag.shape, dtype=bool)
    for selector, (di, dj) in bins:
        ahead = padded[1 + di:1 + di + height, 1 + dj:1 + dj + width]
        behind = padded[1 - di:1 - di + height, 1 - dj:1 - dj + width]
        keep |= selector & (mag >= behind) & (mag > ahead)
    keep &= mag > 0.0
    return np.where(keep, mag, 0.0)


def canny_stages(g: Grid2D, params: EdgeParams = EdgeParams()) -> CannyStages:
    """Run the fixed Canny pipeline and return every intermediate stage."""
    if not params.canny_low < params.canny_high:
        raise BadThresholds(
            f"canny_low ({params.canny_low}) must be < canny_high ({params.canny_high})"
        )

    kernel = gaussian_kernel(params.canny_sigma)
    blurred = ndimage.correlate1d(g.values, kernel, axis=0, mode="nearest")
    blurred = ndimage.correlate1d(blurred, kernel, axis=1, mode="nearest")

    gx = ndimage.sobel(blurred, axis=1, mode="nearest")
    gy = ndimage.sobel(blurred, axis=0, mode="nearest")
    magnitude = np.hypot(gx, gy)
    suppressed = _non_maximum_suppression(gx, gy, magnitude)

    strong = suppressed >= params.canny_high
    weak = suppressed >= params.canny_low
    labels, _ = ndimage.label(weak, structure=_EIGHT_CONNECTED)
    seeds = np.unique(labels[strong])
    edges = np.isin(labels, seeds[seeds > 0])
    return CannyStages(blurred, magnitude, suppressed, strong, weak, edges)


def canny(g: Grid2D, params: EdgeParams = EdgeParams()) -> BinaryMask:
    """Gaussian blur → Sobel → NMS → 8-connected double-threshold hysteresis."""
    return BinaryMask.from_array(canny_stages(g, params).edges)


# ── LBP baseline ──────────────────────────────────────────────────────────────

def _lbp_bits(g: Grid2D) -> np.ndarray:
    """(8, H-2, W-2) array: bit k = neighbour k >= centre, interior cells only."""
    v = g.values
    height, width = v.shape
    centre = v[1:-1, 1:-1]
    return np.stack([
        v[1 + di:height - 1 + di, 1 + dj:width - 1 + dj] >= centre
        for di, dj in _LBP_OFFSETS
    ])


def lbp_codes(g: Grid2D) -> np.ndarray:
    """8-bit LBP codes for interior cells (top-left neighbour is the MSB); borders 0."""
    _require_min_size(g, 3, "lbp_codes")
    bits = _lbp_bits(g).astype(np.uint16)
    weights = (1 << np.arange(7, -1, -1, dtype=np.uint16))[:, None, None]
    codes = np.zeros(g.shape, dtype=np.uint8)
    codes[1:-1, 1:-1] = (bits * weights).sum(axis=0).astype(np.uint8)
    return codes


def lbp_transitions(g: Grid2D) -> np.ndarray:
    """Circular 0↔1 transition count of each interior code; borders 0."""
    _require_min_size(g, 3, "lbp_transitions")
    bits = _lbp_bits(g)
    counts = np.zeros(g.shape, dtype=np.int64)
    counts[1:-1, 1:-1] = (bits != np.roll(bits, -1, axis=0)).sum(axis=0)
    return counts


def lbp_edge(g: Grid2D, params: EdgeParams = EdgeParams()) -> BinaryMask:
    """Edge where the LBP code is non-uniform (transitions > threshold)."""
    return BinaryMask.from_array(lbp_transitions(g) > params.lbp_edge_threshold)
