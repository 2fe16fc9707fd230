#!/usr/bin/env python3
# app/services/scenegen_services.py
"""
Seeded synthetic urban scenes and their ground-truth pathloss maps.

Propagation is free-space path loss plus a fixed loss per building wall the
direct ray crosses. It has no diffraction; it reproduces the sharp LoS /
shadow discontinuities the K map is designed to find.
"""

import math
from typing import List, Tuple

import numpy as np

from app.core.errors import PlacementFailure
from app.core.logging_config import logger
from app.schemas.grid import BinaryMask, Grid2D, RadioMap
from app.schemas.scene import PropagationParams, Rect, Scene, SceneConfig, point_in_rect_closed, rects_overlap
from app.services.grid_services import normalize_minmax
from app.utils.prng import SplitMix64

MAX_REJECTIONS = 10_000

# 20·log10(4π / c) with c = 299 792 458 m/s
FSPL_CONSTANT_DB = -147.55


# ── Scene generation ──────────────────────────────────────────────────────────

def _size_range_cells(config: SceneConfig) -> Tuple[int, int]:
    lo = max(1, math.ceil(config.size_min / config.spacing_h - 1e-9))
    hi = max(lo, math.floor(config.size_max / config.spacing_h + 1e-9))
    return lo, min(hi, config.grid_n)


def gen_scene(seed: int, config: SceneConfig = SceneConfig()) -> Scene:
    """
    Rejection-sample non-overlapping, cell-aligned buildings, then place the
    transmitter uniformly in free space. Deterministic in (seed, config).
    """
    rng = SplitMix64(seed)
    n, h = config.grid_n, config.spacing_h
    extent = n * h
    size_lo, size_hi = _size_range_cells(config)

    target = rng.randint(config.building_count_min, config.building_count_max)
    buildings: List[Rect] = []
    rejections = 0
    while len(buildings) < target:
        w = rng.randint(size_lo, size_hi)
        d = rng.randint(size_lo, size_hi)
        x0 = rng.randint(0, n - w)
        y0 = rng.randint(0, n - d)
        rect = (x0 * h, y0 * h, (x0 + w) * h, (y0 + d) * h)
        if any(rects_overlap(rect, other) for other in buildings):
            rejections += 1
            if rejections >= MAX_REJECTIONS:
                raise PlacementFailure(
                    f"seed {seed}: placed {len(buildings)}/{target} buildings before "
                    f"{MAX_REJECTIONS} rejections; the configuration is overcrowded"
                )
            continue
        buildings.append(rect)

    while True:
        tx = (rng.uniform(0.0, extent), rng.uniform(0.0, extent))
        if not any(point_in_rect_closed(tx[0], tx[1], r) for r in buildings):
            break
        rejections += 1
        if rejections >= MAX_REJECTIONS:
            raise PlacementFailure(f"seed {seed}: no free space left for the transmitter")

    scene = Scene(
        seed=seed,
        grid_n=n,
        spacing_h=h,
        extent_m=(extent, extent),
        buildings=buildings,
        tx_pos=tx,
    )
    logger.info(
        f"Generated scene {seed}: {len(buildings)} buildings, tx at ({tx[0]:.2f}, {tx[1]:.2f})",
        extra={"extra": {"rejections": rejections}},
    )
    return scene


# ── Geometry ──────────────────────────────────────────────────────────────────

def cell_centers(scene: Scene) -> Tuple[np.ndarray, np.ndarray]:
    """(cx, cy) arrays of shape (N, N); cx varies along columns."""
    centers = (np.arange(scene.grid_n) + 0.5) * scene.spacing_h
    cx, cy = np.meshgrid(centers, centers)
    return cx, cy


def building_mask(scene: Scene) -> BinaryMask:
    """1 where the cell center is inside a building (low edges in, high edges out)."""
    cx, cy = cell_centers(scene)
    inside = np.zeros(cx.shape, dtype=bool)
    for x0, y0, x1, y1 in scene.buildings:
        inside |= (x0 <= cx) & (cx < x1) & (y0 <= cy) & (cy < y1)
    return BinaryMask.from_array(inside)


def _rect_crossings(tx: float, ty: float, dx: np.ndarray, dy: np.ndarray, rect: Rect) -> np.ndarray:
    """
    Boundary crossings of the segments tx → tx + (dx, dy) with one rectangle,
    via Liang–Barsky clipping: 2 when the segment passes through the interior,
    1 when it only touches the boundary, 0 otherwise.
    """
    x0, y0, x1, y1 = rect
    t0 = np.zeros(dx.shape)
    t1 = np.ones(dx.shape)
    ok = np.ones(dx.shape, dtype=bool)
    with np.errstate(divide="ignore", invalid="ignore"):
        for p, q in ((-dx, tx - x0), (dx, x1 - tx), (-dy, ty - y0), (dy, y1 - ty)):
            parallel = p == 0.0
            ok &= ~(parallel & (q < 0.0))
            r = q / np.where(parallel, 1.0, p)
            t0 = np.where(~parallel & (p < 0.0), np.maximum(t0, r), t0)
            t1 = np.where(~parallel & (p > 0.0), np.minimum(t1, r), t1)
    hit = ok & (t0 <= t1)
    tm = 0.5 * (t0 + t1)
    mx = tx + tm * dx
    my = ty + tm * dy
    through = hit & (t1 > t0) & (x0 < mx) & (mx < x1) & (y0 < my) & (my < y1)
    return np.where(through, 2, np.where(hit, 1, 0))


def ray_crossings(scene: Scene) -> np.ndarray:
    """Number of building-boundary crossings on the ray tx → each cell center."""
    cx, cy = cell_centers(scene)
    tx, ty = scene.tx_pos
    dx, dy = cx - tx, cy - ty
    counts = np.zeros(cx.shape, dtype=np.int64)
    for rect in scene.buildings:
        counts += _rect_crossings(tx, ty, dx, dy, rect)
    return counts


# ── Pathloss ──────────────────────────────────────────────────────────────────

def fspl_db(distance_m, freq_hz: float):
    """Free-space path loss in dB, distance in meters."""
    return 20.0 * np.log10(distance_m) + 20.0 * math.log10(freq_hz) + FSPL_CONSTANT_DB


def free_space_dbm(scene: Scene, params: PropagationParams) -> np.ndarray:
    """Received power ignoring buildings, with d floored at h/2."""
    cx, cy = cell_centers(scene)
    tx, ty = scene.tx_pos
    d = np.maximum(np.hypot(cx - tx, cy - ty), 0.5 * scene.spacing_h)
    return params.tx_power_dbm - fspl_db(d, params.freq_hz)


def simulate_pathloss(scene: Scene, params: PropagationParams = PropagationParams()) -> Tuple[RadioMap, Grid2D]:
    """
    Ground-truth map: P_dbm = tx_power − FSPL(d) − wall_loss · crossings,
    building interiors at floor_dbm, clamped to [floor, tx_power], then
    min–max normalized. Returns (RadioMap, dBm grid).
    """
    p_dbm = free_space_dbm(scene, params) - params.wall_loss_db * ray_crossings(scene)
    p_dbm[building_mask(scene).bits.astype(bool)] = params.floor_dbm
    p_dbm = np.clip(p_dbm, params.floor_dbm, params.tx_power_dbm)

    dbm_grid = Grid2D.from_array(p_dbm, spacing_h=scene.spacing_h)
    normalized, bounds = normalize_minmax(dbm_grid)
    radio_map = RadioMap(
        grid=normalized,
        tx_pos=scene.tx_pos,
        freq_hz=params.freq_hz,
        norm_bounds=bounds,
    )
    return radio_map, dbm_grid
