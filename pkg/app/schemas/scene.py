#!/usr/bin/env python3
"""Scene and propagation schemas for RMSup."""

from typing import List, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

Rect = Tuple[float, float, float, float]  # (x0, y0, x1, y1) in meters


def rects_overlap(a: Rect, b: Rect) -> bool:
    """True when the rectangles share positive area (touching edges is fine)."""
    return a[0] < b[2] and b[0] < a[2] and a[1] < b[3] and b[1] < a[3]


def point_in_rect_closed(x: float, y: float, r: Rect) -> bool:
    return r[0] <= x <= r[2] and r[1] <= y <= r[3]


class SceneConfig(BaseModel):
    """Generator settings. Sizes are in meters and snapped to whole cells."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    count: int = Field(default=1, ge=1)
    grid_n: int = Field(default=128, ge=32)
    spacing_h: float = Field(default=1.0, gt=0)
    building_count_min: int = Field(default=5, ge=0)
    building_count_max: int = Field(default=15, ge=0)
    size_min: float = Field(default=6.0, gt=0)
    size_max: float = Field(default=20.0, gt=0)

    @model_validator(mode="after")
    def _check_ranges(self):
        if self.building_count_min > self.building_count_max:
            raise ValueError("building_count_min must be <= building_count_max")
        if self.size_min > self.size_max:
            raise ValueError("size_min must be <= size_max")
        if self.size_max > self.grid_n * self.spacing_h:
            raise ValueError("size_max exceeds the scene extent")
        return self


class PropagationParams(BaseModel):
    """Link budget for the FSPL + wall-crossing model."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    tx_power_dbm: float = 23.0
    freq_hz: float = Field(default=5.9e9, gt=0)
    wall_loss_db: float = Field(default=10.0, gt=0)
    floor_dbm: float = -150.0

    @model_validator(mode="after")
    def _check(self):
        if not self.floor_dbm < self.tx_power_dbm:
            raise ValueError("floor_dbm must be below tx_power_dbm")
        return self


class Scene(BaseModel):
    """Axis-aligned urban layout with one transmitter."""
    model_config = ConfigDict(frozen=True)

    seed: int = Field(ge=0, lt=1 << 64)
    grid_n: int = Field(gt=0)
    spacing_h: float = Field(gt=0)
    extent_m: Tuple[float, float]
    buildings: List[Rect] = Field(default_factory=list)
    tx_pos: Tuple[float, float]
    # Recorded for provenance only; the 2D model ignores heights.
    building_height_m: float = 25.0
    antenna_height_m: float = 1.5

    @model_validator(mode="after")
    def _check(self):
        width, height = self.extent_m
        for i, r in enumerate(self.buildings):
            if not (0.0 <= r[0] < r[2] <= width and 0.0 <= r[1] < r[3] <= height):
                raise ValueError(f"building {i} {r} is degenerate or outside the extent")
            for other in self.buildings[i + 1:]:
                if rects_overlap(r, other):
                    raise ValueError(f"buildings {r} and {other} overlap")
        x, y = self.tx_pos
        if not (0.0 <= x <= width and 0.0 <= y <= height):
            raise ValueError(f"tx_pos {self.tx_pos} outside the extent")
        if any(point_in_rect_closed(x, y, r) for r in self.buildings):
            raise ValueError(f"tx_pos {self.tx_pos} lies inside a building")
        return self
