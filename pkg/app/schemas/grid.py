#!/usr/bin/env python3
"""Grid schemas for RMSup: the dense 2D substrate every map is built on."""

from typing import Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


def _frozen_array(value, dtype) -> np.ndarray:
    """Copy into a fresh C-contiguous array and make it read-only."""
    arr = np.array(value, dtype=dtype, copy=True, order="C")
    arr.setflags(write=False)
    return arr


class Grid2D(BaseModel):
    """
    Dense 2D scalar field with physical cell spacing.

    values has shape (height, width), row-major; index (i, j) is
    (row / y, column / x). Cell (i, j) is centered at ((j + ½)h, (i + ½)h).
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    width: int = Field(gt=0)
    height: int = Field(gt=0)
    spacing_h: float = Field(gt=0)
    values: np.ndarray

    @field_validator("values", mode="before")
    @classmethod
    def _as_float_array(cls, v):
        return _frozen_array(v, np.float64)

    @model_validator(mode="after")
    def _check_shape(self):
        if self.values.shape != (self.height, self.width):
            raise ValueError(
                f"values shape {self.values.shape} != (height, width) = "
                f"({self.height}, {self.width})"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid values must be finite")
        return self

    @classmethod
    def from_array(cls, values, spacing_h: float = 1.0) -> "Grid2D":
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"expected a 2D array, got {arr.ndim}D")
        return cls(width=arr.shape[1], height=arr.shape[0], spacing_h=spacing_h, values=arr)

    def with_values(self, values) -> "Grid2D":
        """Same geometry, new values."""
        return Grid2D(width=self.width, height=self.height, spacing_h=self.spacing_h, values=values)

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.height, self.width)

    @property
    def extent_m(self) -> Tuple[float, float]:
        return (self.width * self.spacing_h, self.height * self.spacing_h)


class RadioMap(BaseModel):
    """Normalized power map I ∈ [0, 1] with transmitter metadata."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    grid: Grid2D
    tx_pos: Tuple[float, float]
    freq_hz: float = Field(gt=0)
    norm_bounds: Tuple[float, float]

    @model_validator(mode="after")
    def _check(self):
        v = self.grid.values
        if v.min() < 0.0 or v.max() > 1.0:
            raise ValueError("radio map values must lie in [0, 1]")
        p_min, p_max = self.norm_bounds
        if not p_min < p_max:
            raise ValueError(f"norm_bounds must satisfy p_min < p_max, got {self.norm_bounds}")
        w, h = self.grid.extent_m
        x, y = self.tx_pos
        if not (0.0 <= x <= w and 0.0 <= y <= h):
            raise ValueError(f"tx_pos {self.tx_pos} outside grid extent ({w}, {h})")
        return self


class AmplitudeMap(BaseModel):
    """Amplitude A = √I, nonnegative."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    grid: Grid2D

    @model_validator(mode="after")
    def _check(self):
        if self.grid.values.min() < 0.0:
            raise ValueError("amplitude values must be >= 0")
        return self

    @classmethod
    def from_array(cls, values, spacing_h: float = 1.0) -> "AmplitudeMap":
        return cls(grid=Grid2D.from_array(values, spacing_h))


class BinaryMask(BaseModel):
    """0/1 grid: K maps, Canny/LBP edges, building masks."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    width: int = Field(gt=0)
    height: int = Field(gt=0)
    bits: np.ndarray

    @field_validator("bits", mode="before")
    @classmethod
    def _as_bits(cls, v):
        arr = np.asarray(v)
        if arr.dtype == np.bool_:
            arr = arr.astype(np.uint8)
        elif not np.all((arr == 0) | (arr == 1)):
            raise ValueError("mask elements must be exactly 0 or 1")
        return _frozen_array(arr, np.uint8)

    @model_validator(mode="after")
    def _check_shape(self):
        if self.bits.shape != (self.height, self.width):
            raise ValueError(
                f"bits shape {self.bits.shape} != (height, width) = ({self.height}, {self.width})"
            )
        return self

    @classmethod
    def from_array(cls, bits) -> "BinaryMask":
        arr = np.asarray(bits)
        return cls(width=arr.shape[1], height=arr.shape[0], bits=arr)

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.height, self.width)

    def count(self) -> int:
        return int(self.bits.sum())


GridLike = Union[Grid2D, BinaryMask]
