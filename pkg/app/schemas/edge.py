#!/usr/bin/env python3
"""Edge-extraction schemas for RMSup."""

from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.schemas.grid import Grid2D


class CurvatureKind(str, Enum):
    EFFECTIVE_WAVENUMBER_SQ = "effective_wavenumber_sq"
    LOG_CURVATURE = "log_curvature"


class GuidanceMethod(str, Enum):
    """The four conditioning variants compared by the evaluation harness."""
    KEDGE = "kedge"
    LBP = "lbp"
    CANNY = "canny"
    BASE = "base"


class CurvatureMap(BaseModel):
    """k_eff² or k_log per cell, in 1/m²."""
    model_config = ConfigDict(frozen=True)

    grid: Grid2D
    kind: CurvatureKind


class EdgeParams(BaseModel):
    """
    Parameters shared by the K-edge extractor and the Canny / LBP baselines.

    epsilon is the stabilizer added to the amplitude before dividing or
    taking the log; 1e-6 assumes [0, 1]-normalized amplitude.
    """
    model_config = ConfigDict(extra="forbid", frozen=True)

    epsilon: float = Field(default=1e-6, gt=0)
    flip_sign: bool = False
    canny_sigma: float = Field(default=1.0, gt=0)
    canny_low: float = Field(default=0.05, ge=0)
    canny_high: float = Field(default=0.2, ge=0)
    lbp_edge_threshold: int = Field(default=2, ge=0, le=8)

    @model_validator(mode="after")
    def _check_thresholds(self):
        if not self.canny_low < self.canny_high:
            raise ValueError(
                f"canny_low ({self.canny_low}) must be < canny_high ({self.canny_high})"
            )
        return self
