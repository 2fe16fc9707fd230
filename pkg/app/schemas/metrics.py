#!/usr/bin/env python3
"""Evaluation report schemas."""

from typing import List

from pydantic import BaseModel, ConfigDict, Field

from app.schemas.edge import GuidanceMethod

METRIC_NAMES = ("rmse", "nmse", "ssim", "psnr_db", "iou")


class MetricsReport(BaseModel):
    """One scene × method row of the comparison table."""
    model_config = ConfigDict(frozen=True)

    scene_seed: int = Field(ge=0, lt=1 << 64)
    method_label: GuidanceMethod
    rmse: float = Field(ge=0)
    nmse: float = Field(ge=0)
    ssim: float = Field(ge=-1.0, le=1.0)
    psnr_db: float
    iou: float = Field(ge=0.0, le=1.0)


class SummaryRow(BaseModel):
    method: GuidanceMethod
    metric: str
    mean: float
    std: float
    n: int = Field(ge=0)


class TaskFailure(BaseModel):
    scene_seed: int
    method: GuidanceMethod
    detail: str


class ComparisonReport(BaseModel):
    """Rows in manifest order (scene-major, then method order)."""
    rows: List[MetricsReport] = Field(default_factory=list)
    failures: List[TaskFailure] = Field(default_factory=list)
    summary: List[SummaryRow] = Field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures
