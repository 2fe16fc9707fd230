#!/usr/bin/env python3
"""Experiment configuration assembled from every module's settings."""

from pathlib import Path
from typing import List

from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.schemas.diffusion import DdmDemoConfig, LossWeights
from app.schemas.edge import EdgeParams, GuidanceMethod
from app.schemas.recon import SrConfig
from app.schemas.scene import PropagationParams, SceneConfig


class RunConfig(BaseModel):
    """
    One experiment. Every section forbids unknown keys, so a typo in a
    config file fails the run instead of silently using a default.
    """
    model_config = ConfigDict(extra="forbid", frozen=True)

    seed: int = Field(default=0, ge=0, lt=1 << 64)
    stride_s: int = Field(default=4, ge=1)
    output_dir: Path = Path("out")
    workers: int = Field(default=1, ge=1)
    # K_LR from the upsampled P_LR instead of the ground-truth K map.
    realistic_k: bool = False
    methods: List[GuidanceMethod] = Field(
        default_factory=lambda: [GuidanceMethod.KEDGE, GuidanceMethod.LBP, GuidanceMethod.CANNY, GuidanceMethod.BASE]
    )

    scene: SceneConfig = SceneConfig()
    propagation: PropagationParams = PropagationParams()
    edge: EdgeParams = EdgeParams()
    sr: SrConfig = SrConfig()
    loss: LossWeights = LossWeights()
    ddm: DdmDemoConfig = DdmDemoConfig()

    @field_validator("methods", mode="before")
    @classmethod
    def _split_methods(cls, v):
        if isinstance(v, str):
            return [item.strip() for item in v.split(",") if item.strip()]
        return v

    @field_validator("methods")
    @classmethod
    def _non_empty_unique(cls, v):
        if not v:
            raise ValueError("methods must name at least one guidance method")
        if len(set(v)) != len(v):
            raise ValueError("methods must not repeat")
        return v
