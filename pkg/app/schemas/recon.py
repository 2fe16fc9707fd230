#!/usr/bin/env python3
"""Variational super-resolution schemas."""

from enum import Enum
from typing import List

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.schemas.grid import RadioMap


class StepRule(str, Enum):
    BACKTRACKING = "backtracking"
    FIXED = "fixed"


class GuidanceLift(str, Enum):
    """How LR guidance is placed on the HR lattice."""
    SOURCE = "source"
    BILINEAR = "bilinear"


class SrConfig(BaseModel):
    """
    Energy weights and solver settings.

    k_eff defaults to 0: a physical wavenumber (≈124 rad/m at 5.9 GHz) is far
    above what a metre-scale grid resolves, so the Helmholtz term acts as a
    masked Laplacian regularizer unless the grid is fine enough.

    guidance_lift=SOURCE puts each LR guidance value back on the HR cell it
    was resampled from; BILINEAR spreads it over the stride block.
    """
    model_config = ConfigDict(extra="forbid", frozen=True)

    lambda_data: float = Field(default=1.0, ge=0)
    lambda_smooth: float = Field(default=0.1, ge=0)
    lambda_helm: float = Field(default=0.0, ge=0)
    k_eff: float = Field(default=0.0, ge=0)
    edge_weight_floor: float = Field(default=0.05, ge=0, lt=1)
    guidance_lift: GuidanceLift = GuidanceLift.SOURCE
    max_iters: int = Field(default=500, ge=1)
    grad_tol: float = Field(default=1e-6, gt=0)
    step_rule: StepRule = StepRule.BACKTRACKING
    fixed_step: float = Field(default=0.1, gt=0)
    armijo_c: float = Field(default=1e-4, gt=0, lt=1)

    def scaled(self, factor: float) -> "SrConfig":
        """Same problem with every λ multiplied by factor."""
        return self.model_copy(update={
            "lambda_data": self.lambda_data * factor,
            "lambda_smooth": self.lambda_smooth * factor,
            "lambda_helm": self.lambda_helm * factor,
        })


class SrResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    p_hat: RadioMap
    iterations: int = Field(ge=0)
    final_energy: float
    energy_trace: List[float]
    converged: bool

    @model_validator(mode="after")
    def _check(self):
        if not self.energy_trace:
            raise ValueError("energy_trace must hold at least the initial energy")
        for a, b in zip(self.energy_trace, self.energy_trace[1:]):
            if b > a:
                raise ValueError(f"energy_trace increased from {a!r} to {b!r}")
        return self
