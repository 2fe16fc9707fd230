#!/usr/bin/env python3
"""Diffusion schedules, states and loss weights."""

from enum import Enum
from typing import Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.core.errors import KindMismatch, TimeOutOfRange

TimeLike = Union[float, np.ndarray]


def _vector(value) -> np.ndarray:
    arr = np.array(value, dtype=np.float64, copy=True)
    arr.setflags(write=False)
    return arr


class ScheduleKind(str, Enum):
    CONSTANT_DRIFT_DDM = "constant_drift_ddm"
    DDPM = "ddpm"


class Schedule(BaseModel):
    """
    Either the continuous constant-drift decoupled schedule on t ∈ [0, 1]
    (γ_t = 1 − t, δ_t² = t) or a discrete DDPM schedule.

    For DDPM, ``alphas`` is the per-step mean factor and ``betas`` the
    per-step variance, so x_t = α_t x_{t−1} + √β_t ε. ``alpha_bars`` is the
    cumulative product of α_s² and is always derived, never supplied.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    kind: ScheduleKind
    alphas: Optional[np.ndarray] = None
    betas: Optional[np.ndarray] = None
    alpha_bars: Optional[np.ndarray] = None

    @field_validator("alphas", "betas", "alpha_bars", mode="before")
    @classmethod
    def _as_vector(cls, v):
        return None if v is None else _vector(v)

    @model_validator(mode="after")
    def _check(self):
        if self.kind is ScheduleKind.CONSTANT_DRIFT_DDM:
            if any(a is not None for a in (self.alphas, self.betas, self.alpha_bars)):
                raise ValueError("a constant-drift schedule carries no per-step arrays")
            return self
        if self.alphas is None or self.betas is None:
            raise ValueError("a DDPM schedule needs alphas and betas")
        if self.alphas.ndim != 1 or self.alphas.shape != self.betas.shape or self.alphas.size == 0:
            raise ValueError("alphas and betas must be non-empty 1D arrays of equal length")
        if not (np.all(self.betas > 0.0) and np.all(self.betas <= 1.0)):
            raise ValueError("betas must lie in (0, 1]")
        if not (np.all(self.alphas > 0.0) and np.all(self.alphas <= 1.0)):
            raise ValueError("alphas must lie in (0, 1]")
        derived = np.cumprod(self.alphas ** 2)
        if self.alpha_bars is None:
            object.__setattr__(self, "alpha_bars", _vector(derived))
        elif self.alpha_bars.shape != derived.shape or not np.allclose(
            self.alpha_bars, derived, rtol=0.0, atol=1e-12
        ):
            raise ValueError("alpha_bars disagree with the cumulative product of alphas²")
        return self

    # ── constructors ──

    @classmethod
    def constant_drift_ddm(cls) -> "Schedule":
        return cls(kind=ScheduleKind.CONSTANT_DRIFT_DDM)

    @classmethod
    def ddpm(cls, alphas, betas) -> "Schedule":
        return cls(kind=ScheduleKind.DDPM, alphas=alphas, betas=betas)

    @classmethod
    def ddpm_linear(cls, steps: int, beta_start: float = 1e-4, beta_end: float = 0.02) -> "Schedule":
        """Linear β ramp with the variance-preserving mean factor α_t = √(1 − β_t)."""
        if steps < 1:
            raise ValueError(f"steps must be >= 1, got {steps}")
        betas = np.linspace(beta_start, beta_end, steps)
        return cls.ddpm(np.sqrt(1.0 - betas), betas)

    # ── DDPM accessors ──

    @property
    def steps(self) -> int:
        self._require(ScheduleKind.DDPM)
        return int(self.alphas.size)

    def check_step(self, step: int) -> None:
        if not 0 <= step < self.steps:
            raise TimeOutOfRange(f"step {step} outside [0, {self.steps})")

    # ── constant-drift DDM computed fields ──

    def _require(self, kind: ScheduleKind) -> None:
        if self.kind is not kind:
            raise KindMismatch(f"operation needs a {kind.value} schedule, got {self.kind.value}")

    def check_time(self, t: float) -> None:
        self._require(ScheduleKind.CONSTANT_DRIFT_DDM)
        if not 0.0 <= t <= 1.0:
            raise TimeOutOfRange(f"t = {t} outside [0, 1]")

    def gamma(self, t: TimeLike) -> TimeLike:
        self._require(ScheduleKind.CONSTANT_DRIFT_DDM)
        return 1.0 - t

    def delta_sq(self, t: TimeLike) -> TimeLike:
        self._require(ScheduleKind.CONSTANT_DRIFT_DDM)
        return t

    def f(self, t: TimeLike) -> TimeLike:
        """d log γ_t / dt, the linear drift coefficient; singular at t = 1."""
        self._require(ScheduleKind.CONSTANT_DRIFT_DDM)
        return -1.0 / (1.0 - t)

    def g_sq(self, t: TimeLike) -> TimeLike:
        """dδ²/dt − 2 f_t δ²_t."""
        self._require(ScheduleKind.CONSTANT_DRIFT_DDM)
        return 1.0 + 2.0 * t / (1.0 - t)


class DiffusionState(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    x: np.ndarray
    t: float

    @field_validator("x", mode="before")
    @classmethod
    def _as_vector(cls, v):
        return _vector(v)

    @model_validator(mode="after")
    def _check(self):
        if not np.all(np.isfinite(self.x)):
            raise ValueError("state x must be finite")
        return self


class DenoiserOutput(BaseModel):
    """Predicted drift f̂_t and noise ε̂_t for one state."""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    f_hat: np.ndarray
    eps_hat: np.ndarray

    @field_validator("f_hat", "eps_hat", mode="before")
    @classmethod
    def _as_vector(cls, v):
        return _vector(v)

    @model_validator(mode="after")
    def _check(self):
        if self.f_hat.shape != self.eps_hat.shape:
            raise ValueError(f"f_hat {self.f_hat.shape} and eps_hat {self.eps_hat.shape} differ in shape")
        return self


class LossWeights(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    lambda1: float = Field(default=1.0, ge=0)
    lambda2: float = Field(default=1.0, ge=0)
    lambda3: float = Field(default=1.0, ge=0)

    @model_validator(mode="after")
    def _not_all_zero(self):
        if self.lambda1 == self.lambda2 == self.lambda3 == 0.0:
            raise ValueError("at least one loss weight must be positive")
        return self


class DdmDemoConfig(BaseModel):
    """
    Gaussian-oracle sampler run used by ``ddm-demo``. loss_t is the noise
    level at which the oracle's training losses are scored.
    """
    model_config = ConfigDict(extra="forbid", frozen=True)

    steps: int = Field(default=200, ge=1)
    samples: int = Field(default=10_000, ge=2)
    mu0: float = 1.5
    var0: float = Field(default=0.25, ge=0)
    tolerance_se: float = Field(default=4.0, gt=0)
    hist_bins: int = Field(default=64, ge=2)
    loss_t: float = Field(default=0.5, gt=0, le=1)
