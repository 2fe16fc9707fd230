#!/usr/bin/env python3
"""Resampling schemas for RMSup."""

from pydantic import BaseModel, ConfigDict, Field, model_validator


class SamplingSpec(BaseModel):
    """Uniform sampling geometry: N = s · n."""
    model_config = ConfigDict(frozen=True)

    stride_s: int = Field(gt=0)
    hr_size_N: int = Field(gt=0)
    lr_size_n: int = Field(gt=0)

    @model_validator(mode="after")
    def _check(self):
        if self.hr_size_N != self.stride_s * self.lr_size_n:
            raise ValueError(
                f"hr_size_N ({self.hr_size_N}) != stride_s ({self.stride_s}) * lr_size_n ({self.lr_size_n})"
            )
        return self

    @classmethod
    def for_grid(cls, hr_size_N: int, stride_s: int) -> "SamplingSpec":
        return cls(stride_s=stride_s, hr_size_N=hr_size_N, lr_size_n=hr_size_N // stride_s)
