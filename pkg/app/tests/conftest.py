#!/usr/bin/env python3
"""Shared fixtures for the RMSup test suite."""

import numpy as np
import pytest

from app.schemas.run_config import RunConfig
from app.schemas.scene import SceneConfig


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240601)


@pytest.fixture(autouse=True)
def _isolated_cwd(tmp_path, monkeypatch):
    """Keep log files and default output dirs inside the test's tmp dir."""
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("RMSUP_WORKERS", raising=False)


@pytest.fixture
def small_scene_config() -> SceneConfig:
    return SceneConfig(
        count=2,
        grid_n=32,
        building_count_min=2,
        building_count_max=4,
        size_min=4.0,
        size_max=8.0,
    )


@pytest.fixture
def small_run_config(tmp_path, small_scene_config) -> RunConfig:
    return RunConfig(
        seed=11,
        stride_s=4,
        output_dir=tmp_path / "out",
        scene=small_scene_config,
        sr={"max_iters": 60},
    )
