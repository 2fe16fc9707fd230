#!/usr/bin/env python3
"""Configuration settings for RMSup."""

import os
from pathlib import Path
from typing import Optional

from starlette.config import Config

# Set RMSUP_ENV_FILE to point at a different env file (e.g. per experiment box).
env_file = os.getenv("RMSUP_ENV_FILE", ".env")

config = Config(env_file if Path(env_file).is_file() else None)

# ── App settings ──────────────────────────────────────────────────────────── #
APP_NAME: str = config("APP_NAME", default="RMSup")
APP_VERSION: str = config("APP_VERSION", default="1.0.0")

# ── Logging ───────────────────────────────────────────────────────────────── #
LOG_DIR: str = config("RMSUP_LOG_DIR", default="logs")
LOG_LEVEL: str = config("RMSUP_LOG_LEVEL", default="INFO")
LOG_MAX_BYTES: int = config("RMSUP_LOG_MAX_BYTES", cast=int, default=5_000_000)
LOG_BACKUP_COUNT: int = config("RMSUP_LOG_BACKUP_COUNT", cast=int, default=5)


def workers_override() -> Optional[int]:
    """
    RMSUP_WORKERS, read at call time rather than import time so a shell can
    change it between runs of the same process (tests, notebooks).
    """
    value = config("RMSUP_WORKERS", default=None)
    if value in (None, ""):
        return None
    workers = int(value)
    if workers < 1:
        raise ValueError(f"RMSUP_WORKERS must be >= 1, got {workers}")
    return workers
