#!/usr/bin/env python3
"""
Shared helpers for the RMSup CLI.

Commands never touch repositories or numerics directly: each one builds a
RunConfig, calls an app/services/*.py function and turns RMSupError into a
red message and a non-zero exit.
"""

from pathlib import Path
from typing import Any, Dict, Optional

import typer

from app.core.config import workers_override
from app.core.errors import ConfigError
from app.core.run_config import load_run_config
from app.schemas.run_config import RunConfig

CONFIG_OPTION = typer.Option(None, "--config", help="key = value experiment config file.")
SEED_OPTION = typer.Option(None, "--seed", help="Run seed (gen/pipeline) or scene seed (edge/down/sr).")
OUT_OPTION = typer.Option(None, "--out", help="Output directory.")
WORKERS_OPTION = typer.Option(None, "--workers", min=1, help="Worker processes; overrides RMSUP_WORKERS.")
STRIDE_OPTION = typer.Option(None, "--stride", min=1, help="Downsampling stride s.")
FORCE_OPTION = typer.Option(False, "--force", help="Overwrite outputs whose content would change.")


def echo_error_and_exit(message: str, code: int = 1) -> None:
    """Print a red error message and exit with a non-zero status."""
    typer.secho(f"✗ {message}", fg=typer.colors.RED, err=True)
    raise typer.Exit(code=code)


def echo_success(message: str) -> None:
    """Print a green success message."""
    typer.secho(f"✓ {message}", fg=typer.colors.GREEN)


def resolve_config(
    config_path: Optional[Path],
    seed: Optional[int] = None,
    out: Optional[Path] = None,
    workers: Optional[int] = None,
    stride: Optional[int] = None,
    extra: Optional[Dict[str, Any]] = None,
) -> RunConfig:
    """
    Config file, then RMSUP_WORKERS, then explicit flags; later sources win.
    """
    try:
        env_workers = workers_override()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    overrides: Dict[str, Any] = {
        "workers": env_workers,
        "seed": seed,
        "output_dir": out,
        "stride_s": stride,
    }
    if workers is not None:
        overrides["workers"] = workers
    overrides.update(extra or {})
    return load_run_config(config_path, overrides)
