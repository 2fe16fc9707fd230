#!/usr/bin/env python3
"""
Reconstruction command.

    python -m app.cli sr --seed <scene-seed> --method kedge --stride 4 --out runs/a
"""

from pathlib import Path
from typing import Optional

import typer

import app.services.pipeline_services as pipeline_services
from app.cli.utils import CONFIG_OPTION, FORCE_OPTION, OUT_OPTION, STRIDE_OPTION, echo_error_and_exit, echo_success, resolve_config
from app.core.errors import RMSupError
from app.schemas.edge import GuidanceMethod


def sr(
    seed: int = typer.Option(..., "--seed", help="Scene seed (as listed in manifest.csv)."),
    method: GuidanceMethod = typer.Option(GuidanceMethod.KEDGE, "--method"),
    stride: Optional[int] = STRIDE_OPTION,
    config: Optional[Path] = CONFIG_OPTION,
    out: Optional[Path] = OUT_OPTION,
    force: bool = FORCE_OPTION,
):
    """Reconstruct phat_<method>_<seed>.rmg / .pgm and its energy trace."""
    try:
        run = resolve_config(config, out=out, stride=stride)
        result = pipeline_services.cmd_sr(run.output_dir, seed, method, run.stride_s, run.sr, force=force)
    except RMSupError as exc:
        echo_error_and_exit(exc.detail)
        return
    state = "converged" if result.converged else "hit max_iters"
    echo_success(f"scene {seed} / {method.value}: {state} after {result.iterations} iterations, "
                 f"energy {result.final_energy:.6g}")
