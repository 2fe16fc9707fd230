#!/usr/bin/env python3
"""
Diffusion demo command.

    python -m app.cli ddm-demo --steps 200 --samples 10000 --out runs/ddm
"""

from pathlib import Path
from typing import Optional

import typer

import app.services.pipeline_services as pipeline_services
from app.cli.utils import CONFIG_OPTION, FORCE_OPTION, OUT_OPTION, SEED_OPTION, echo_error_and_exit, echo_success, resolve_config
from app.core.errors import RMSupError


def ddm_demo(
    config: Optional[Path] = CONFIG_OPTION,
    seed: Optional[int] = SEED_OPTION,
    out: Optional[Path] = OUT_OPTION,
    steps: Optional[int] = typer.Option(None, "--steps", help="Reverse steps (ddm.steps), at least 2."),
    samples: Optional[int] = typer.Option(None, "--samples", help="Chain count (ddm.samples)."),
    force: bool = FORCE_OPTION,
):
    """Sample N(mu0, var0) through the Gaussian-oracle reverse chain and check the moments."""
    try:
        run = resolve_config(config, seed=seed, out=out, extra={"ddm.steps": steps, "ddm.samples": samples})
    except RMSupError as exc:
        echo_error_and_exit(exc.detail)
        return
    if run.ddm.steps < 2:
        echo_error_and_exit(f"ddm-demo needs at least 2 steps, got {run.ddm.steps}", code=2)

    try:
        result = pipeline_services.cmd_ddm_demo(run, force=force)
    except RMSupError as exc:
        echo_error_and_exit(exc.detail)
        return
    final = result.final
    typer.echo(f"final mean {final.mean:.5f} (target {run.ddm.mu0}, SE {result.mean_se:.2g})")
    typer.echo(f"final var  {final.var:.5f} (target {run.ddm.var0}, SE {result.var_se:.2g})")
    if result.losses is not None:
        typer.echo(f"loss_total {result.losses.total:.5g} at t = {result.losses.t} (weights {run.loss.lambda1}, "
                   f"{run.loss.lambda2}, {run.loss.lambda3})")
    echo_success(f"ddm_trace.csv and ddm_hist.pgm written to {run.output_dir}")
