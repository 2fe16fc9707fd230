#!/usr/bin/env python3
"""
Corpus commands: scene generation and the per-scene edge / down steps.

    python -m app.cli gen --seed 7 --out runs/a
    python -m app.cli edge --seed <scene-seed> --method kedge --out runs/a
    python -m app.cli down --seed <scene-seed> --method kedge --stride 4 --out runs/a
"""

from pathlib import Path
from typing import Optional

import typer

import app.services.pipeline_services as pipeline_services
from app.cli.utils import (
    CONFIG_OPTION,
    FORCE_OPTION,
    OUT_OPTION,
    SEED_OPTION,
    STRIDE_OPTION,
    echo_error_and_exit,
    echo_success,
    resolve_config,
)
from app.core.errors import RMSupError
from app.schemas.edge import GuidanceMethod


def gen(
    config: Optional[Path] = CONFIG_OPTION,
    seed: Optional[int] = SEED_OPTION,
    out: Optional[Path] = OUT_OPTION,
    count: Optional[int] = typer.Option(None, "--count", min=1, help="Number of scenes (scene.count)."),
    force: bool = FORCE_OPTION,
):
    """Generate scenes, ground-truth maps, building masks and manifest.csv."""
    try:
        run = resolve_config(config, seed=seed, out=out, extra={"scene.count": count})
        rows = pipeline_services.cmd_gen(run, force=force)
    except RMSupError as exc:
        echo_error_and_exit(exc.detail)
        return
    echo_success(f"{len(rows)} scene(s) written to {run.output_dir}")


def edge(
    seed: int = typer.Option(..., "--seed", help="Scene seed (as listed in manifest.csv)."),
    method: GuidanceMethod = typer.Option(GuidanceMethod.KEDGE, "--method"),
    config: Optional[Path] = CONFIG_OPTION,
    out: Optional[Path] = OUT_OPTION,
    force: bool = FORCE_OPTION,
):
    """Extract the guidance mask k_<method>_<seed>.rmg from gt_<seed>.rmg."""
    try:
        run = resolve_config(config, out=out)
        mask = pipeline_services.cmd_edge(run.output_dir, seed, method, run.edge, force=force)
    except RMSupError as exc:
        echo_error_and_exit(exc.detail)
        return
    if mask is None:
        typer.echo("Method 'base' has no guidance; nothing written.")
        return
    echo_success(f"{method.value} mask for scene {seed}: {mask.count()} edge cells")


def down(
    seed: int = typer.Option(..., "--seed", help="Scene seed (as listed in manifest.csv)."),
    method: GuidanceMethod = typer.Option(GuidanceMethod.KEDGE, "--method"),
    stride: Optional[int] = STRIDE_OPTION,
    config: Optional[Path] = CONFIG_OPTION,
    out: Optional[Path] = OUT_OPTION,
    force: bool = FORCE_OPTION,
):
    """Build plr_<seed>.rmg and klr_<method>_<seed>.rmg."""
    try:
        run = resolve_config(config, out=out, stride=stride)
        pipeline_services.cmd_down(run.output_dir, seed, method, run.stride_s, force=force,
                                   realistic_k=run.realistic_k, params=run.edge)
    except RMSupError as exc:
        echo_error_and_exit(exc.detail)
        return
    echo_success(f"LR pair for scene {seed} at stride {run.stride_s}")
