#!/usr/bin/env python3
"""
Evaluation commands.

    python -m app.cli eval runs/a/manifest.csv --stride 4
    python -m app.cli pipeline --config experiment.cfg --workers 4
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
    WORKERS_OPTION,
    echo_error_and_exit,
    echo_success,
    resolve_config,
)
from app.core.errors import RMSupError
from app.schemas.edge import GuidanceMethod
from app.schemas.metrics import ComparisonReport


def _method_override(method: Optional[GuidanceMethod]):
    return None if method is None else method.value


def _print_summary(report: ComparisonReport) -> None:
    typer.echo(f"{'Method':<8}{'Metric':<10}{'Mean':>14}{'Std':>14}{'N':>5}")
    typer.echo("-" * 51)
    for row in report.summary:
        typer.echo(f"{row.method.value:<8}{row.metric:<10}{row.mean:>14.6g}{row.std:>14.6g}{row.n:>5}")
    for failure in report.failures:
        typer.secho(f"  failed: scene {failure.scene_seed} / {failure.method.value}: {failure.detail}",
                    fg=typer.colors.YELLOW)


def eval_(
    manifest: Path = typer.Argument(..., help="manifest.csv written by gen."),
    method: Optional[GuidanceMethod] = typer.Option(None, "--method", help="Evaluate one method only."),
    stride: Optional[int] = STRIDE_OPTION,
    workers: Optional[int] = WORKERS_OPTION,
    config: Optional[Path] = CONFIG_OPTION,
    out: Optional[Path] = OUT_OPTION,
    force: bool = FORCE_OPTION,
):
    """Reconstruct every manifest scene per method; write report.csv, summary.csv and panels."""
    try:
        run = resolve_config(config, out=out or manifest.parent, workers=workers, stride=stride,
                             extra={"methods": _method_override(method)})
        report = pipeline_services.cmd_eval(manifest, run, force=force)
    except RMSupError as exc:
        echo_error_and_exit(exc.detail)
        return
    _print_summary(report)
    if not report.ok:
        echo_error_and_exit(f"{len(report.failures)} scene/method task(s) failed")
    echo_success(f"report.csv and summary.csv written to {run.output_dir}")


def pipeline(
    config: Optional[Path] = CONFIG_OPTION,
    seed: Optional[int] = SEED_OPTION,
    out: Optional[Path] = OUT_OPTION,
    workers: Optional[int] = WORKERS_OPTION,
    stride: Optional[int] = STRIDE_OPTION,
    method: Optional[GuidanceMethod] = typer.Option(None, "--method", help="Run one method only."),
    force: bool = FORCE_OPTION,
):
    """gen → edges → LR pairs → reconstructions → report; exit 0 only if every task succeeded."""
    try:
        run = resolve_config(config, seed=seed, out=out, workers=workers, stride=stride,
                             extra={"methods": _method_override(method)})
        report = pipeline_services.cmd_pipeline(run, force=force)
    except RMSupError as exc:
        echo_error_and_exit(exc.detail)
        return
    _print_summary(report)
    if not report.ok:
        echo_error_and_exit(f"{len(report.failures)} scene/method task(s) failed")
    echo_success(f"pipeline finished: {len(report.rows)} rows in {run.output_dir / 'report.csv'}")
