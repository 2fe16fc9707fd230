#!/usr/bin/env python3
"""
RMSup CLI: root entry point.

    python -m app.cli gen --seed 7 --count 20 --out runs/a
    python -m app.cli pipeline --config experiment.cfg
    python -m app.cli ddm-demo --out runs/ddm

Every command delegates to app/services/pipeline_services.py; the CLI only
parses flags, resolves the RunConfig and reports errors.
"""

import typer

from app.cli import corpus, diffusion, evaluate, recon
from app.core.config import APP_NAME, APP_VERSION
from app.core.logging_config import configure_logging

app = typer.Typer(
    help="RMSup: radio-map super-resolution with Helmholtz K-edge guidance.",
    no_args_is_help=True,
)


@app.callback(invoke_without_command=True)
def main(
    ctx: typer.Context,
    version: bool = typer.Option(False, "--version", help="Print the version and exit."),
) -> None:
    if version:
        typer.echo(f"{APP_NAME} {APP_VERSION}")
        raise typer.Exit()
    if ctx.invoked_subcommand is None:
        typer.echo(ctx.get_help())
        raise typer.Exit()
    configure_logging()


app.command("gen")(corpus.gen)
app.command("edge")(corpus.edge)
app.command("down")(corpus.down)
app.command("sr")(recon.sr)
app.command("eval")(evaluate.eval_)
app.command("pipeline")(evaluate.pipeline)
app.command("ddm-demo")(diffusion.ddm_demo)


if __name__ == "__main__":
    app()
