"""
Main entry point: command line interface of the prescribed mean curvature flow.

    python main.py evolve --config configs/scenarios/gaussian_cmc.yaml
    python main.py verify --config configs/scenarios/verify_sine_minkowski.yaml
    python main.py refine --config configs/scenarios/sine_curvature_refine.yaml --levels 32,64,128
    python main.py slice-scan --config configs/scenarios/gaussian_cmc.yaml --from -1 --to 1 --steps 5
"""
import logging
from pathlib import Path
from typing import List, Optional

import typer

from app.errors import FlowError
from app.factory.config_schema import RunConfig
from app.factory.run_factory import load_run_config
from app.orchestration.runner import run_evolve, run_refine, run_slice_scan, run_verify

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

cli = typer.Typer(help="Prescribed mean curvature flow of spacelike graphs over flat tori.", no_args_is_help=True)


@cli.callback()
def main(verbose: bool = typer.Option(False, "--verbose", "-v", help="Log at DEBUG level.")):
    """
    Configures logging. Every subcommand additionally mirrors its log into
    run.log inside the run's output directory.
    """
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format=LOG_FORMAT,
        handlers=[logging.StreamHandler()],
        force=True,
    )


def _load(config: Path) -> RunConfig:
    try:
        return load_run_config(config)
    except FlowError as e:
        logging.error(f"Invalid configuration '{config}':\n{e}")
        raise typer.Exit(code=1)


def _parse_levels(levels: Optional[str]) -> Optional[List[int]]:
    if not levels:
        return None
    try:
        return [int(item) for item in levels.split(",") if item.strip()]
    except ValueError:
        logging.error(f"--levels must be a comma separated list of integers, got '{levels}'")
        raise typer.Exit(code=1)


@cli.command()
def evolve(config: Path = typer.Option(..., "--config", help="Run configuration (YAML).")):
    """Run the flow, audit the trace and write summary.json, series.csv and snapshots."""
    raise typer.Exit(code=run_evolve(_load(config)))


@cli.command()
def verify(config: Path = typer.Option(..., "--config", help="Run configuration (YAML).")):
    """Check the geometry of the initial graph by independent routes; write verify.json."""
    raise typer.Exit(code=run_verify(_load(config)))


@cli.command()
def refine(
    config: Path = typer.Option(..., "--config", help="Run configuration (YAML)."),
    levels: Optional[str] = typer.Option(None, "--levels", help="Node counts, e.g. 32,64,128."),
):
    """Grid refinement order study; write refine.json."""
    raise typer.Exit(code=run_refine(_load(config), _parse_levels(levels)))


@cli.command("slice-scan")
def slice_scan(
    config: Path = typer.Option(..., "--config", help="Run configuration (YAML)."),
    t_min: float = typer.Option(..., "--from", help="First x0."),
    t_max: float = typer.Option(..., "--to", help="Last x0."),
    steps: int = typer.Option(..., "--steps", help="Number of samples."),
):
    """Tabulate the mean curvature of the coordinate slices; write slices.csv."""
    raise typer.Exit(code=run_slice_scan(_load(config), t_min, t_max, steps))


if __name__ == "__main__":
    cli()
