"""Command-line entry point: `price`, `ttm`, `hedge` and `converge`.

Every command loads a run configuration, applies the command-line
overrides, builds its report and writes it as CSV to `--out` or stdout.
"""

import logging
import sys
from pathlib import Path
from typing import Callable

import click
import pandas as pd

from src.cli.commands import cmd_converge, cmd_hedge, cmd_price, cmd_ttm
from src.cli.config import PARSERS, RunConfig, load_config
from src.constants import (
    CSV_FLOAT_FORMAT,
    EXIT_ACCEPTANCE_FAILURE,
    EXIT_CONFIG_ERROR,
    EXIT_NUMERICAL_ERROR,
)
from src.errors import (
    AcceptanceError,
    ConfigError,
    NoRootError,
    NumericalError,
    UnsupportedPayoffError,
    ValidationError,
)
from src.model.model_types import PayoffKind

logger = logging.getLogger(__name__)

INPUT_ERRORS = (ConfigError, ValidationError, UnsupportedPayoffError, NoRootError)


def _configure_logging(verbose: int) -> None:
    level = max(logging.DEBUG, logging.WARNING - 10 * verbose)
    logging.basicConfig(
        level=level,
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        force=True,
    )


def _number_list(ctx, param, value):
    if value is None:
        return None
    try:
        numbers = PARSERS["spots"](value)
    except ValueError:
        raise click.BadParameter(f"expected a comma-separated list of numbers, got {value!r}")
    if not numbers:
        raise click.BadParameter("list must not be empty")
    return numbers


def write_report(frame: pd.DataFrame, out: Path | None) -> None:
    text = frame.to_csv(index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    if out is None:
        click.echo(text, nl=False)
        return
    Path(out).write_text(text)
    logger.info("Wrote %d rows to %s", len(frame), out)


def _check_acceptance(frame: pd.DataFrame) -> None:
    if "passed" not in frame:
        return
    failed = int((~frame["passed"].astype(bool)).sum())
    if failed:
        raise AcceptanceError(f"{failed} of {len(frame)} checks failed")


def run_command(builder: Callable[[RunConfig], pd.DataFrame], config_path, verbose, **overrides):
    """Loads the configuration, builds the report and maps errors to exit codes."""
    _configure_logging(verbose)
    ctx = click.get_current_context()
    try:
        config = load_config(config_path).override(**overrides).validate()
        logger.info("Running %s with %s", ctx.info_name, config)
        frame = builder(config)
        write_report(frame, config.out)
        _check_acceptance(frame)
    except INPUT_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        ctx.exit(EXIT_CONFIG_ERROR)
    except NumericalError as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        ctx.exit(EXIT_NUMERICAL_ERROR)
    except AcceptanceError as exc:
        click.echo(f"acceptance failure: {exc}", err=True)
        ctx.exit(EXIT_ACCEPTANCE_FAILURE)


SHARED_OPTIONS = [
    click.option(
        "--config",
        "config_path",
        type=click.Path(exists=False, dir_okay=False, path_type=Path),
        default=None,
        help="key = value configuration file; defaults reproduce the parameter table.",
    ),
    click.option(
        "--out",
        type=click.Path(dir_okay=False, path_type=Path),
        default=None,
        help="CSV destination (stdout when omitted).",
    ),
    click.option("--seed", type=int, default=None, help="Monte Carlo seed."),
    click.option("--spots", callback=_number_list, default=None, help="Comma-separated spots."),
    click.option(
        "--contracts",
        callback=_number_list,
        default=None,
        help="Comma-separated contract counts; negative counts are written.",
    ),
    click.option(
        "--times",
        callback=_number_list,
        default=None,
        help="Comma-separated quote times for `price`, each in [0, T).",
    ),
    click.option("--gamma", type=float, default=None, help="Risk aversion."),
    click.option("--nsteps", type=int, default=None, help="Time steps of the PDE grid."),
    click.option("--paths", type=int, default=None, help="Monte Carlo paths."),
    click.option(
        "--payoff",
        type=click.Choice([kind.value for kind in PayoffKind]),
        callback=lambda ctx, param, value: None if value is None else PayoffKind.parse(value),
        default=None,
    ),
    click.option("--antithetic/--no-antithetic", default=None, help="Antithetic sampling."),
    click.option("-v", "--verbose", count=True, help="Repeat for more log output."),
]


def shared_options(func):
    for option in reversed(SHARED_OPTIONS):
        func = option(func)
    return func


@click.group()
def cli():
    """Option prices and hedges when trading can be suspended by liquidity shocks."""


@cli.command()
@shared_options
def price(config_path, verbose, **overrides):
    """Prices under every method at each quote time and spot."""
    run_command(cmd_price, config_path, verbose, **overrides)


@cli.command()
@shared_options
def ttm(config_path, verbose, **overrides):
    """Adjusted and implied times-to-maturity."""
    run_command(cmd_ttm, config_path, verbose, **overrides)


@cli.command()
@shared_options
def hedge(config_path, verbose, **overrides):
    """Delta curves and the indifference hedge."""
    run_command(cmd_hedge, config_path, verbose, **overrides)


@cli.command()
@shared_options
def converge(config_path, verbose, **overrides):
    """Grid ladder and Monte Carlo checks; exits 4 if any fails."""
    run_command(cmd_converge, config_path, verbose, **overrides)
