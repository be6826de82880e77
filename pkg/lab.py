#!/usr/bin/env python3
"""LYH Laboratory Suite Runner."""

import logging
from pathlib import Path
from typing import Annotated, Optional

import typer
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from lyh_lab import (
    ConfigError,
    ExitCode,
    LabConfig,
    SuiteName,
    SuiteResult,
    apply_overrides,
    load_config,
    run_suite,
    write_reports,
)

app = typer.Typer()

FORMAT = "%(message)s"
logging.basicConfig(
    level="INFO", format=FORMAT, datefmt="[%X]", handlers=[RichHandler()]
)

ConfigOption = Annotated[
    Optional[Path], typer.Option("--config", help="Laboratory configuration file")
]
SeedOption = Annotated[Optional[int], typer.Option("--seed", help="Root seed of the run")]
OutOption = Annotated[
    Optional[Path], typer.Option("--out", help="Directory of the manifest and CSV tables")
]
TolOption = Annotated[
    Optional[float], typer.Option("--tol", help="In-band certificate tolerance, relative")
]
JobsOption = Annotated[
    Optional[int], typer.Option("--jobs", help="Worker processes for independent cells")
]


def _summary(result: SuiteResult, code: ExitCode) -> Table:
    table = Table(title=f"{result.suite} - {code.name}")
    table.add_column("Check")
    table.add_column("Runs", justify="right")
    table.add_column("Failed", justify="right")
    table.add_column("Inconclusive", justify="right")
    groups: dict[str, list[int]] = {}
    for c in result.checks:
        key = " ".join(c.check.split()[:2])
        counts = groups.setdefault(key, [0, 0, 0])
        counts[0] += 1
        counts[1] += int(not c.passed and not c.inconclusive)
        counts[2] += int(c.inconclusive)
    for key, (runs, failed, inconclusive) in groups.items():
        table.add_row(key, str(runs), str(failed), str(inconclusive))
    return table


def _run(
    suite: SuiteName,
    config_filename: Optional[Path],
    seed: Optional[int],
    out: Optional[Path],
    tol: Optional[float],
    jobs: Optional[int],
) -> None:
    logging.info(f'Starting {suite} with configuration "{config_filename or "defaults"}"')
    try:
        config = load_config(config_filename) if config_filename is not None else LabConfig()
        config = apply_overrides(config, seed=seed, out=out, tol=tol, jobs=jobs)
    except ConfigError as e:
        logging.error(f"Exception detected: {type(e).__name__} - {e}")
        raise typer.Exit(code=ExitCode.INVALID_CONFIG)

    try:
        result = run_suite(suite, config)
        manifest = write_reports(result, config)
    except Exception as e:
        logging.critical(f"Exception detected: {type(e).__name__} - {e}")
        raise typer.Exit(code=ExitCode.ASSERTION_FAILED)

    code = ExitCode(manifest.exit_code)
    Console().print(_summary(result, code))
    logging.info(f"Reports written to {config.run.out}")
    raise typer.Exit(code=code)


@app.command("cone-check")
def cone_check(
    config_filename: ConfigOption = None,
    seed: SeedOption = None,
    out: OutOption = None,
    tol: TolOption = None,
    jobs: JobsOption = None,
) -> None:
    """Certify cone membership of model and generated curvature operators."""
    _run(SuiteName.CONE_CHECK, config_filename, seed, out, tol, jobs)


@app.command("evolve-ode")
def evolve_ode(
    config_filename: ConfigOption = None,
    seed: SeedOption = None,
    out: OutOption = None,
    tol: TolOption = None,
    jobs: JobsOption = None,
) -> None:
    """Integrate the curvature ODE and re-test cone membership along trajectories."""
    _run(SuiteName.EVOLVE_ODE, config_filename, seed, out, tol, jobs)


@app.command("heat-run")
def heat_run(
    config_filename: ConfigOption = None,
    seed: SeedOption = None,
    out: OutOption = None,
    tol: TolOption = None,
    jobs: JobsOption = None,
) -> None:
    """Evolve positive forms on the flat torus and check positivity and the LYH quantity."""
    _run(SuiteName.HEAT_RUN, config_filename, seed, out, tol, jobs)


@app.command("verify-lyh")
def verify_lyh(
    config_filename: ConfigOption = None,
    seed: SeedOption = None,
    out: OutOption = None,
    tol: TolOption = None,
    jobs: JobsOption = None,
) -> None:
    """Minimize the LYH quadratic forms on model curvature."""
    _run(SuiteName.VERIFY_LYH, config_filename, seed, out, tol, jobs)


@app.command("oracle-suite")
def oracle_suite(
    config_filename: ConfigOption = None,
    seed: SeedOption = None,
    out: OutOption = None,
    tol: TolOption = None,
    jobs: JobsOption = None,
) -> None:
    """Run the full acceptance battery."""
    _run(SuiteName.ORACLE_SUITE, config_filename, seed, out, tol, jobs)


@app.command("identities")
def identities(
    config_filename: ConfigOption = None,
    seed: SeedOption = None,
    out: OutOption = None,
    tol: TolOption = None,
    jobs: JobsOption = None,
) -> None:
    """Check the exterior algebra and flat Kaehler identities."""
    _run(SuiteName.IDENTITIES, config_filename, seed, out, tol, jobs)


if __name__ == "__main__":
    app()
