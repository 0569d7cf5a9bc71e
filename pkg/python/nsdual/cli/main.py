"""``nsdual`` command line."""

import sys
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import click
from rich.console import Console
from rich.table import Table

from ..config import get_settings
from ..logging import configure_logging
from .runner import EXIT_PARSE, EXIT_VALIDATION, RunOutcome, batch, batch_exit_code, run_scenario
from .scenario import Task

console = Console(stderr=True)

TASKS = [t.value for t in Task]


def parse_tolerances(pairs: Tuple[str, ...]) -> Dict[str, float]:
    """Turn ``name=value`` pairs into a mapping."""
    out: Dict[str, float] = {}
    for pair in pairs:
        name, sep, raw = pair.partition("=")
        if not sep or not name.strip():
            raise click.BadParameter(f"expected NAME=VALUE, got '{pair}'", param_hint="--tol")
        try:
            out[name.strip()] = float(raw)
        except ValueError as e:
            raise click.BadParameter(f"'{raw}' is not a number", param_hint="--tol") from e
    return out


def _summary(outcomes: List[RunOutcome]) -> None:
    table = Table(title="nsdual")
    table.add_column("Scenario")
    table.add_column("Exit", justify="right")
    table.add_column("Result")
    table.add_column("Output")
    for o in outcomes:
        if o.passed:
            result = "[green]passed[/green]"
        else:
            message = (o.reason or {}).get("message", "failed")
            result = f"[red]{message}[/red]"
        table.add_row(o.name, str(o.exit_code), result, str(o.out_dir or ""))
    console.print(table)


def _common(func):
    func = click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
                        help="Output directory (default: NSDUAL_OUTPUT_DIR or nsdual-out)")(func)
    func = click.option("--tol", "tols", multiple=True, metavar="NAME=VALUE",
                        help="Tolerance override, e.g. --tol solve=1e-8 (repeatable)")(func)
    func = click.option("--seed", type=click.IntRange(min=0, max=2**64 - 1), default=None,
                        help="Seed for randomised uniqueness checks")(func)
    func = click.option("--task", type=click.Choice(TASKS), default=None,
                        help="Override the scenario's task")(func)
    return func


@click.group()
@click.option("--log-level", default=None, type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
              case_sensitive=False), help="Log level (stderr)")
@click.option("--json-logs/--console-logs", default=True, help="Render logs as JSON lines")
@click.version_option(package_name="nsdual")
def cli(log_level: Optional[str], json_logs: bool) -> None:
    """Nonsmooth utility-maximisation duality on finite tree markets."""
    configure_logging(level=(log_level or get_settings().log_level).upper(), json_output=json_logs)


@cli.command()
@click.option("--scenario", "scenario", required=True, type=click.Path(dir_okay=False), help="Scenario JSON file")
@_common
def run(scenario: str, out_dir: Optional[str], tols: Tuple[str, ...], seed: Optional[int], task: Optional[str]) -> None:
    """Run one scenario and write its report."""
    try:
        overrides = parse_tolerances(tols)
    except click.BadParameter as e:
        console.print(f"[red]{e.format_message()}[/red]")
        sys.exit(EXIT_VALIDATION)
    outcome = run_scenario(scenario, out_dir, overrides, seed, task)
    _summary([outcome])
    sys.exit(outcome.exit_code)


@cli.command("batch")
@click.argument("directory", type=click.Path(file_okay=False))
@_common
@click.option("--workers", type=click.IntRange(min=1), default=None, help="Concurrent scenarios")
def batch_command(
    directory: str,
    out_dir: Optional[str],
    tols: Tuple[str, ...],
    seed: Optional[int],
    task: Optional[str],
    workers: Optional[int],
) -> None:
    """Run every scenario file in DIRECTORY concurrently."""
    if not Path(directory).is_dir():
        console.print(f"[red]Not a directory: {directory}[/red]")
        sys.exit(EXIT_PARSE)
    try:
        overrides = parse_tolerances(tols)
    except click.BadParameter as e:
        console.print(f"[red]{e.format_message()}[/red]")
        sys.exit(EXIT_VALIDATION)
    outcomes = batch(directory, out_dir, overrides, seed, task, workers=workers)
    _summary(outcomes)
    sys.exit(batch_exit_code(outcomes))


@cli.command("scenarios")
def list_scenarios() -> None:
    """Print the paths of the bundled scenarios."""
    for path in bundled_scenarios():
        click.echo(str(path))


def bundled_scenarios() -> List[Path]:
    return sorted((Path(__file__).parent / "scenarios").glob("*.json"))


def main() -> None:
    cli(prog_name="nsdual")


if __name__ == "__main__":
    main()
