"""
nctv command line.

Commands:
  nctv run           - Run a verification suite and print its report
  nctv suites        - List the registered suites
  nctv trace-points  - CSV of trace-image points (a + bθ)/k in [0, 1]
  nctv samples       - CSV of a sampled test Gaussian
"""

import csv
import io
import logging
from pathlib import Path
from typing import List, NoReturn, Optional

import typer
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from nctv import CONFIG, __version__
from nctv.config import Config
from nctv.errors import NctvException
from nctv.grp import FiniteGroupTag
from nctv.ktheory import export_trace_points
from nctv.suites import FindSuites, run_suite
from nctv.theta import ThetaParser
from nctv.walters import SELF_DUAL_WIDTH, Grid, export_samples, sample_gaussian

console = Console()
err_console = Console(stderr=True)

app = typer.Typer(
    name="nctv",
    help="Verification suites for crossed products of noncommutative tori by finite groups",
    no_args_is_help=True,
)

FORMATS = ("json", "md", "csv")


def _setup_logging(verbose: bool):
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(message)s",
        handlers=[RichHandler(console=err_console, show_path=False)],
        force=True,
    )


def _emit(text: str, out: Optional[Path]):
    if out is None:
        typer.echo(text, nl=False)
    else:
        out.write_text(text, encoding="utf-8")
        err_console.print(f"[dim]Wrote {out}[/]")


def _fail(error: Exception) -> NoReturn:
    err_console.print(f"[red bold]Error:[/] {error}")
    raise typer.Exit(2)


def _csv(header: list, rows: list) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


@app.command("run")
def run(
    suite: str = typer.Option("symbolic", "--suite", "-s", help="Suite to run, see `nctv suites`"),
    group: Optional[List[str]] = typer.Option(None, "--group", "-g", help="Group selector (Z2, Z3, Z4, Z6, flipD); repeatable"),
    theta: Optional[List[str]] = typer.Option(None, "--theta", "-t", help="'formal', 'p/q' or a float in (0, 1]; repeatable"),
    grid_n: Optional[int] = typer.Option(None, "--grid-n", help="Grid points, a power of two"),
    grid_l: Optional[float] = typer.Option(None, "--grid-l", help="Grid half-width"),
    tol: Optional[float] = typer.Option(None, "--tol", help="Tolerance replacing every numeric check's own"),
    jobs: Optional[int] = typer.Option(None, "--jobs", "-j", help="Worker threads (default $NCTV_DEFAULT_JOBS or 1)"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Seed of the randomized identities"),
    samples: Optional[int] = typer.Option(None, "--samples", help="Random samples per randomized identity"),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Write the report here instead of stdout"),
    format: str = typer.Option("json", "--format", "-f", help="Report format: json, md or csv"),
    timing: bool = typer.Option(False, "--timing", help="Record wall-clock time in the report"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging"),
):
    """Run a verification suite. Exit code 0 when every check passes, 1 otherwise."""
    _setup_logging(verbose)
    if format not in FORMATS:
        _fail(ValueError(f"Unknown format '{format}', expected one of {', '.join(FORMATS)}"))

    settings = {
        "suite": suite,
        "groups": group or None,
        "grid_n": grid_n,
        "grid_l": grid_l,
        "tolerance": tol,
        "jobs": jobs,
        "seed": seed,
        "samples": samples,
        "timing": timing or None,
    }
    try:
        if theta:
            settings["thetas"] = [ThetaParser.parse(text) for text in theta]
        config = Config(CONFIG, **{k: v for k, v in settings.items() if v is not None})
        report = run_suite(config)
    except NctvException as e:
        _fail(e)

    _emit(report.render(format), out)
    if not report.passed:
        for check in report.failures:
            err_console.print(f"[red]-[/] {check.id} ({check.anchor})")
        err_console.print(f"[red bold]{len(report.failures)} of {len(report.checks)} checks failed[/]")
        raise typer.Exit(1)
    err_console.print(f"[green]+[/] {len(report.checks)} checks passed")


@app.command("suites")
def suites():
    """List the registered suites."""
    table = Table(title="Suites")
    table.add_column("Name", style="bold")
    table.add_column("Description")
    for suite in FindSuites():
        table.add_row(suite.name, suite.description)
    console.print(table)


@app.command("trace-points")
def trace_points(
    group: str = typer.Option("Z2", "--group", "-g", help="Group selector"),
    theta: float = typer.Option(..., "--theta", "-t", help="Value of θ in (0, 1)"),
    bound: int = typer.Option(2, "--bound", "-b", help="Largest |a| and |b|"),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Write the CSV here instead of stdout"),
):
    """CSV rows (a, b, value) of the points (a + bθ)/k of the trace image in [0, 1]."""
    try:
        F = FiniteGroupTag.parse(group)
        rows = export_trace_points(F, theta, bound)
    except (NctvException, ValueError) as e:
        _fail(e)
    _emit(_csv(["a", "b", "value"], [(a, b, repr(v)) for a, b, v in rows]), out)


@app.command("samples")
def samples(
    theta: float = typer.Option(0.37, "--theta", "-t", help="Value of θ in (0, 1]"),
    grid_n: int = typer.Option(2048, "--grid-n", help="Grid points, a power of two"),
    grid_l: float = typer.Option(12.0, "--grid-l", help="Grid half-width"),
    center: float = typer.Option(0.0, "--center", help="Center of the Gaussian"),
    width: float = typer.Option(SELF_DUAL_WIDTH, "--width", help="Standard deviation of the Gaussian"),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Write the CSV here instead of stdout"),
):
    """CSV rows (x, re, im) of a normalized Gaussian sampled on the grid."""
    try:
        xi = sample_gaussian(Grid(grid_l, grid_n), theta, center, width)
    except ValueError as e:
        _fail(e)
    rows = [(repr(x), repr(re), repr(im)) for x, re, im in export_samples(xi)]
    _emit(_csv(["x", "re", "im"], rows), out)


@app.command("version")
def version():
    """Show the installed version."""
    console.print(f"nctv {__version__}")


if __name__ == "__main__":
    app()
