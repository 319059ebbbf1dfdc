"""Command-line entry point for the Hardy projection toolkit."""

import json
import math
import sys
from datetime import datetime
from typing import Any, Callable, Dict, List, Literal, Optional, Tuple

import click
from pydantic import BaseModel, Field, ValidationError
from rich.panel import Panel
from rich.table import Table

from config.settings import settings
from core.errors import HardyToolkitError
from core.hardy import (
    BoundaryGrid,
    PNormSpec,
    Subalgebra,
    falsify_composition_automorphism,
    hp_norm_1d,
    hp_norm_2d,
    isometry_form_check_neil,
    rotation_automorphism_check,
)
from core.operators import Atom, WeightedCompositionOp2D, verify_isometry
from core.projections import (
    EigenPair,
    classify_1d,
    classify_2d,
    gtcp_from_isometry,
    lagrange_falsifier,
    sigma_lagrange_falsifier,
    verify_triple,
)
from core.series import TruncatedSeries2D
from utils.console import console, get_logger
from utils.db import RunLedger
from utils.io import (
    dump_expression,
    load_expression,
    load_operator,
    load_series,
    residual_rows,
    write_report,
    write_residual_csv,
)
from utils.sampling import SEED_MAX, generate_samples, generate_samples_2d


logger = get_logger(__name__)

EXIT_PASS, EXIT_FAIL, EXIT_INPUT = 0, 1, 2

Command = Literal["norm", "isometry-verify", "gtcp-build", "gtcp-classify", "falsify", "automorphism-check"]


class RunConfig(BaseModel):
    """One CLI invocation; unset grid and tolerance fall back to per-command defaults."""

    command: Command
    op: Optional[str] = None
    expr: Optional[str] = None
    series: Optional[str] = None
    p: str = "inf"
    grid: Optional[int] = Field(default=None, ge=8)
    samples: int = Field(default_factory=lambda: settings.default_samples, ge=1)
    seed: int = Field(default_factory=lambda: settings.default_seed, ge=0, le=SEED_MAX)
    tol: Optional[float] = Field(default=None, gt=0)
    out: Optional[str] = None
    csv: Optional[str] = None
    max_degree: int = Field(default_factory=lambda: settings.default_max_degree, ge=0)
    zero_free: Optional[bool] = None
    subalgebra: str = "Neil"
    theta: float = 0.0
    alpha_angle: Optional[float] = None
    lambda1: float = 2 * math.pi / 3
    lambda2: float = 4 * math.pi / 3


Outcome = Tuple[Dict[str, Any], List[Dict[str, Any]]]


def _require(value: Optional[str], flag: str) -> str:
    if not value:
        raise ValueError(f"{flag} is required for this command")
    return value


def _samples_for(op, config: RunConfig, zero_free: bool = False):
    if config.zero_free is not None:
        zero_free = config.zero_free
    if isinstance(op, WeightedCompositionOp2D):
        d = min(config.max_degree, 4)
        return generate_samples_2d(config.seed, config.samples, (d, d), zero_free=zero_free)
    return generate_samples(config.seed, config.samples, config.max_degree, zero_free=zero_free)


def _run_norm(config: RunConfig) -> Outcome:
    f = load_series(_require(config.series, "--series"))
    spec = PNormSpec.parse(config.p)
    grid = BoundaryGrid(config.grid or settings.default_grid_size)
    norm = hp_norm_2d if isinstance(f, TruncatedSeries2D) else hp_norm_1d
    value = norm(f, spec, grid)
    report = {
        "check": "norm",
        "norm": value,
        "p": spec.to_json(),
        "residuals": {},
        "verdict": "pass",
        "tolerance": config.tol,
        "grid_size": grid.size,
    }
    return report, []


def _run_isometry(config: RunConfig) -> Outcome:
    op = load_operator(_require(config.op, "--op"))
    grid = BoundaryGrid(config.grid or settings.default_grid_size)
    # finite-p quadrature needs samples without boundary zeros
    samples = _samples_for(op, config, zero_free=not op.p.is_infinite)
    tol = config.tol or settings.norm_tolerance
    if config.expr:
        expr = load_expression(config.expr, Atom(op))
        report = verify_isometry(expr, samples, grid, tol, p=op.p)
        report.details["expression"] = dump_expression(expr)
    else:
        report = verify_isometry(op, samples, grid, tol)
    return report.to_dict(), residual_rows(report.check, report.sample_residuals)


def _pair(config: RunConfig) -> EigenPair:
    return EigenPair.from_angles(config.lambda1, config.lambda2)


def _check_grid(config: RunConfig) -> BoundaryGrid:
    return BoundaryGrid(config.grid or settings.order_check_points)


def _run_build(config: RunConfig) -> Outcome:
    op = load_operator(_require(config.op, "--op"))
    tol = config.tol or settings.operator_tolerance
    samples, grid = _samples_for(op, config), _check_grid(config)
    triple = gtcp_from_isometry(op, _pair(config), samples, grid, tol)
    report = verify_triple(triple, op, samples, grid, tol)
    data = report.to_dict()
    data["residuals"]["annihilation"] = triple.residuals["annihilation"]
    data["formulas"] = triple.formulas
    return data, residual_rows("gtcp_triple", {k: [v] for k, v in data["residuals"].items()})


def _run_classify(config: RunConfig) -> Outcome:
    op = load_operator(_require(config.op, "--op"))
    tol = config.tol or settings.operator_tolerance
    grid = _check_grid(config)
    classify = classify_2d if isinstance(op, WeightedCompositionOp2D) else classify_1d
    report = classify(op, _samples_for(op, config), grid, tol, config.seed)
    data = report.to_dict()
    data["check"] = "classification"
    data["grid_size"] = grid.size
    return data, [{"check": name, "sample_index": -1, "residual": v} for name, v in report.residuals.items()]


def _run_falsify(config: RunConfig) -> Outcome:
    op = load_operator(_require(config.op, "--op"))
    tol = config.tol or settings.operator_tolerance
    pair = _pair(config)
    if isinstance(op, WeightedCompositionOp2D) and op.tau.a == 0 and op.tau.theta == 0:
        result, variant = sigma_lagrange_falsifier(op, pair, config.seed), "w"
    else:
        base = op.base if isinstance(op, WeightedCompositionOp2D) else op
        result, variant = lagrange_falsifier(base, pair, config.seed), "z"
    deviation = abs(result.residual - 1)
    data = {
        "check": "lagrange_falsifier",
        "residual": result.residual,
        "residuals": {"deviation_from_one": deviation},
        "verdict": "pass" if deviation < tol else "fail",
        "tolerance": tol,
        "grid_size": None,
        "details": {"variable": variant, "point": [result.point.real, result.point.imag]},
    }
    return data, [{"check": "lagrange_falsifier", "sample_index": 0, "residual": result.residual}]


def _run_automorphism(config: RunConfig) -> Outcome:
    subalgebra = Subalgebra.parse(config.subalgebra)
    tol = config.tol or settings.operator_tolerance
    grid = BoundaryGrid(config.grid or settings.default_grid_size)
    samples = generate_samples(config.seed, config.samples, config.max_degree, subalgebra)
    rotation = rotation_automorphism_check(config.theta, samples, subalgebra, tol, grid)
    data = rotation.to_dict()
    rows = residual_rows(rotation.check, rotation.sample_residuals)
    verdict = rotation.verdict
    if config.alpha_angle is not None:
        form = isometry_form_check_neil(complex(math.cos(config.alpha_angle), math.sin(config.alpha_angle)),
                                        config.theta, samples, tol, grid, subalgebra)
        data["isometry_form"] = form.to_dict()
        rows += residual_rows(form.check, form.sample_residuals)
        verdict = "pass" if verdict == "pass" and form.passed else "fail"
    if config.op:
        op = load_operator(config.op)
        violation = falsify_composition_automorphism(op.tau, subalgebra)
        data["composition_falsifier"] = {
            "witness": violation.witness.to_dict(),
            "violation": violation.violation,
            "order": violation.order,
        }
    data["verdict"] = verdict
    return data, rows


PIPELINES: Dict[str, Callable[[RunConfig], Outcome]] = {
    "norm": _run_norm,
    "isometry-verify": _run_isometry,
    "gtcp-build": _run_build,
    "gtcp-classify": _run_classify,
    "falsify": _run_falsify,
    "automorphism-check": _run_automorphism,
}


def _record(config: RunConfig, report: Dict[str, Any], exit_code: int) -> None:
    if not settings.ledger_enabled:
        return
    try:
        ledger = RunLedger()
        ledger.record_run(
            config.command, report.get("verdict"), exit_code, report,
            tolerance=report.get("tolerance"), grid_size=report.get("grid_size"), seed=config.seed,
        )
        ledger.close()
    except Exception as e:
        logger.warning("run ledger unavailable: %s", e)


def _show(report: Dict[str, Any]) -> None:
    style = "bold green" if report.get("verdict") == "pass" else "bold red"
    title = report.get("family") or report.get("check", report["command"])
    console.print(Panel.fit(f"{report['command']}: {title} -> {report.get('verdict')}", style=style))
    residuals = report.get("residuals") or {}
    if residuals:
        table = Table(title="Residuals")
        table.add_column("Check", style="cyan")
        table.add_column("Residual", justify="right", style="magenta")
        for name, value in residuals.items():
            table.add_row(name, f"{value:.3e}" if isinstance(value, (int, float)) else str(value))
        console.print(table)
    if "norm" in report:
        console.print(f"norm = {report['norm']:.15g}")


def run(config: RunConfig) -> int:
    """Execute one pipeline; returns 0 on pass, 1 on fail, 2 on input errors."""
    try:
        report, rows = PIPELINES[config.command](config)
        exit_code = EXIT_PASS if report.get("verdict") == "pass" else EXIT_FAIL
    except (ValueError, OSError) as e:
        # JSON decoding and pydantic validation errors are ValueErrors too
        payload = {"error": type(e).__name__, "message": str(e)}
        click.echo(json.dumps(payload))
        _record(config, payload, EXIT_INPUT)
        return EXIT_INPUT
    except HardyToolkitError as e:
        report = {"check": config.command, "verdict": "fail", "error": type(e).__name__, "message": str(e),
                  "residuals": {}, "tolerance": config.tol, "grid_size": config.grid}
        rows = []
        exit_code = EXIT_FAIL

    report["command"] = config.command
    report["seed"] = config.seed
    report["generated_at"] = datetime.now().isoformat(timespec="seconds")
    if config.out:
        report = write_report(report, config.out)
    if config.csv:
        write_residual_csv(rows, config.csv)
    _show(report)
    _record(config, report, exit_code)
    return exit_code


def _invoke(ctx: click.Context, **params) -> None:
    try:
        config = RunConfig(command=ctx.command.name, **{k: v for k, v in params.items() if v is not None})
    except ValidationError as e:
        click.echo(json.dumps({"error": "ValidationError", "message": str(e)}))
        ctx.exit(EXIT_INPUT)
    ctx.exit(run(config))


def common_options(func):
    for option in reversed([
        click.option("--grid", type=int, help="Boundary grid size M (>= 8)"),
        click.option("--samples", type=int, help="Number of random sample polynomials"),
        click.option("--seed", type=int, help="Seed for sample generation"),
        click.option("--tol", type=float, help="Tolerance override"),
        click.option("--out", type=click.Path(dir_okay=False), help="Write the JSON report here"),
        click.option("--csv", type=click.Path(dir_okay=False), help="Write the residual table here"),
        click.option("--max-degree", type=int, help="Maximum degree of sample polynomials"),
        click.option("--zero-free/--no-zero-free", default=None,
                     help="Lift constant terms so samples have no boundary zeros (isometry-verify: on for finite p)"),
    ]):
        func = option(func)
    return func


def pair_options(func):
    func = click.option("--lambda2", type=float, help="Angle of lambda2 in radians (default 4pi/3)")(func)
    func = click.option("--lambda1", type=float, help="Angle of lambda1 in radians (default 2pi/3)")(func)
    return func


@click.group()
def cli():
    """Hardy projection toolkit - isometries and tri-circular projections on H^p."""
    pass


@cli.command()
@click.option("--series", type=click.Path(), help="Series file (1D or 2D)")
@click.option("--p", "p", default="inf", help="Exponent p >= 1 or 'inf'")
@common_options
@click.pass_context
def norm(ctx, **params):
    """Compute the H^p norm of a series by boundary quadrature."""
    _invoke(ctx, **params)


@cli.command(name="isometry-verify")
@click.option("--op", type=click.Path(), help="Operator file")
@click.option("--expr", type=click.Path(), help="Expression file in the nested-array form, built from the operator")
@common_options
@click.pass_context
def isometry_verify(ctx, **params):
    """Check that an operator preserves H^p norms on random samples."""
    _invoke(ctx, **params)


@cli.command(name="gtcp-build")
@click.option("--op", type=click.Path(), help="Operator file")
@pair_options
@common_options
@click.pass_context
def gtcp_build(ctx, **params):
    """Build P, Q, R from an isometry and an eigenvalue pair, then verify them."""
    _invoke(ctx, **params)


@cli.command(name="gtcp-classify")
@click.option("--op", type=click.Path(), help="Operator file")
@common_options
@click.pass_context
def gtcp_classify(ctx, **params):
    """Classify the tri-circular decomposition carried by an isometry."""
    _invoke(ctx, **params)


@cli.command()
@click.option("--op", type=click.Path(), help="Operator file")
@pair_options
@common_options
@click.pass_context
def falsify(ctx, **params):
    """Run the Lagrange-polynomial falsifier against an operator."""
    _invoke(ctx, **params)


@cli.command(name="automorphism-check")
@click.option("--theta", type=float, help="Rotation angle in radians")
@click.option("--class", "subalgebra", help="H0, Neil, H0n(n) or H1n(n)")
@click.option("--alpha-angle", type=float, help="Also check f -> e^{i alpha} f(e^{i theta} z)")
@click.option("--op", type=click.Path(), help="Operator whose automorphism feeds the composition falsifier")
@common_options
@click.pass_context
def automorphism_check(ctx, **params):
    """Check rotation automorphisms of a subalgebra of H-infinity."""
    _invoke(ctx, **params)


@cli.command()
@click.option("--limit", default=20, help="Number of runs to show")
@click.option("--command", "command_name", help="Filter by command")
def history(limit: int, command_name: Optional[str]):
    """Show recent runs from the ledger."""
    ledger = RunLedger()
    runs = ledger.get_runs_by_command(command_name, limit) if command_name else ledger.get_recent_runs(limit)
    counts = ledger.verdict_counts()
    ledger.close()

    if not runs:
        console.print("[yellow]No runs recorded.[/yellow]")
        return

    table = Table(title="Recent Runs")
    table.add_column("ID", justify="right")
    table.add_column("Command", style="cyan")
    table.add_column("Verdict", style="green")
    table.add_column("Exit", justify="center")
    table.add_column("Seed", style="magenta")
    table.add_column("When", style="blue")
    for row in runs:
        table.add_row(
            str(row["id"]),
            row["command"],
            str(row.get("verdict")),
            str(row.get("exit_code")),
            str(row.get("seed")),
            str(row.get("created_at", ""))[:19],
        )
    console.print(table)
    console.print(", ".join(f"{k}: {v}" for k, v in sorted(counts.items())))


if __name__ == "__main__":
    sys.exit(cli())
