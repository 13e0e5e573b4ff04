"""Command line interface for additive growth models."""

import csv
import io
import json
import logging
import sys
from pathlib import Path

try:  # newer typer vendors its own click; its exceptions are the ones raised
    import typer._click.exceptions as click
except ImportError:
    import click
import numpy as np
import typer
from dotenv import load_dotenv
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from .colour import lift_model
from .duality import dual_model, double_dual_check, enumerate_dual_types, is_self_dual
from .engine import (
    Geometry,
    Torus,
    build_percolation_graph,
    complete_convergence_test,
    critical_scan,
    duality_violations,
    estimate_survival,
    evolve_forward,
    percolates,
    replicate_seed,
    sample_event_map,
    upper_invariant_density,
)
from .eventmodel import GrowthModel, is_additive, is_attractive, validate_growth_model
from .modelfile import dumps, load_model
from .pcclass import check_cc_conditions, classify_mapping, growth_rate, has_pc, is_simple
from .types import DEFAULT_CONFIDENCE, GrowthModelError, Verdict
from .utils import Settings, all_configurations, format_configuration, format_float, parse_assignments
from .zoo import DEFAULT_SIDE, ZOO, zoo_model

logger = logging.getLogger(__name__)

app = typer.Typer(help="Additive multi-type growth models: validation, duality, lifts and simulation", no_args_is_help=True)

console = Console()
err_console = Console(stderr=True)

# Exhaustive duality tests enumerate every primal and dual configuration below this count.
EXHAUSTIVE_LIMIT = 4096


def _settings() -> Settings:
    return Settings.from_env()


def _resolve_model(model: str, params: list[str] | None) -> GrowthModel:
    """Load ``model`` from a JSON file if the path exists, else build the zoo model of that name."""
    assignments = parse_assignments(params)
    if Path(model).is_file():
        loaded = load_model(model)
        for name, value in assignments.items():
            loaded = loaded.with_parameter(name, value)
        return loaded
    if model not in ZOO:
        raise typer.BadParameter(f"{model!r} is neither a model file nor a zoo model ({', '.join(ZOO)})")
    return zoo_model(model, **assignments)


def parse_geometry(text: str | None, model: GrowthModel) -> Geometry:
    """``torus:AxB``, ``cycle:N`` or the model's default geometry when ``text`` is empty."""
    if not text:
        if model.geometry is not None:
            return model.geometry
        return Torus((DEFAULT_SIDE,) * (model.dim or 1))
    kind, _, spec = text.partition(":")
    try:
        if kind == "torus":
            return Torus(tuple(int(s) for s in spec.split("x")))
        if kind == "cycle":
            return Torus((int(spec),))
    except ValueError:
        pass
    raise typer.BadParameter(f"Geometry must look like torus:4x4 or cycle:10, got {text!r}")


def parse_configuration(text: str | None, geometry: Geometry, model: GrowthModel) -> np.ndarray:
    """``single`` (top type at site 0), ``full`` (top type everywhere) or ``site=label`` pairs."""
    lattice = model.lattice
    text = text or "single"
    if text == "single":
        return geometry.delta(0, lattice.top)
    if text == "full":
        return np.full(geometry.n_sites, lattice.top, dtype=np.int64)
    config = geometry.empty()
    for item in text.split(","):
        site, _, label = item.partition("=")
        try:
            config[int(site)] = lattice.index(label.strip())
        except (ValueError, IndexError):
            raise typer.BadParameter(f"Cannot read initial configuration item {item!r}") from None
    return config


def _parse_floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise typer.BadParameter(f"Expected comma-separated numbers, got {text!r}") from None


def _emit(text: str, output: Path | None) -> None:
    if output is None:
        sys.stdout.write(text)
    else:
        output.write_text(text, encoding="utf-8")
        err_console.print(f"✅ Wrote {output}")


def _csv(header: list[str], rows) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def _yes(value) -> str:
    return "✅ yes" if value else "❌ no"


def _check_logic(model: GrowthModel, settings: Settings, self_dual: bool) -> tuple[list[tuple[str, str, str]], bool]:
    """Run every structural check; returns report rows and whether a required check failed."""
    lattice = model.lattice
    rows: list[tuple[str, str, str]] = []
    failed = False

    report = validate_growth_model(model.structure, lattice, settings.max_sites, settings.node_budget)
    rows.append(("growth model", report.verdict.value, report.message))
    failed |= report.verdict == Verdict.FAIL

    additive = [is_additive(e, lattice) for e in model.mappings]
    bad = [e.name for e, c in zip(model.mappings, additive) if not c]
    rows.append(("additive", _yes(not bad), ", ".join(bad)))
    failed |= bool(bad)

    attractive = [e.name for e in model.mappings if not is_attractive(e, lattice)]
    rows.append(("attractive", _yes(not attractive), ", ".join(attractive)))

    multi = lattice.is_multi_colour()
    rows.append(("multi-colour", _yes(multi), f"primitives: {', '.join(lattice.labels[a] for a in lattice.primitives)}"))
    dual = enumerate_dual_types(lattice, settings.dual_warn_types)
    rows.append(("dual types", str(len(dual.active)), ", ".join(dual.labels[1:])))

    if multi and not bad:
        classes = {classify_mapping(e, lattice).value for e in model.mappings}
        rows.append(("simple", _yes(is_simple(model)), ", ".join(sorted(classes))))
        pc = has_pc(model)
        rows.append(("positive correlations", _yes(pc), "" if pc else repr(pc.witness)))
        double = double_dual_check(model)
        rows.append(("double dual", _yes(double), "" if double else repr(double.witness)))
        conditions = check_cc_conditions(model, settings.max_sites)
        rows.append(("convergence conditions", _yes(conditions.all_pass), ", ".join(conditions.failed)))
        rows.append(("growth rate", format_float(growth_rate(model)), "largest eigenvalue of the production generator"))
    elif not multi:
        rows.append(("simple", "n/a", "lattice is not multi-colour"))

    if self_dual:
        relabel = is_self_dual(model) if not bad else None
        detail = ""
        if relabel is not None:
            detail = ", ".join(f"{dual.labels[d]}->{lattice.labels[a]}" for d, a in sorted(relabel.items()))
        rows.append(("self-dual", _yes(relabel is not None), detail))
        failed |= relabel is None
    return rows, failed


@app.command()
def check(
    model: str = typer.Argument(..., help="Model file or zoo model name"),
    param: list[str] = typer.Option(None, "--param", "-p", help="Parameter override name=value"),
    self_dual: bool = typer.Option(False, "--self-dual", help="Also search for a self-duality relabelling"),
    as_json: bool = typer.Option(False, "--json", help="Print the report as JSON"),
) -> None:
    """Validate a model and report its structural properties."""
    growth = _resolve_model(model, param)
    rows, failed = _check_logic(growth, _settings(), self_dual)
    if as_json:
        sys.stdout.write(json.dumps({"model": growth.name, "checks": [list(r) for r in rows], "ok": not failed}, indent=2) + "\n")
    else:
        table = Table(title=f"{growth.name}: {growth.description}")
        table.add_column("Check")
        table.add_column("Result")
        table.add_column("Details")
        for row in rows:
            table.add_row(*row)
        console.print(table)
    if failed:
        raise typer.Exit(code=1)


@app.command()
def dual(
    model: str = typer.Argument(..., help="Model file or zoo model name"),
    param: list[str] = typer.Option(None, "--param", "-p", help="Parameter override name=value"),
    output: Path = typer.Option(None, "--output", "-o", help="Write the dual model file here"),
) -> None:
    """Emit the dual model as a model file."""
    growth = _resolve_model(model, param)
    _emit(dumps(dual_model(growth)), output)


@app.command()
def lift(
    model: str = typer.Argument(..., help="Model file or zoo model name"),
    param: list[str] = typer.Option(None, "--param", "-p", help="Parameter override name=value"),
    output: Path = typer.Option(None, "--output", "-o", help="Write the lifted model file here"),
) -> None:
    """Emit the multi-colour lift of a model as a model file."""
    growth = _resolve_model(model, param)
    _emit(dumps(lift_model(growth)), output)


@app.command()
def simulate(
    model: str = typer.Argument(..., help="Model file or zoo model name"),
    param: list[str] = typer.Option(None, "--param", "-p", help="Parameter override name=value"),
    geometry: str = typer.Option(None, help="torus:AxB or cycle:N"),
    horizon: float = typer.Option(5.0, help="Time horizon"),
    seed: int = typer.Option(None, help="Random seed (default GROWTH_SEED)"),
    initial: str = typer.Option("single", help="single, full or site=label,..."),
    output: Path = typer.Option(None, "--output", "-o", help="CSV file for the snapshots"),
) -> None:
    """Run one forward trajectory and write its snapshots as CSV."""
    growth = _resolve_model(model, param)
    geom = parse_geometry(geometry, growth)
    seed = _settings().seed if seed is None else seed
    eta0 = parse_configuration(initial, geom, growth)
    trajectory = evolve_forward(sample_event_map(growth, geom, horizon, seed), eta0)
    labels = growth.lattice.labels
    rows = [(format_float(t), format_configuration(c, labels)) for t, c in trajectory.snapshots()]
    _emit(_csv(["t", "configuration"], rows), output)


@app.command("duality-test")
def duality_test(
    model: str = typer.Argument(..., help="Model file or zoo model name"),
    param: list[str] = typer.Option(None, "--param", "-p", help="Parameter override name=value"),
    geometry: str = typer.Option("cycle:4", help="torus:AxB or cycle:N"),
    horizon: float = typer.Option(2.0, help="Time horizon"),
    seeds: int = typer.Option(100, help="Number of seeded event maps"),
    seed: int = typer.Option(None, help="Base seed (default GROWTH_SEED)"),
) -> None:
    """Check the duality relation on every pair of initial states over many event maps."""
    growth = _resolve_model(model, param)
    geom = parse_geometry(geometry, growth)
    seed = _settings().seed if seed is None else seed
    dual_lattice = enumerate_dual_types(growth.lattice)
    n = geom.n_sites
    if len(growth.lattice) ** n > EXHAUSTIVE_LIMIT or len(dual_lattice) ** n > EXHAUSTIVE_LIMIT:
        raise typer.BadParameter(f"Geometry {geom.describe()} is too large for an exhaustive test")
    etas = all_configurations(len(growth.lattice), n)
    zetas = all_configurations(len(dual_lattice), n)
    violations = 0
    for r in range(seeds):
        event_map = sample_event_map(growth, geom, horizon, replicate_seed(seed, r))
        found = duality_violations(event_map, etas, zetas)
        if found:
            i, j = found[0]
            err_console.print(f"❌ Seed {r}: eta0={etas[i].tolist()} zeta0={zetas[j].tolist()}")
        violations += len(found)
    console.print(f"{violations} violations in {seeds * len(etas) * len(zetas)} checks")
    if violations:
        raise typer.Exit(code=1)


@app.command()
def percolation(
    model: str = typer.Argument(..., help="Model file or zoo model name"),
    param: list[str] = typer.Option(None, "--param", "-p", help="Parameter override name=value"),
    geometry: str = typer.Option("cycle:5", help="torus:AxB or cycle:N"),
    horizon: float = typer.Option(5.0, help="Time horizon"),
    seeds: int = typer.Option(100, help="Number of seeded event maps"),
    seed: int = typer.Option(None, help="Base seed (default GROWTH_SEED)"),
) -> None:
    """Compare coloured percolation with survival from every single-site primitive start."""
    growth = _resolve_model(model, param)
    geom = parse_geometry(geometry, growth)
    seed = _settings().seed if seed is None else seed
    mismatches = checks = survived = 0
    for r in range(seeds):
        event_map = sample_event_map(growth, geom, horizon, replicate_seed(seed, r))
        graph = build_percolation_graph(event_map)
        for x in range(geom.n_sites):
            for a in growth.lattice.primitives:
                alive = evolve_forward(event_map, geom.delta(x, a), record=False).survived
                checks += 1
                survived += alive
                if percolates(event_map, x, a, graph=graph) != alive:
                    mismatches += 1
    console.print(f"{mismatches} mismatches in {checks} starts ({survived} survived)")
    if mismatches:
        raise typer.Exit(code=1)


SURVIVAL_HEADER = ["parameter", "estimate", "ci_low", "ci_high", "replicates"]


def _survival_row(estimate, parameter: float | None) -> list[str]:
    value = "" if parameter is None else format_float(parameter)
    return [
        value,
        format_float(estimate.estimate),
        format_float(estimate.low),
        format_float(estimate.high),
        str(estimate.replicates),
    ]


@app.command()
def survival(
    model: str = typer.Argument(..., help="Model file or zoo model name"),
    param: list[str] = typer.Option(None, "--param", "-p", help="Parameter override name=value"),
    geometry: str = typer.Option(None, help="torus:AxB or cycle:N"),
    horizon: float = typer.Option(10.0, help="Time horizon"),
    replicates: int = typer.Option(1000, help="Number of replicates"),
    seed: int = typer.Option(None, help="Base seed (default GROWTH_SEED)"),
    threads: int = typer.Option(None, help="Worker processes (default GROWTH_THREADS)"),
    initial: str = typer.Option("single", help="single, full or site=label,..."),
    confidence: float = typer.Option(DEFAULT_CONFIDENCE, help="Confidence level of the interval"),
    output: Path = typer.Option(None, "--output", "-o", help="CSV file for the estimate"),
) -> None:
    """Estimate the probability of survival up to the horizon."""
    settings = _settings()
    growth = _resolve_model(model, param)
    geom = parse_geometry(geometry, growth)
    eta0 = parse_configuration(initial, geom, growth)
    estimate = estimate_survival(
        growth,
        geom,
        eta0,
        horizon,
        replicates,
        seed=settings.seed if seed is None else seed,
        threads=settings.threads if threads is None else threads,
        confidence=confidence,
    )
    _emit(_csv(SURVIVAL_HEADER, [_survival_row(estimate, None)]), output)


@app.command()
def scan(
    model: str = typer.Argument(..., help="Model file or zoo model name"),
    parameter: str = typer.Option("lambda", help="Parameter to scan"),
    grid: str = typer.Option(..., help="Sorted comma-separated parameter values"),
    param: list[str] = typer.Option(None, "--param", "-p", help="Parameter override name=value"),
    geometry: str = typer.Option(None, help="torus:AxB or cycle:N"),
    horizon: float = typer.Option(10.0, help="Time horizon"),
    replicates: int = typer.Option(1000, help="Number of replicates"),
    seed: int = typer.Option(None, help="Base seed (default GROWTH_SEED)"),
    threads: int = typer.Option(None, help="Worker processes (default GROWTH_THREADS)"),
    initial: str = typer.Option("single", help="single, full or site=label,..."),
    threshold: float = typer.Option(0.5, help="Survival level whose crossing is reported"),
    output: Path = typer.Option(None, "--output", "-o", help="CSV file for the survival curve"),
) -> None:
    """Survival curve over a parameter grid using one thinned event stream per replicate."""
    settings = _settings()
    growth = _resolve_model(model, param)
    geom = parse_geometry(geometry, growth)
    eta0 = parse_configuration(initial, geom, growth)
    result = critical_scan(
        growth,
        parameter,
        _parse_floats(grid),
        geom,
        eta0,
        horizon,
        replicates,
        seed=settings.seed if seed is None else seed,
        threads=settings.threads if threads is None else threads,
        threshold=threshold,
    )
    _emit(_csv(SURVIVAL_HEADER, [_survival_row(e, e.parameter) for e in result.estimates]), output)
    crossing = "none" if result.crossing is None else format_float(result.crossing)
    err_console.print(f"Survival crosses {threshold} at {parameter} = {crossing}")


@app.command()
def density(
    model: str = typer.Argument(..., help="Model file or zoo model name"),
    param: list[str] = typer.Option(None, "--param", "-p", help="Parameter override name=value"),
    geometry: str = typer.Option(None, help="torus:AxB or cycle:N"),
    horizon: float = typer.Option(10.0, help="Time horizon"),
    checkpoints: int = typer.Option(11, help="Number of equally spaced checkpoints"),
    replicates: int = typer.Option(1000, help="Number of replicates"),
    seed: int = typer.Option(None, help="Base seed (default GROWTH_SEED)"),
    threads: int = typer.Option(None, help="Worker processes (default GROWTH_THREADS)"),
    output: Path = typer.Option(None, "--output", "-o", help="CSV file for the density series"),
) -> None:
    """Density of each active type at site 0, started from the largest configuration."""
    settings = _settings()
    growth = _resolve_model(model, param)
    geom = parse_geometry(geometry, growth)
    series = upper_invariant_density(
        growth,
        geom,
        horizon,
        replicates,
        seed=settings.seed if seed is None else seed,
        checkpoints=checkpoints,
        threads=settings.threads if threads is None else threads,
    )
    rows = [(format_float(t), label, format_float(est), format_float(se)) for t, label, est, se in series.rows()]
    _emit(_csv(["t", "type", "estimate", "se"], rows), output)
    if not series.monotone:
        err_console.print("⚠️ Density increased by more than 3 standard errors between checkpoints")


@app.command()
def converge(
    model: str = typer.Argument(..., help="Model file or zoo model name"),
    param: list[str] = typer.Option(None, "--param", "-p", help="Parameter override name=value"),
    geometry: str = typer.Option(None, help="torus:AxB or cycle:N"),
    window: str = typer.Option("0,1,2", help="Comma-separated window sites"),
    time: float = typer.Option(50.0, "--time", "-t", help="Observation time"),
    replicates: int = typer.Option(1000, help="Number of replicates"),
    seed: int = typer.Option(None, help="Base seed (default GROWTH_SEED)"),
    threads: int = typer.Option(None, help="Worker processes (default GROWTH_THREADS)"),
    initial: str = typer.Option("single", help="single, full or site=label,..."),
    tolerance: float = typer.Option(0.05, help="Largest accepted total variation"),
    output: Path = typer.Option(None, "--output", "-o", help="CSV file for the report"),
) -> None:
    """Compare the window law at time t with the survival mixture of the upper invariant law."""
    settings = _settings()
    growth = _resolve_model(model, param)
    geom = parse_geometry(geometry, growth)
    eta0 = parse_configuration(initial, geom, growth)
    sites = [int(s) for s in _parse_floats(window)]
    report = complete_convergence_test(
        growth,
        geom,
        eta0,
        sites,
        time,
        replicates,
        seed=settings.seed if seed is None else seed,
        tolerance=tolerance,
        threads=settings.threads if threads is None else threads,
    )
    row = [
        " ".join(str(s) for s in report.window),
        format_float(report.t),
        format_float(report.sigma_hat),
        format_float(report.tv),
        format_float(report.tolerance),
        report.verdict.value,
    ]
    _emit(_csv(["window", "t", "sigma_hat", "tv", "tolerance", "verdict"], [row]), output)
    if report.verdict != Verdict.OK:
        raise typer.Exit(code=1)


@app.command()
def zoo(
    name: str = typer.Argument(None, help="Zoo model to export; lists all models when omitted"),
    param: list[str] = typer.Option(None, "--param", "-p", help="Parameter override name=value"),
    output: Path = typer.Option(None, "--output", "-o", help="Write the model file here"),
) -> None:
    """List the built-in models or export one as a model file."""
    if name is None:
        table = Table(title="Built-in models")
        table.add_column("Name")
        table.add_column("Description")
        table.add_column("Parameters")
        for entry in ZOO.values():
            table.add_row(entry.name, entry.summary, ", ".join(entry.arguments) or "-")
        console.print(table)
        return
    _emit(dumps(_resolve_model(name, param)), output)


@app.callback()
def main(verbose: bool = typer.Option(False, "--verbose", "-v", help="Log debug output")):
    """Additive growth models CLI."""
    load_dotenv()
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(message)s",
        handlers=[RichHandler(console=err_console, show_path=False)],
        force=True,
    )


def run(argv: list[str] | None = None) -> int:
    """Run the CLI and return its exit code: 0 success, 1 validation failure, 2 usage error."""
    try:
        result = app(args=argv, prog_name="growth", standalone_mode=False)
    except click.UsageError as e:
        e.show()
        return 2
    except click.Abort:
        err_console.print("\nOperation cancelled.")
        return 1
    except GrowthModelError as e:
        err_console.print(f"❌ Error: {e}")
        if e.witness is not None:
            err_console.print(f"   witness: {e.witness!r}")
        return 1
    except ValueError as e:
        err_console.print(f"❌ Error: {e}")
        return 1
    return result if isinstance(result, int) else 0


def entry_point():
    """Entry point for the CLI."""
    sys.exit(run())
