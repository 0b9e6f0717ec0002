"""Command-line interface for bohmlab.

This module provides the Typer-based batch CLI:
- nodes: node census and tracks over the scenario window
- xpoints: X-points and their asymptotic curves around chosen nodes
- traj: Bohmian trajectories with loop annotations
- field: psi, velocity and potentials on a grid, optionally as frames
- chaos: stretching numbers for every initial condition
- oracle: closed-form checks of the single-node special case
- presets: list or write the shipped scenarios
- config: show the effective settings

Every computing subcommand writes resolved.json, its CSV tables and
manifest.json into --out. Exit code 1 means a configuration error, 2 a
numerical failure; outputs written before the failure are kept.
"""

import logging
import math
import platform
import time
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Optional, TypeVar

import numpy as np
import scipy
import typer
from rich.console import Console
from rich.table import Table

from bohmlab import __version__
from bohmlab.config import Settings, get_settings
from bohmlab.core.diagnostics import (
    convention_constant,
    integral_residual,
    node_hyperbola_residual,
    periodicity_check,
    stretching_number,
)
from bohmlab.core.dynamics import annotate_loops, integrate, total_loops
from bohmlab.core.errors import (
    BohmlabError,
    DegenerateState,
    DegenerateTime,
    NodeSingularity,
    NoXPointFound,
    ScenarioError,
    StepFailure,
)
from bohmlab.core.models import (
    AsymptoticCurve,
    ChaosReport,
    EventKind,
    NodeRecord,
    NodeStatus,
    NodeTrack,
    SuperpositionSpec,
    Trajectory,
    XPointRecord,
)
from bohmlab.core.nodes import node_census, track_nodes
from bohmlab.core.wavefield import evaluate_grid, velocity
from bohmlab.core.xpoints import asymptotic_curves, find_xpoints
from bohmlab.formats import tables
from bohmlab.log import configure_logging
from bohmlab.scenarios import PresetRegistry, Scenario, load_scenario

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

app = typer.Typer(
    name="bohmlab",
    help="Nodal points, X-points and chaotic Bohmian trajectories of 2-d oscillator superpositions.",
    no_args_is_help=True,
)

console = Console()

# Shared option declarations
ScenarioOption = typer.Option(..., "--scenario", "-s", help="Scenario YAML file.")
OutOption = typer.Option(..., "--out", "-o", help="Output directory.")
ThreadsOption = typer.Option(
    None, "--threads", "-j", min=1, help="Worker processes (default: BOHMLAB_THREADS or 1)."
)
SeedOption = typer.Option(None, "--seed", help="Override the scenario seed.")
LogLevelOption = typer.Option(None, "--log-level", help="Logging level (default: BOHMLAB_LOG_LEVEL).")


def version_callback(value: bool) -> None:
    """Print version and exit."""
    if value:
        console.print(f"bohmlab v{__version__}")
        raise typer.Exit()


@app.callback()
def main(
    version: bool = typer.Option(
        False,
        "--version",
        "-v",
        callback=version_callback,
        is_eager=True,
        help="Show version and exit.",
    ),
) -> None:
    """bohmlab: a numerical lab for Bohmian nodal-point dynamics."""
    pass


# =============================================================================
# Run plumbing
# =============================================================================


class RunContext:
    """What a subcommand body needs: the scenario, output paths and workers."""

    def __init__(self, scenario: Scenario, out: Path, workers: int, settings: Settings) -> None:
        self.scenario = scenario
        self.spec: SuperpositionSpec = scenario.to_spec()
        self.out = out
        self.workers = workers
        self.settings = settings
        self.outputs: list[str] = []
        self.failures: list[str] = []

    def write_csv(self, name: str, columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> int:
        count = tables.write_csv(self.out / name, columns, rows)
        self.outputs.append(name)
        return count

    def fail(self, message: str) -> None:
        """Record a numerical failure; the run continues and exits with code 2."""
        logger.warning(message)
        self.failures.append(message)


def parallel_map(func: Callable[[T], R], items: Sequence[T], workers: int) -> list[R]:
    """Ordered map, in worker processes when more than one is requested."""
    if workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as executor:
        return list(executor.map(func, items))


def _manifest(command: str, ctx: RunContext, wall_time: float, code: int, error: str | None) -> dict[str, Any]:
    return {
        "bohmlab": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
        "command": command,
        "scenario": ctx.scenario.name,
        "seed": ctx.scenario.seed,
        "threads": ctx.workers,
        "wall_time_s": round(wall_time, 3),
        "exit_code": code,
        "outputs": ctx.outputs,
        "failures": ctx.failures,
        "error": error,
    }


def run_command(
    command: str,
    scenario_file: Path,
    out: Path,
    threads: int | None,
    seed: int | None,
    log_level: str | None,
    body: Callable[[RunContext], None],
) -> None:
    """Load the scenario, run a subcommand body and write the run records.

    Raises:
        typer.Exit: With code 1 on configuration errors, 2 on numerical failures
    """
    settings = get_settings()
    configure_logging(log_level or settings.log_level)
    workers = threads or settings.threads
    started = time.perf_counter()

    try:
        scenario = load_scenario(scenario_file)
        if seed is not None:
            scenario = scenario.model_copy(update={"seed": seed})
        scenario = scenario.resolved(settings)
    except ScenarioError as e:
        console.print(f"[red]{e}[/red]")
        raise typer.Exit(1)

    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        console.print(f"[red]Cannot create output directory {out}: {e}[/red]")
        raise typer.Exit(1)

    tables.write_json(out / "resolved.json", scenario.model_dump(mode="json"))
    ctx = RunContext(scenario, out, workers, settings)
    ctx.outputs.append("resolved.json")
    code = 0
    error: str | None = None
    try:
        body(ctx)
        if ctx.failures:
            code = 2
    except (ScenarioError, ValueError) as e:
        code, error = 1, str(e)
    except BohmlabError as e:
        code, error = 2, str(e)
    except Exception as e:
        logger.exception("%s failed", command)
        code, error = 2, f"{type(e).__name__}: {e}"

    wall_time = time.perf_counter() - started
    ctx.outputs.append("manifest.json")
    tables.write_json(out / "manifest.json", _manifest(command, ctx, wall_time, code, error))

    if error:
        console.print(f"[red]{error}[/red]")
    for message in ctx.failures:
        console.print(f"[yellow]{message}[/yellow]")
    if code:
        console.print(f"[dim]Partial outputs kept in {out}[/dim]")
        raise typer.Exit(code)
    console.print(f"[green]Wrote {len(ctx.outputs)} files to {out} in {wall_time:.1f}s[/green]")


# =============================================================================
# Node Commands
# =============================================================================


def _nodes_body(ctx: RunContext) -> None:
    sc = ctx.scenario
    tracks = track_nodes(
        ctx.spec,
        sc.t0,
        sc.t1,
        dt_max=sc.dt,
        settings=ctx.settings,
        region=sc.region,
        resolution=sc.scan_resolution,
    )
    ctx.write_csv("nodes.csv", tables.NODE_COLUMNS, tables.node_rows(tracks))
    ctx.write_csv("events.csv", tables.EVENT_COLUMNS, tables.event_rows(tracks))

    table = Table(title=f"Node tracks, t in [{sc.t0:g}, {sc.t1:g}]")
    table.add_column("Tracks", style="cyan")
    for kind in EventKind:
        table.add_column(kind.value.replace("_", " "), style="green")
    counts = [sum(len(tr.events_of(kind)) for tr in tracks) for kind in EventKind]
    table.add_row(str(len(tracks)), *(str(c) for c in counts))
    console.print(table)


@app.command("nodes")
def nodes_command(
    scenario: Path = ScenarioOption,
    out: Path = OutOption,
    threads: Optional[int] = ThreadsOption,
    seed: Optional[int] = SeedOption,
    log_level: Optional[str] = LogLevelOption,
) -> None:
    """Track every nodal point through the scenario window."""
    run_command("nodes", scenario, out, threads, seed, log_level, _nodes_body)


# =============================================================================
# X-point Commands
# =============================================================================


def _xpoint_job(
    job: tuple[SuperpositionSpec, NodeRecord, float, float, float, list[tuple[float, float]]],
) -> tuple[list[XPointRecord], list[list[AsymptoticCurve]], str | None]:
    spec, node, t, radius, s_span, positions = job
    try:
        found = find_xpoints(spec, node, t, search_radius=radius, nodes=positions)
    except NoXPointFound as e:
        logger.warning("%s", e)
        return [], [], None
    except BohmlabError as e:
        return [], [], f"node {node.id}: {e}"
    curves = [asymptotic_curves(spec, xp, s_span=s_span, search_radius=radius) for xp in found]
    return found, curves, None


def _select_nodes(census: Sequence[NodeRecord], wanted: Sequence[int]) -> list[NodeRecord]:
    if not wanted:
        return [node for node in census if node.status == NodeStatus.ACTIVE]
    by_id = {node.id: node for node in census}
    missing = [node_id for node_id in wanted if node_id not in by_id]
    if missing:
        raise ScenarioError(f"xpoint_nodes {missing} not in the census of {len(census)} nodes")
    return [by_id[node_id] for node_id in wanted]


def _xpoints_body(ctx: RunContext) -> None:
    sc = ctx.scenario
    t = sc.xpoint_time if sc.xpoint_time is not None else sc.t0
    radius = sc.search_radius or ctx.settings.xpoint_search_radius
    census = node_census(ctx.spec, t, ctx.settings, sc.region, sc.scan_resolution)
    chosen = _select_nodes(census, sc.xpoint_nodes)
    positions = [node.position for node in census]
    jobs = [(ctx.spec, node, t, radius, sc.s_span, positions) for node in chosen]
    results = parallel_map(_xpoint_job, jobs, ctx.workers)

    table = Table(title=f"X-points at t = {t:g}")
    table.add_column("Node", style="cyan")
    table.add_column("X-points", style="green")
    table.add_column("Truncated branches", style="yellow")

    all_xpoints: list[XPointRecord] = []
    for node, (found, curves, message) in zip(chosen, results):
        if message:
            ctx.fail(message)
        all_xpoints.extend(found)
        for index, branch_set in enumerate(curves, start=1):
            ctx.write_csv(
                f"asymptotic-n{node.id}-x{index}.csv",
                tables.ASYMPTOTIC_COLUMNS,
                tables.asymptotic_rows(branch_set),
            )
        truncated = sum(c.truncated for branch_set in curves for c in branch_set)
        table.add_row(str(node.id), str(len(found)), str(truncated))
    ctx.write_csv("xpoints.csv", tables.XPOINT_COLUMNS, tables.xpoint_rows(all_xpoints))
    console.print(table)


@app.command("xpoints")
def xpoints_command(
    scenario: Path = ScenarioOption,
    out: Path = OutOption,
    threads: Optional[int] = ThreadsOption,
    seed: Optional[int] = SeedOption,
    log_level: Optional[str] = LogLevelOption,
) -> None:
    """Find X-points around nodes and integrate their asymptotic curves."""
    run_command("xpoints", scenario, out, threads, seed, log_level, _xpoints_body)


# =============================================================================
# Trajectory Commands
# =============================================================================


def _trajectory_job(
    job: tuple[
        SuperpositionSpec, tuple[float, float, float], float, float, float, float | None, list[NodeTrack]
    ],
) -> tuple[Trajectory, str | None]:
    spec, ic, t_end, rel_tol, abs_tol, sample_dt, node_tracks = job
    try:
        return integrate(spec, ic, t_end, rel_tol, abs_tol, sample_dt=sample_dt, node_tracks=node_tracks), None
    except StepFailure as e:
        partial = e.partial if isinstance(e.partial, Trajectory) else Trajectory(ic=ic, samples=[(ic[2], ic[0], ic[1])])
        return partial, f"trajectory from {ic}: {e}"
    except NodeSingularity as e:
        return Trajectory(ic=ic, samples=[(ic[2], ic[0], ic[1])]), f"trajectory from {ic}: {e}"


def _traj_body(ctx: RunContext) -> None:
    sc = ctx.scenario
    if not sc.initial_conditions:
        raise ScenarioError("traj needs at least one initial condition")
    loop_tracks: list[NodeTrack] = []
    if sc.loop_nodes:
        tracks = {
            tr.id: tr
            for tr in track_nodes(
                ctx.spec, sc.t0, sc.t1, sc.dt, ctx.settings, sc.region, sc.scan_resolution
            )
        }
        missing = [node_id for node_id in sc.loop_nodes if node_id not in tracks]
        if missing:
            raise ScenarioError(f"loop_nodes {missing} are not tracked ({len(tracks)} tracks)")
        loop_tracks = [tracks[node_id] for node_id in sc.loop_nodes]

    # loop counting needs every accepted step, dt sampling would alias fast windings
    sample_dt = None if loop_tracks else sc.dt
    jobs = [
        (ctx.spec, ic, sc.t1, sc.tolerances.rel_tol, sc.tolerances.abs_tol, sample_dt, loop_tracks)
        for ic in sc.ics
    ]
    results = parallel_map(_trajectory_job, jobs, ctx.workers)

    trajectories: list[Trajectory] = []
    for trajectory, message in results:
        if message:
            ctx.fail(message)
        trajectories.append(annotate_loops(trajectory, loop_tracks, ctx.settings.loop_radius))
    ctx.write_csv("traj.csv", tables.TRAJ_COLUMNS, tables.trajectory_rows(trajectories))
    ctx.write_csv("loops.csv", tables.LOOP_COLUMNS, tables.loop_rows(trajectories))

    table = Table(title="Trajectories")
    table.add_column("#", style="cyan")
    table.add_column("Start (x, y, t)")
    table.add_column("End t", style="green")
    table.add_column("Steps")
    table.add_column("Loops", style="magenta")
    for index, traj in enumerate(trajectories, start=1):
        x0, y0, t0 = traj.ic
        table.add_row(
            str(index),
            f"({x0:g}, {y0:g}, {t0:g})",
            f"{traj.final[0]:.6g}",
            str(traj.stats.steps),
            f"{total_loops(traj.loop_annotations):.2f}",
        )
    console.print(table)


@app.command("traj")
def traj_command(
    scenario: Path = ScenarioOption,
    out: Path = OutOption,
    threads: Optional[int] = ThreadsOption,
    seed: Optional[int] = SeedOption,
    log_level: Optional[str] = LogLevelOption,
) -> None:
    """Integrate Bohmian trajectories from the scenario initial conditions."""
    run_command("traj", scenario, out, threads, seed, log_level, _traj_body)


# =============================================================================
# Field Commands
# =============================================================================


def _field_job(job: tuple[SuperpositionSpec, Scenario, float, bool]) -> list[Sequence[Any]]:
    spec, sc, t, with_time = job
    xmin, xmax, ymin, ymax = sc.region
    X, Y = np.meshgrid(
        np.linspace(xmin, xmax, sc.resolution), np.linspace(ymin, ymax, sc.resolution)
    )
    grid = evaluate_grid(spec, X, Y, t, sc.q_form)
    return tables.grid_rows(grid, t if with_time else None)


def _field_body(ctx: RunContext) -> None:
    sc = ctx.scenario
    if not sc.frames:
        rows = _field_job((ctx.spec, sc, sc.t0, False))
        count = ctx.write_csv("field-grid.csv", tables.GRID_COLUMNS, rows)
        console.print(f"Field at t = {sc.t0:g}: {count} grid points")
        return
    jobs = [(ctx.spec, sc, t, True) for t in sc.frames]
    frames = parallel_map(_field_job, jobs, ctx.workers)
    count = ctx.write_csv(
        "field-frames.csv", tables.FRAME_COLUMNS, (row for frame in frames for row in frame)
    )
    console.print(f"Field at {len(sc.frames)} times: {count} rows")


@app.command("field")
def field_command(
    scenario: Path = ScenarioOption,
    out: Path = OutOption,
    threads: Optional[int] = ThreadsOption,
    seed: Optional[int] = SeedOption,
    log_level: Optional[str] = LogLevelOption,
) -> None:
    """Export psi, velocity and potentials on the scenario grid."""
    run_command("field", scenario, out, threads, seed, log_level, _field_body)


# =============================================================================
# Chaos Commands
# =============================================================================


def _chaos_job(
    job: tuple[SuperpositionSpec, tuple[float, float, float], float, float, float, float, int],
) -> ChaosReport:
    spec, ic, horizon, renorm_dt, rel_tol, abs_tol, seed = job
    return stretching_number(spec, ic, horizon, renorm_dt, rel_tol, abs_tol, seed)


def _chaos_body(ctx: RunContext) -> None:
    sc = ctx.scenario
    if not sc.initial_conditions:
        raise ScenarioError("chaos needs at least one initial condition")
    jobs = [
        (
            ctx.spec,
            ic,
            sc.chaos_horizon,
            sc.renorm_dt,
            sc.tolerances.rel_tol,
            sc.tolerances.abs_tol,
            sc.seed + index,
        )
        for index, ic in enumerate(sc.ics)
    ]
    reports = parallel_map(_chaos_job, jobs, ctx.workers)
    for report in reports:
        if report.horizon < sc.chaos_horizon - 1e-9:
            ctx.fail(f"stretching number from {report.ic} stopped at span {report.horizon:.6g}")
    ctx.write_csv("chaos.csv", tables.CHAOS_COLUMNS, tables.chaos_rows(reports))

    table = Table(title=f"Stretching numbers over {sc.chaos_horizon:g}")
    table.add_column("Start (x, y)", style="cyan")
    table.add_column("Stretching", style="green")
    table.add_column("95% band")
    table.add_column("Class", style="magenta")
    for report in reports:
        low, high = report.confidence
        table.add_row(
            f"({report.ic[0]:g}, {report.ic[1]:g})",
            f"{report.stretching_number:.4g}",
            f"[{low:.3g}, {high:.3g}]",
            report.classification.value,
        )
    console.print(table)


@app.command("chaos")
def chaos_command(
    scenario: Path = ScenarioOption,
    out: Path = OutOption,
    threads: Optional[int] = ThreadsOption,
    seed: Optional[int] = SeedOption,
    log_level: Optional[str] = LogLevelOption,
) -> None:
    """Classify initial conditions as ordered or chaotic."""
    run_command("chaos", scenario, out, threads, seed, log_level, _chaos_body)


# =============================================================================
# Oracle Commands
# =============================================================================


def _oracle_body(ctx: RunContext) -> None:
    sc = ctx.scenario
    spec = ctx.spec
    rows: list[Sequence[Any]] = []
    point = (0.37, -0.81, 0.9)
    rows.append(("convention_constant", point[2], convention_constant(spec, point)))

    times = sc.frames or [float(t) for t in np.linspace(sc.t0, sc.t1, 11)]
    for t in times:
        try:
            rows.append(("node_hyperbola_residual", t, node_hyperbola_residual(spec, t, sc.region)))
        except DegenerateTime as e:
            logger.warning("Hyperbola check skipped: %s", e)

    for index, ic in enumerate(sc.ics, start=1):
        trajectory, message = _trajectory_job(
            (spec, ic, sc.t1, sc.tolerances.rel_tol, sc.tolerances.abs_tol, sc.dt, [])
        )
        if message:
            ctx.fail(message)
        for t, x, y in trajectory.samples:
            try:
                vx, vy = velocity(spec, x, y, t)
                rows.append((f"integral_residual/{index}", t, integral_residual(spec, x, y, vx, vy)))
            except (DegenerateState, NodeSingularity):
                continue
        if sc.period is not None:
            try:
                _, error = periodicity_check(
                    spec, ic, sc.period, rel_tol=sc.tolerances.rel_tol, abs_tol=sc.tolerances.abs_tol
                )
                rows.append((f"period_return/{index}", ic[2] + sc.period, error))
            except StepFailure as e:
                ctx.fail(f"periodicity from {ic}: {e}")

    ctx.write_csv("oracle.csv", tables.ORACLE_COLUMNS, rows)

    worst: dict[str, float] = {}
    for check, _, value in rows:
        family = str(check).split("/")[0]
        if math.isfinite(value):
            worst[family] = max(worst.get(family, 0.0), abs(value))
    table = Table(title="Closed-form checks (largest |value|)")
    table.add_column("Check", style="cyan")
    table.add_column("Value", style="green")
    for family, value in worst.items():
        table.add_row(family, f"{value:.3e}")
    console.print(table)


@app.command("oracle")
def oracle_command(
    scenario: Path = ScenarioOption,
    out: Path = OutOption,
    threads: Optional[int] = ThreadsOption,
    seed: Optional[int] = SeedOption,
    log_level: Optional[str] = LogLevelOption,
) -> None:
    """Verify integrators and node finders against the closed-form special case."""
    run_command("oracle", scenario, out, threads, seed, log_level, _oracle_body)


# =============================================================================
# Preset Commands
# =============================================================================


@app.command("presets")
def presets_command(
    name: Optional[str] = typer.Argument(None, help="Preset to print or write."),
    write: Optional[Path] = typer.Option(None, "--write", "-w", help="Write the preset to this file."),
) -> None:
    """List shipped scenario presets, or print / write one of them."""
    if name is None:
        table = Table(title="Scenario Presets")
        table.add_column("Name", style="cyan")
        table.add_column("Modes", style="green")
        table.add_column("omega1, omega2")
        table.add_column("Window", style="dim")
        table.add_column("ICs")
        for preset in PresetRegistry.list_presets():
            sc = PresetRegistry.get(preset)
            table.add_row(
                preset,
                " ".join(f"({m},{n})" for m, n in sc.modes),
                f"{sc.omega1:.6g}, {sc.omega2:.6g}",
                f"[{sc.t0:g}, {sc.t1:.6g}]",
                str(len(sc.initial_conditions)),
            )
        console.print(table)
        return

    try:
        sc = PresetRegistry.get(name)
    except ValueError as e:
        console.print(f"[red]{e}[/red]")
        raise typer.Exit(1)

    if write is None:
        typer.echo(sc.to_yaml(), nl=False)
        return
    try:
        write.parent.mkdir(parents=True, exist_ok=True)
        write.write_text(sc.to_yaml(), encoding="utf-8")
    except OSError as e:
        console.print(f"[red]Error writing {write}: {e}[/red]")
        raise typer.Exit(1)
    console.print(f"[green]Wrote preset '{name}' to {write}[/green]")


# =============================================================================
# Config Command
# =============================================================================


@app.command("config")
def show_config() -> None:
    """Show current configuration."""
    settings = get_settings()

    table = Table(title="bohmlab Configuration")
    table.add_column("Setting", style="cyan")
    table.add_column("Value", style="green")
    table.add_column("Description", style="dim")

    for field_name, info in Settings.model_fields.items():
        table.add_row(field_name, str(getattr(settings, field_name)), info.description or "")

    console.print(table)


if __name__ == "__main__":
    app()
