"""
navbench
Command-line entry point for single episodes, benchmark grids, landmark and
path inspection, and re-aggregation of stored results.

Exit codes: 0 on completion, 1 on configuration errors (and unreachable goals
for `landmarks` / `plan`), 2 on any other failure.
"""

import json
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Tuple

import typer
import yaml
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table
from sqlite_utils import Database

from core.bspline import evaluate, sample_times
from core.config import (
    AppSettings,
    BenchSettings,
    GeneratorConfig,
    OptConfig,
    SimConfig,
    build_settings,
    effective_config,
    get_settings,
)
from core.constants import GeneratorKind, MotionModel
from core.errors import ConfigurationError, UnreachableGoalError
from core.globalplan import GlobalPath, parameterize, plan_global
from core.logger import configure_logging, get_logger
from core.scenario import (
    Scenario,
    ScenarioSpec,
    build_scenario,
    load_scenario_spec,
)
from core.waypoint import select_landmarks
from services import (
    BenchmarkService,
    EpisodeRunner,
    StreamingServiceResponse,
    aggregate,
    build_grid,
    read_results_csv,
    read_results_db,
    render_report,
    write_report,
    write_results_csv,
)

logger = get_logger("cli")
console = Console()
err_console = Console(stderr=True)

app = typer.Typer(
    name="navbench",
    help="Waypoint-generator episodes, benchmarks and landmark inspection.",
    add_completion=False,
)

# region Shared Options

SCENARIO = typer.Option(None, "--scenario", help="YAML scenario file.")
MAP = typer.Option(None, "--map", help="Bundled map name or map file path.")
START = typer.Option(None, "--start", help="Start position as 'x,y'.")
GOAL = typer.Option(None, "--goal", help="Goal position as 'x,y'.")
SEED = typer.Option(None, "--seed", help="Obstacle seed (bench: base seed).")
D_AHEAD = typer.Option(None, "--d-ahead", help="Look-ahead distance [m].")
T_LIM = typer.Option(None, "--t-lim", help="Stall window [s].")
PSI_THRESH = typer.Option(None, "--psi-thresh", help="Landmark steering threshold [rad].")
T_EVAL = typer.Option(None, "--t-eval", help="Local trajectory evaluation offset [s].")
SPACING = typer.Option(None, "--spacing", help="SUB-WP waypoint spacing [m].")


@contextmanager
def _cli_errors(*config_errors: type) -> Iterator[None]:
    try:
        yield
    except typer.Exit:
        raise
    except (ConfigurationError, *config_errors) as e:
        logger.error("%s", e)
        err_console.print(f"[bold red]error:[/bold red] {e}", highlight=False)
        raise typer.Exit(1)
    except Exception as e:
        logger.exception("Internal failure")
        err_console.print(f"[bold red]internal error:[/bold red] {e}", highlight=False)
        raise typer.Exit(2)


def _point(value: Optional[str], label: str) -> Optional[Tuple[float, float]]:
    if value is None:
        return None
    try:
        x, y = (float(part) for part in value.split(","))
    except ValueError:
        raise ConfigurationError(f"--{label} expects 'x,y', got '{value}'")
    return (x, y)


def _generator_config(
    base: Optional[Dict[str, Any]] = None, **flags: Any
) -> GeneratorConfig:
    overrides = dict(base or {})
    overrides.update({k: v for k, v in flags.items() if v is not None})
    return build_settings(GeneratorConfig, overrides)


def _scenario_spec(
    scenario: Optional[Path],
    map_name: Optional[str],
    default_map: str,
    **overrides: Any,
) -> Tuple[ScenarioSpec, Optional[Path]]:
    updates = {k: v for k, v in overrides.items() if v is not None}
    if map_name is not None:
        updates["map"] = map_name
    if scenario is not None:
        spec = load_scenario_spec(scenario)
        data = {**spec.model_dump(), **updates}
        base_dir = scenario.parent
    else:
        data = {"map": default_map, **updates}
        base_dir = None
    try:
        return ScenarioSpec.model_validate(data), base_dir
    except ValidationError as e:
        first = e.errors()[0]
        loc = ".".join(str(part) for part in first.get("loc", ())) or "?"
        raise ConfigurationError(f"invalid value for '{loc}': {first['msg']}") from e


def _echo_config(config: Dict[str, Any]) -> None:
    logger.info("Effective configuration", extra={"config": config})
    typer.echo("# effective configuration")
    for line in yaml.safe_dump(config, sort_keys=True).splitlines():
        typer.echo(f"#   {line}")


def _print_status(status: StreamingServiceResponse) -> None:
    colour = {
        "success": "green",
        "warning": "yellow",
        "error": "red",
    }.get(status.status, "cyan")
    console.print(f"[{colour}]{status.status}[/{colour}]: {status.message}", highlight=False)


def _plan(scn: Scenario, clearance: float) -> GlobalPath:
    return plan_global(scn.grid, scn.start, scn.goal, clearance=clearance)


# endregion
# region Callback


@app.callback()
def _setup(
    log_level: Optional[str] = typer.Option(None, "--log-level", help="Console log level."),
    log_file: Optional[Path] = typer.Option(None, "--log-file", help="JSON-lines log file."),
) -> None:
    settings = get_settings(AppSettings)
    configure_logging(log_level or settings.log_level, log_file or settings.log_file)


# endregion
# region Commands


@app.command()
def run(
    scenario: Optional[Path] = SCENARIO,
    map_name: Optional[str] = MAP,
    generator: GeneratorKind = typer.Option(
        GeneratorKind.LM_WP, "--generator", case_sensitive=False
    ),
    obstacles: Optional[int] = typer.Option(None, "--obstacles", help="Obstacle count."),
    v_obs: Optional[float] = typer.Option(None, "--v-obs", help="Obstacle speed [m/s]."),
    motion: Optional[MotionModel] = typer.Option(None, "--motion"),
    seed: Optional[int] = SEED,
    start: Optional[str] = START,
    goal: Optional[str] = GOAL,
    d_ahead: Optional[float] = D_AHEAD,
    t_lim: Optional[float] = T_LIM,
    psi_thresh: Optional[float] = PSI_THRESH,
    t_eval: Optional[float] = T_EVAL,
    spacing: Optional[float] = SPACING,
    out: Path = typer.Option(Path("trace.jsonl"), "--out", help="Trace file."),
) -> None:
    """Run one episode, write its trace and print a one-line summary."""
    with _cli_errors():
        spec, base_dir = _scenario_spec(
            scenario,
            map_name,
            "empty",
            obstacles=obstacles,
            v_obs=v_obs,
            motion=motion,
            seed=seed,
            start=_point(start, "start"),
            goal=_point(goal, "goal"),
        )
        gen_cfg = _generator_config(
            spec.generator,
            d_ahead=d_ahead,
            t_lim=t_lim,
            psi_thresh=psi_thresh,
            t_eval=t_eval,
            sub_wp_spacing=spacing,
        )
        sim_cfg = build_settings(SimConfig)
        opt_cfg = build_settings(OptConfig)
        _echo_config(
            {
                "scenario": spec.model_dump(mode="json"),
                "generator_kind": generator.value,
                **effective_config(generator=gen_cfg, sim=sim_cfg, opt=opt_cfg),
            }
        )
        scn = build_scenario(spec, base_dir)
        runner = EpisodeRunner(gen_cfg, sim_cfg, opt_cfg, logger)
        for status in runner.run(scn, generator, trace_path=out):
            _print_status(status)
        m = runner.result.metrics
        typer.echo(
            f"map={scn.map_name} generator={generator.value} seed={scn.seed} "
            f"time_s={m.time_s:.3f} path_m={m.path_m:.3f} collisions={m.collisions} "
            f"success={int(m.success)} arrived={int(m.arrived)} "
            f"replans={m.replans} fallbacks={m.fallbacks} trace={out}"
        )


@app.command()
def bench(
    maps: Optional[List[str]] = typer.Option(None, "--map", help="Repeat for several maps."),
    counts: Optional[List[int]] = typer.Option(None, "--count", help="Obstacle counts."),
    velocities: Optional[List[float]] = typer.Option(None, "--velocity", help="Obstacle speeds."),
    generators: Optional[List[GeneratorKind]] = typer.Option(
        None, "--generator", case_sensitive=False
    ),
    runs: Optional[int] = typer.Option(None, "--runs", help="Runs per cell."),
    motion: Optional[MotionModel] = typer.Option(None, "--motion"),
    seed: Optional[int] = SEED,
    jobs: Optional[int] = typer.Option(None, "--jobs", help="Worker processes."),
    d_ahead: Optional[float] = D_AHEAD,
    t_lim: Optional[float] = T_LIM,
    psi_thresh: Optional[float] = PSI_THRESH,
    t_eval: Optional[float] = T_EVAL,
    spacing: Optional[float] = SPACING,
    out: Path = typer.Option(Path("bench_out"), "--out", help="Output directory."),
    db: Optional[Path] = typer.Option(None, "--db", help="Run database (default <out>/runs.db)."),
) -> None:
    """Run a benchmark grid and write results.csv, report.txt and report.json."""
    with _cli_errors():
        settings = build_settings(
            BenchSettings,
            {
                "maps": maps or None,
                "obstacle_counts": counts or None,
                "velocities": velocities or None,
                "generators": generators or None,
                "runs_per_cell": runs,
                "motion": motion.value if motion else None,
                "base_seed": seed,
                "jobs": jobs,
            },
        )
        gen_cfg = _generator_config(
            d_ahead=d_ahead,
            t_lim=t_lim,
            psi_thresh=psi_thresh,
            t_eval=t_eval,
            sub_wp_spacing=spacing,
        )
        sim_cfg = build_settings(SimConfig)
        opt_cfg = build_settings(OptConfig)
        _echo_config(
            effective_config(bench=settings, generator=gen_cfg, sim=sim_cfg, opt=opt_cfg)
        )
        grid = build_grid(settings)
        out.mkdir(parents=True, exist_ok=True)
        service = BenchmarkService(
            settings,
            gen_cfg,
            sim_cfg,
            opt_cfg,
            db=Database(db or out / "runs.db"),
            logger=logger,
        )
        for status in service.run(grid):
            if status.status != "progress":
                _print_status(status)
        results = write_results_csv(service.records, out / "results.csv")
        report = aggregate(service.records, settings)
        text_path, json_path = write_report(report, out)
        typer.echo(render_report(report))
        typer.echo(f"results={results} report={text_path} json={json_path}")


@app.command()
def landmarks(
    scenario: Optional[Path] = SCENARIO,
    map_name: Optional[str] = MAP,
    start: Optional[str] = START,
    goal: Optional[str] = GOAL,
    psi_thresh: Optional[float] = PSI_THRESH,
    d_ahead: Optional[float] = D_AHEAD,
    out: Optional[Path] = typer.Option(None, "--out", help="Geometry dump (JSON)."),
) -> None:
    """Plan the global path and list the landmarks selected along it."""
    with _cli_errors(UnreachableGoalError):
        spec, base_dir = _scenario_spec(
            scenario,
            map_name,
            "office",
            obstacles=0,
            start=_point(start, "start"),
            goal=_point(goal, "goal"),
        )
        gen_cfg = _generator_config(spec.generator, psi_thresh=psi_thresh, d_ahead=d_ahead)
        sim_cfg = build_settings(SimConfig)
        _echo_config(effective_config(generator=gen_cfg, sim=sim_cfg))
        scn = build_scenario(spec, base_dir)
        path = _plan(scn, sim_cfg.plan_clearance)
        spline = parameterize(path, gen_cfg.nominal_speed)
        queue = select_landmarks(spline, path.goal, gen_cfg)

        typer.echo(f"path: {len(path)} poses, {path.length:.2f} m")
        typer.echo(
            f"spline: degree {spline.degree}, {len(spline.control_points)} control points, "
            f"dt {spline.dt:.3f} s, duration {spline.duration:.2f} s"
        )
        typer.echo(f"interior landmarks: {len(queue.interior)}")
        table = Table("#", "x", "y", "psi [rad]", "kind")
        for i, (p, psi) in enumerate(zip(queue.points, queue.psi)):
            kind = "goal" if i == len(queue) - 1 else "landmark"
            table.add_row(str(i), f"{p.x:.2f}", f"{p.y:.2f}", f"{psi:.3f}", kind)
        console.print(table)

        if out is not None:
            samples = evaluate(spline, sample_times(spline, spline.dt / 4))
            geometry = {
                "map": scn.map_name,
                "path": [list(p) for p in path.poses],
                "spline": samples.tolist(),
                "landmarks": [
                    {"x": p.x, "y": p.y, "psi": psi}
                    for p, psi in zip(queue.points, queue.psi)
                ],
            }
            out.parent.mkdir(parents=True, exist_ok=True)
            out.write_text(json.dumps(geometry, indent=2), encoding="utf-8")
            typer.echo(f"geometry={out}")


@app.command()
def plan(
    scenario: Optional[Path] = SCENARIO,
    map_name: Optional[str] = MAP,
    start: Optional[str] = START,
    goal: Optional[str] = GOAL,
    out: Optional[Path] = typer.Option(None, "--out", help="Path poses (CSV)."),
) -> None:
    """Plan and print the global path."""
    with _cli_errors(UnreachableGoalError):
        spec, base_dir = _scenario_spec(
            scenario,
            map_name,
            "office",
            obstacles=0,
            start=_point(start, "start"),
            goal=_point(goal, "goal"),
        )
        sim_cfg = build_settings(SimConfig)
        _echo_config(effective_config(sim=sim_cfg))
        scn = build_scenario(spec, base_dir)
        path = _plan(scn, sim_cfg.plan_clearance)
        typer.echo(
            f"path: {len(path)} poses, {path.length:.2f} m "
            f"from ({scn.start.x:g}, {scn.start.y:g}) to ({scn.goal.x:g}, {scn.goal.y:g})"
        )
        lines = ["x,y"] + [f"{p[0]:.3f},{p[1]:.3f}" for p in path.poses]
        if out is None:
            typer.echo("\n".join(lines))
        else:
            out.parent.mkdir(parents=True, exist_ok=True)
            out.write_text("\n".join(lines) + "\n", encoding="utf-8")
            typer.echo(f"poses={out}")


@app.command()
def report(
    results: Optional[Path] = typer.Option(None, "--results", help="results.csv to aggregate."),
    db: Optional[Path] = typer.Option(None, "--db", help="Run database to aggregate."),
    out: Optional[Path] = typer.Option(None, "--out", help="Directory for report.txt/json."),
) -> None:
    """Re-aggregate stored per-run records into the report table."""
    with _cli_errors():
        if results is None and db is None:
            raise ConfigurationError("pass --results or --db")
        if results is not None:
            records = read_results_csv(results)
        else:
            if not db.is_file():
                raise ConfigurationError(f"database not found: {db}")
            records = read_results_db(Database(db))
        rep = aggregate(records)
        typer.echo(render_report(rep))
        if out is not None:
            text_path, json_path = write_report(rep, out)
            typer.echo(f"report={text_path} json={json_path}")


# endregion


def main() -> None:
    app()


__all__ = ["app", "main"]
