# region Docstring
"""
services.bench
Benchmark grid construction, batched execution, persistence and reporting.
Overview:
- build_grid() expands BenchSettings into one BenchmarkJob per
    (map, obstacle count, velocity, generator, run).
- BenchmarkService executes the jobs in-process or on a process pool, stores
    each RunRecord in the sqlite `runs` table as soon as it finishes and yields
    one BenchProgress message per job.
- aggregate() reduces RunRecords into an AggregateReport; render_report() turns
    it into the text table and write_report() saves text and JSON.
Contents:
- Classes:
    - BenchmarkJob: one grid entry, cheap to pickle; builds its Scenario lazily.
    - BenchmarkService: runs a grid and streams progress.
- Functions:
    - build_grid(settings) -> List[BenchmarkJob]
    - execute_job(job, gen_cfg, sim_cfg, opt_cfg) -> RunRecord
    - write_results_csv / read_results_csv / read_results_db
    - aggregate(records, ...) -> AggregateReport
    - directional_checks(report) -> List[DirectionalCheck]
    - render_report(report) -> str
    - write_report(report, out_dir) -> Tuple[Path, Path]
Design notes:
- Seeds are paired: every generator of a cell sees run r with the same seed,
    hence the same obstacle realization step for step.
- A job that raises is recorded with its error text and counted as failed in
    its cell; the rest of the grid keeps running.
- The results CSV is written in job order after the grid completes, so
    identical settings give a byte-identical file regardless of worker timing.
"""

# endregion
# region Imports
import csv
import io
import itertools
import math
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from logging import Logger as T_Logger
from pathlib import Path
from typing import (
    Dict,
    Generator,
    Iterable,
    List,
    Optional,
    Sequence,
    Tuple,
)

from rich.console import Console
from rich.table import Table
from sqlite_utils import Database

from core.config import BenchSettings, GeneratorConfig, OptConfig, SimConfig
from core.constants import RESULT_COLUMNS, BundledMap, GeneratorKind, MotionModel
from core.errors import ConfigurationError
from core.logger import get_logger
from core.models import (
    AggregateReport,
    CellStats,
    DirectionalCheck,
    GeneratorSummary,
    RunRecord,
)
from core.scenario import Scenario, ScenarioSpec, build_scenario
from core.world import is_bundled, load_map

from .models import BenchProgress
from .sim import COLLISION_RULE, run_episode

logger = get_logger("bench")

RUNS_TABLE = "runs"
RUNS_PK = ("map", "count", "v_obs", "generator", "run_idx", "seed")
RUNS_COLUMNS = {"time_s": float, "path_m": float, "collisions": int, "success": int}
DENSE_COUNT = 20
DENSE_V_OBS = 0.3

# endregion
# region Grid


@dataclass(frozen=True)
class BenchmarkJob:
    """One grid entry."""

    index: int
    map: str
    count: int
    v_obs: float
    generator: GeneratorKind
    run_idx: int
    seed: int
    motion: MotionModel = MotionModel.LINEAR_BOUNCE

    @property
    def cell(self) -> Tuple[str, int, float, GeneratorKind]:
        return (self.map, self.count, self.v_obs, self.generator)

    def scenario(self) -> Scenario:
        return build_scenario(
            ScenarioSpec(
                map=self.map,
                obstacles=self.count,
                v_obs=self.v_obs,
                motion=self.motion,
                seed=self.seed,
            )
        )


def build_grid(settings: BenchSettings) -> List[BenchmarkJob]:
    """
    Expand the benchmark settings into jobs.

    Job order is map, count, velocity, generator, run. The seed of run r in
    the c-th (map, count, velocity) cell is base_seed + c * runs_per_cell + r,
    shared by every generator.

    Raises:
        ConfigurationError: Unknown map name, a map file instead of a bundled
            map (files carry no start and goal) or unknown motion model.
    """
    for name in settings.maps:
        if not is_bundled(name):
            load_map(name)
            raise ConfigurationError(
                f"map '{name}' has no start and goal; benchmarks run on bundled "
                f"maps ({', '.join(m.value for m in BundledMap)})"
            )
    try:
        motion = MotionModel(settings.motion)
    except ValueError as e:
        raise ConfigurationError(
            f"unknown motion model '{settings.motion}'"
        ) from e

    jobs: List[BenchmarkJob] = []
    cells = itertools.product(
        settings.maps, settings.obstacle_counts, settings.velocities
    )
    for cell_idx, (name, count, v_obs) in enumerate(cells):
        for gen in settings.generators:
            for run in range(settings.runs_per_cell):
                jobs.append(
                    BenchmarkJob(
                        index=len(jobs),
                        map=name,
                        count=count,
                        v_obs=v_obs,
                        generator=GeneratorKind(gen),
                        run_idx=run,
                        seed=settings.base_seed + cell_idx * settings.runs_per_cell + run,
                        motion=motion,
                    )
                )
    return jobs


def execute_job(
    job: BenchmarkJob,
    gen_cfg: GeneratorConfig,
    sim_cfg: SimConfig,
    opt_cfg: OptConfig,
) -> RunRecord:
    """Run one job; any exception becomes the record's error text."""
    cell = dict(
        map=job.map,
        count=job.count,
        v_obs=job.v_obs,
        generator=job.generator,
        run_idx=job.run_idx,
        seed=job.seed,
    )
    try:
        result = run_episode(
            job.scenario(),
            job.generator,
            gen_cfg,
            sim_cfg.model_copy(update={"record_trace": False}),
            opt_cfg,
        )
    except Exception as e:
        logger.warning(
            "Job %s failed: %s", job.index, e, extra={"seed": job.seed}
        )
        return RunRecord(**cell, error=f"{type(e).__name__}: {e}")
    return RunRecord.from_metrics(result.metrics, **cell)


# endregion
# region Benchmark Service


class BenchmarkService:
    """Runs a benchmark grid and persists every finished job."""

    __logger: T_Logger
    __db: Optional[Database]

    def __init__(
        self,
        settings: BenchSettings,
        gen_cfg: GeneratorConfig,
        sim_cfg: SimConfig,
        opt_cfg: OptConfig,
        db: Optional[Database] = None,
        logger: T_Logger = logger,
    ) -> None:
        self.settings = settings
        self.gen_cfg = gen_cfg
        self.sim_cfg = sim_cfg
        self.opt_cfg = opt_cfg
        self.__db = db
        self.__logger = logger.getChild(self.__class__.__name__)
        self.records: List[RunRecord] = []

    def _persist(self, record: RunRecord) -> None:
        if self.__db is None:
            return
        row = record.model_dump(mode="json")
        row["success"] = None if record.success is None else int(record.success)
        self.__db[RUNS_TABLE].insert(
            row, pk=RUNS_PK, columns=RUNS_COLUMNS, replace=True
        )

    def _completed(
        self, jobs: Sequence[BenchmarkJob]
    ) -> Iterable[Tuple[BenchmarkJob, RunRecord]]:
        args = (self.gen_cfg, self.sim_cfg, self.opt_cfg)
        if self.settings.jobs <= 1:
            for job in jobs:
                yield job, execute_job(job, *args)
            return
        with ProcessPoolExecutor(max_workers=self.settings.jobs) as pool:
            futures = {pool.submit(execute_job, job, *args): job for job in jobs}
            for fut in as_completed(futures):
                yield futures[fut], fut.result()

    def run(
        self, jobs: Optional[Sequence[BenchmarkJob]] = None
    ) -> Generator[BenchProgress, None, None]:
        jobs = list(jobs) if jobs is not None else build_grid(self.settings)
        total = len(jobs)
        self.__logger.info(
            "Starting benchmark: %s jobs on %s workers", total, self.settings.jobs
        )
        yield BenchProgress(
            status="info",
            message=f"{total} jobs on {self.settings.jobs} worker(s)",
            total=total,
        )
        by_index: Dict[int, RunRecord] = {}
        for done, (job, record) in enumerate(self._completed(jobs), start=1):
            by_index[job.index] = record
            self._persist(record)
            yield BenchProgress(
                status="error" if record.failed else "progress",
                message=(
                    f"{job.map}/{job.count}/{job.v_obs:g}/{job.generator.value}"
                    f" run {job.run_idx}"
                    + (f": {record.error}" if record.failed else "")
                ),
                done=done,
                total=total,
                record=record,
            )
        self.records = [by_index[i] for i in sorted(by_index)]
        failed = sum(r.failed for r in self.records)
        self.__logger.info("Benchmark finished: %s jobs, %s failed", total, failed)
        yield BenchProgress(
            status="success" if not failed else "warning",
            message=f"{total - failed}/{total} jobs completed",
            done=total,
            total=total,
        )


# endregion
# region Results Files


def write_results_csv(records: Iterable[RunRecord], path: Path) -> Path:
    """Write records with a header row, one row per record in the given order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULT_COLUMNS)
        for rec in records:
            writer.writerow(rec.csv_row())
    return path


def read_results_csv(path: Path) -> List[RunRecord]:
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"results file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(RESULT_COLUMNS[:-1]) - set(reader.fieldnames or [])
        if missing:
            raise ConfigurationError(
                f"{path}: missing columns {', '.join(sorted(missing))}"
            )
        try:
            return [RunRecord.from_csv_row(row) for row in reader]
        except (ValueError, KeyError) as e:
            raise ConfigurationError(
                f"{path}: line {reader.line_num}: {e}"
            ) from e


def read_results_db(db: Database) -> List[RunRecord]:
    """Every persisted record of the runs table."""
    if RUNS_TABLE not in db.table_names():
        return []
    return [
        RunRecord.model_validate(
            {**row, "success": None if row["success"] is None else bool(row["success"])}
        )
        for row in db[RUNS_TABLE].rows_where(order_by="map, count, v_obs, generator, run_idx")
    ]


# endregion
# region Aggregation


def _mean(values: Sequence[float]) -> Optional[float]:
    return math.fsum(values) / len(values) if values else None


def _cell_stats(
    key: Tuple[str, int, float, GeneratorKind], records: Sequence[RunRecord]
) -> CellStats:
    name, count, v_obs, gen = key
    done = [r for r in records if not r.failed]
    stats = CellStats(
        map=name,
        count=count,
        v_obs=v_obs,
        generator=gen,
        runs=len(done),
        failed=len(records) - len(done),
    )
    if not done:
        return stats
    stats.mean_time = _mean([r.time_s for r in done])
    stats.mean_path = _mean([r.path_m for r in done])
    stats.total_collisions = sum(r.collisions for r in done)
    stats.success_rate = 100.0 * sum(bool(r.success) for r in done) / len(done)
    return stats


def _summary(cells: Sequence[CellStats]) -> GeneratorSummary:
    populated = [c for c in cells if not c.missing]
    return GeneratorSummary(
        cells=len(populated),
        mean_time=_mean([c.mean_time for c in populated]),
        mean_path=_mean([c.mean_path for c in populated]),
        mean_collisions=_mean([float(c.total_collisions) for c in populated]),
        success_rate=_mean([c.success_rate for c in populated]),
    )


def aggregate(
    records: Iterable[RunRecord],
    settings: Optional[BenchSettings] = None,
) -> AggregateReport:
    """
    Reduce run records into per-cell, per-map and overall statistics.

    Cell statistics cover completed runs: mean time and path, summed
    collisions and success rate in percent. Summaries average the populated
    cells of a generator. With settings, every cell of the configured grid is
    listed and cells without completed runs are reported as missing; without
    settings, the cells present in records are listed.

    Raises:
        ConfigurationError: When records is empty.
    """
    records = list(records)
    if not records:
        raise ConfigurationError("no results to aggregate")

    grouped: Dict[Tuple[str, int, float, GeneratorKind], List[RunRecord]] = {}
    for r in records:
        grouped.setdefault((r.map, r.count, float(r.v_obs), r.generator), []).append(r)

    if settings is not None:
        keys = [
            (name, count, float(v), GeneratorKind(g))
            for name, count, v, g in itertools.product(
                settings.maps,
                settings.obstacle_counts,
                settings.velocities,
                settings.generators,
            )
        ]
        motion = settings.motion
    else:
        order = {g: i for i, g in enumerate(GeneratorKind)}
        keys = sorted(grouped, key=lambda k: (k[0], k[1], k[2], order[k[3]]))
        motion = ""

    cells = [_cell_stats(k, grouped.get(k, [])) for k in keys]
    generators = list(dict.fromkeys(c.generator for c in cells))
    maps = list(dict.fromkeys(c.map for c in cells))

    per_map = {
        name: {
            g: _summary([c for c in cells if c.map == name and c.generator == g])
            for g in generators
        }
        for name in maps
    }
    overall = {g: _summary([c for c in cells if c.generator == g]) for g in generators}
    return AggregateReport(
        cells=cells,
        per_map=per_map,
        overall=overall,
        collision_rule=COLLISION_RULE,
        motion=motion,
    )


def _success_at(
    report: AggregateReport, count: int, v_obs: float, gen: GeneratorKind
) -> Optional[float]:
    return _mean(
        [
            c.success_rate
            for c in report.cells
            if c.count == count
            and abs(c.v_obs - v_obs) < 1e-9
            and c.generator == gen
            and not c.missing
        ]
    )


def directional_checks(
    report: AggregateReport,
    dense_count: int = DENSE_COUNT,
    dense_v_obs: float = DENSE_V_OBS,
) -> List[DirectionalCheck]:
    """
    Compare the generators on an aggregated report.

    - LM-WP succeeds more often than SUB-WP in the dense cells
        (dense_count obstacles at dense_v_obs, averaged over maps).
    - LM-WP has the shorter overall mean path.
    - For every map and generator, collisions summed over velocities never
        drop as the obstacle count grows.

    A check whose cells are missing has passed=None.
    """
    sub, lm = GeneratorKind.SUB_WP, GeneratorKind.LM_WP
    checks: List[DirectionalCheck] = []

    sub_rate = _success_at(report, dense_count, dense_v_obs, sub)
    lm_rate = _success_at(report, dense_count, dense_v_obs, lm)
    checks.append(
        DirectionalCheck(
            name=f"success lm-wp > sub-wp ({dense_count} obst., {dense_v_obs:g} m/s)",
            passed=None if sub_rate is None or lm_rate is None else lm_rate > sub_rate,
            detail=(
                f"lm-wp {_fmt(lm_rate, '{:.1f}%')} "
                f"vs sub-wp {_fmt(sub_rate, '{:.1f}%')}"
            ),
        )
    )

    sub_path = report.overall[sub].mean_path if sub in report.overall else None
    lm_path = report.overall[lm].mean_path if lm in report.overall else None
    checks.append(
        DirectionalCheck(
            name="overall path lm-wp < sub-wp",
            passed=None if sub_path is None or lm_path is None else lm_path < sub_path,
            detail=f"lm-wp {_fmt(lm_path)} m vs sub-wp {_fmt(sub_path)} m",
        )
    )

    for name in report.per_map:
        for gen in report.overall:
            totals: Dict[int, int] = {}
            for c in report.cells:
                if c.map == name and c.generator == gen and not c.missing:
                    totals[c.count] = totals.get(c.count, 0) + (c.total_collisions or 0)
            series = [totals[k] for k in sorted(totals)]
            checks.append(
                DirectionalCheck(
                    name=f"collisions rise with obstacles ({name}, {gen.value})",
                    passed=(
                        None
                        if len(series) < 2
                        else all(a <= b for a, b in zip(series, series[1:]))
                    ),
                    detail=", ".join(f"{k}: {totals[k]}" for k in sorted(totals)),
                )
            )
    return checks


# endregion
# region Report Rendering


def _fmt(v: Optional[float], pattern: str = "{:.2f}") -> str:
    return "-" if v is None else pattern.format(v)


def _summary_row(label: str, gens: Sequence[GeneratorKind], block) -> List[str]:
    row = [label, ""]
    for g in gens:
        s: Optional[GeneratorSummary] = block.get(g)
        if s is None or not s.cells:
            row += ["-"] * 4
        else:
            row += [
                _fmt(s.mean_time),
                _fmt(s.mean_path),
                _fmt(s.mean_collisions),
                _fmt(s.success_rate, "{:.1f}%"),
            ]
    return row


def render_report(report: AggregateReport, width: int = 160) -> str:
    """
    Text table: one row per (map, count, velocity), four columns per
    generator, followed by the per-map and overall averages.
    """
    gens = list(report.overall)
    table = Table(title="Quantitative evaluation", show_lines=False)
    table.add_column("Scenario", no_wrap=True)
    table.add_column("v_obs", justify="right")
    for g in gens:
        for col in ("Time [s]", "Path [m]", "Coll.", "Success"):
            table.add_column(f"{g.value}\n{col}", justify="right")

    rows = list(
        dict.fromkeys((c.map, c.count, c.v_obs) for c in report.cells)
    )
    for name, count, v_obs in rows:
        row = [f"{name} / {count} obst.", f"{v_obs:g}"]
        for g in gens:
            c = report.cell(name, count, v_obs, g)
            if c is None or c.missing:
                row += ["missing"] + ["-"] * 3
            else:
                row += [
                    _fmt(c.mean_time),
                    _fmt(c.mean_path),
                    str(c.total_collisions),
                    _fmt(c.success_rate, "{:.1f}%"),
                ]
        table.add_row(*row)

    table.add_section()
    for name, block in report.per_map.items():
        table.add_row(*_summary_row(f"{name} average", gens, block))
    table.add_row(*_summary_row("Overall average", gens, report.overall))

    console = Console(record=True, width=width, color_system=None, file=io.StringIO())
    console.print(table)
    if report.motion:
        console.print(f"Obstacle motion: {report.motion}")
    console.print(f"Collision rule: {report.collision_rule}")
    console.print("Directional checks:")
    marks = {True: "pass", False: "FAIL", None: "n/a"}
    for check in directional_checks(report):
        console.print(
            f"  {marks[check.passed]:<4} {check.name}: {check.detail}",
            markup=False,
            highlight=False,
        )
    return console.export_text()


def write_report(report: AggregateReport, out_dir: Path) -> Tuple[Path, Path]:
    """Save report.txt and report.json under out_dir."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    text_path = out_dir / "report.txt"
    json_path = out_dir / "report.json"
    text_path.write_text(render_report(report), encoding="utf-8")
    json_path.write_text(report.model_dump_json(indent=2), encoding="utf-8")
    return text_path, json_path


# endregion

__all__ = [
    "BenchmarkJob",
    "BenchmarkService",
    "aggregate",
    "build_grid",
    "directional_checks",
    "execute_job",
    "read_results_csv",
    "read_results_db",
    "render_report",
    "write_report",
    "write_results_csv",
]
