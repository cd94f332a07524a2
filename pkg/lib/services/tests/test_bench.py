import json

import pytest
from sqlite_utils import Database

from core.config import BenchSettings, SimConfig
from core.config.base import DATA_DIR
from core.constants import RESULT_COLUMNS, GeneratorKind
from core.errors import ConfigurationError
from core.models import RunRecord
from services.bench import (
    RUNS_TABLE,
    BenchmarkJob,
    BenchmarkService,
    aggregate,
    build_grid,
    directional_checks,
    execute_job,
    read_results_csv,
    read_results_db,
    render_report,
    write_report,
    write_results_csv,
)

SUB, STH, LM = GeneratorKind.SUB_WP, GeneratorKind.STH_WP, GeneratorKind.LM_WP


def record(generator=SUB, run_idx=0, *, success=True, time_s=10.0, **kw) -> RunRecord:
    fields = dict(
        map="empty",
        count=5,
        v_obs=0.1,
        generator=generator,
        run_idx=run_idx,
        seed=run_idx,
        time_s=time_s,
        path_m=time_s * 1.1,
        collisions=0 if success else 3,
        success=success,
    )
    fields.update(kw)
    return RunRecord(**fields)


@pytest.fixture
def short_sim() -> SimConfig:
    return SimConfig(max_sim_time=5.0)


# region Grid


def test_default_grid_size():
    jobs = build_grid(BenchSettings())
    assert len(jobs) == 2 * 3 * 3 * 3 * 30
    assert [j.index for j in jobs] == list(range(len(jobs)))


def test_grid_order_and_paired_seeds():
    settings = BenchSettings(
        maps=["empty", "office"],
        obstacle_counts=[5, 10],
        velocities=[0.1, 0.2],
        runs_per_cell=3,
        base_seed=100,
    )
    jobs = build_grid(settings)
    first = jobs[0]
    assert (first.map, first.count, first.v_obs, first.generator, first.run_idx) == (
        "empty",
        5,
        0.1,
        SUB,
        0,
    )
    assert first.seed == 100
    # the same runs of every generator share seeds
    cell = jobs[:9]
    assert [j.generator for j in cell] == [SUB] * 3 + [STH] * 3 + [LM] * 3
    assert [j.seed for j in cell] == [100, 101, 102] * 3
    second = jobs[9]
    assert (second.v_obs, second.seed) == (0.2, 103)
    assert jobs[-1].map == "office" and jobs[-1].seed == 100 + 7 * 3 + 2


def test_grid_rejects_unknown_motion():
    with pytest.raises(ConfigurationError, match="unknown motion model 'zigzag'"):
        build_grid(BenchSettings(motion="zigzag"))


def test_grid_rejects_unknown_map():
    with pytest.raises(ConfigurationError, match="unknown map 'atlantis'"):
        build_grid(BenchSettings(maps=["atlantis"]))


def test_grid_rejects_map_files():
    with pytest.raises(ConfigurationError, match="has no start and goal"):
        build_grid(BenchSettings(maps=[str(DATA_DIR / "corridor.map")]))


def test_job_scenario_is_seeded():
    job = BenchmarkJob(0, "empty", 4, 0.2, LM, 0, seed=11)
    a, b = job.scenario(), job.scenario()
    assert len(a.obstacles) == 4
    assert [o.center for o in a.obstacles] == [o.center for o in b.obstacles]


def test_execute_job_captures_errors(gen_cfg, sim_cfg, opt_cfg):
    job = BenchmarkJob(0, "missing.map", 2, 0.1, SUB, 0, seed=1)
    rec = execute_job(job, gen_cfg, sim_cfg, opt_cfg)
    assert rec.failed
    assert rec.error.startswith("MapFormatError")
    assert rec.time_s is None and rec.success is None
    assert (rec.map, rec.seed) == ("missing.map", 1)


# endregion
# region Service


def test_service_streams_and_persists(tiny_bench, gen_cfg, short_sim, opt_cfg, tmp_path):
    db = Database(tmp_path / "runs.db")
    service = BenchmarkService(tiny_bench, gen_cfg, short_sim, opt_cfg, db)
    messages = list(service.run())

    assert messages[0].status == "info" and messages[0].total == 2
    assert [m.status for m in messages[1:-1]] == ["progress", "progress"]
    assert [m.done for m in messages[1:-1]] == [1, 2]
    assert messages[-1].status == "success"
    assert messages[-1].message == "2/2 jobs completed"

    assert [r.seed for r in service.records] == [4, 5]
    assert all(r.time_s is not None and not r.failed for r in service.records)
    assert db[RUNS_TABLE].count == 2
    assert read_results_db(db) == service.records


def test_read_empty_db(tmp_path):
    assert read_results_db(Database(tmp_path / "fresh.db")) == []


def test_failed_jobs_are_reported(gen_cfg, short_sim, opt_cfg):
    settings = BenchSettings(runs_per_cell=1)
    jobs = [BenchmarkJob(0, "missing.map", 1, 0.1, SUB, 0, seed=0)]
    service = BenchmarkService(settings, gen_cfg, short_sim, opt_cfg)
    messages = list(service.run(jobs))
    assert messages[1].status == "error"
    assert "MapFormatError" in messages[1].message
    assert messages[-1].status == "warning"
    assert service.records[0].failed


def test_results_csv_is_reproducible(tiny_bench, gen_cfg, short_sim, opt_cfg, tmp_path):
    paths = []
    for name in ("a.csv", "b.csv"):
        service = BenchmarkService(tiny_bench, gen_cfg, short_sim, opt_cfg)
        list(service.run())
        paths.append(write_results_csv(service.records, tmp_path / name))
    a, b = (p.read_bytes() for p in paths)
    assert a == b
    assert a.decode().splitlines()[0] == ",".join(RESULT_COLUMNS)


# endregion
# region Results Files


def test_results_csv_round_trip(tmp_path):
    records = [record(run_idx=0), record(run_idx=1, success=False, time_s=12.3456)]
    records.append(RunRecord(**{**records[0].model_dump(), "run_idx": 2, "error": "boom"}))
    back = read_results_csv(write_results_csv(records, tmp_path / "r.csv"))
    assert len(back) == 3
    assert back[1].time_s == pytest.approx(12.346)
    assert back[1].success is False
    assert back[1].collisions == 3
    assert back[2].error == "boom"
    assert [r.generator for r in back] == [SUB] * 3


def test_results_csv_missing_file(tmp_path):
    with pytest.raises(ConfigurationError, match="results file not found"):
        read_results_csv(tmp_path / "none.csv")


def test_results_csv_missing_columns(tmp_path):
    path = tmp_path / "short.csv"
    path.write_text("map,count\nempty,5\n")
    with pytest.raises(ConfigurationError, match="missing columns"):
        read_results_csv(path)


def test_results_csv_bad_value(tmp_path):
    path = tmp_path / "bad.csv"
    row = ["empty", "five", "0.1", "sub-wp", "0", "0", "1.000", "1.000", "0", "1", ""]
    path.write_text(",".join(RESULT_COLUMNS) + "\n" + ",".join(row) + "\n")
    with pytest.raises(ConfigurationError, match="line 2"):
        read_results_csv(path)


# endregion
# region Aggregation


@pytest.fixture
def cell_records():
    return [
        record(run_idx=0, time_s=10.0),
        record(run_idx=1, time_s=14.0),
        record(run_idx=2, success=False, time_s=240.0),
        record(run_idx=3, error="ValueError: broken"),
    ]


def test_cell_statistics(cell_records):
    report = aggregate(cell_records)
    (cell,) = report.cells
    assert cell.runs == 3
    assert cell.failed == 1
    assert cell.success_rate == pytest.approx(200.0 / 3)
    assert cell.mean_time == pytest.approx(88.0)
    assert cell.total_collisions == 3
    assert report.overall[SUB].success_rate == pytest.approx(66.6667, abs=1e-3)


def test_missing_cells_with_settings(cell_records):
    settings = BenchSettings(
        maps=["empty"],
        obstacle_counts=[5],
        velocities=[0.1],
        generators=["sub-wp", "lm-wp"],
    )
    report = aggregate(cell_records, settings)
    assert [c.generator for c in report.cells] == [SUB, LM]
    missing = report.cell("empty", 5, 0.1, LM)
    assert missing.missing and missing.mean_time is None
    assert report.overall[LM].cells == 0
    assert report.per_map["empty"][SUB].cells == 1
    assert report.motion == "linear-bounce"


def test_aggregate_ignores_record_order():
    records = [
        record(g, r, success=(r + i) % 3 != 0, time_s=5.0 + 0.37 * r + i, count=c)
        for i, g in enumerate(GeneratorKind)
        for c in (5, 10)
        for r in range(7)
    ]
    forward = aggregate(records)
    backward = aggregate(list(reversed(records)))
    assert forward.model_dump() == backward.model_dump()


def test_aggregate_requires_records():
    with pytest.raises(ConfigurationError, match="no results"):
        aggregate([])


def test_render_and_write_report(cell_records, tmp_path):
    settings = BenchSettings(
        maps=["empty"],
        obstacle_counts=[5],
        velocities=[0.1],
        generators=["sub-wp", "lm-wp"],
    )
    report = aggregate(cell_records, settings)
    text = render_report(report)
    assert "empty / 5 obst." in text
    assert "66.7%" in text
    assert "missing" in text
    assert "Overall average" in text
    assert "Collision rule:" in text

    text_path, json_path = write_report(report, tmp_path / "report")
    assert text_path.read_text() == text
    data = json.loads(json_path.read_text())
    assert len(data["cells"]) == 2
    assert data["overall"]["sub-wp"]["cells"] == 1


# endregion


# region Directional Checks


def dense_records(lm_hits_at_20: int) -> list:
    out = []
    for count in (5, 20):
        for r in range(2):
            won = count == 5
            sub = record(SUB, r, count=count, v_obs=0.3, success=won, path_m=40.0)
            lm_hits = lm_hits_at_20 if count == 20 else 1
            lm = record(LM, r, count=count, v_obs=0.3, path_m=30.0, collisions=lm_hits)
            out += [sub, lm]
    return out


def test_directional_checks_pass():
    checks = directional_checks(aggregate(dense_records(lm_hits_at_20=1)))
    assert [c.passed for c in checks] == [True, True, True, True]
    assert checks[0].detail == "lm-wp 100.0% vs sub-wp 0.0%"
    assert checks[1].detail == "lm-wp 30.00 m vs sub-wp 40.00 m"
    assert checks[2].name == "collisions rise with obstacles (empty, sub-wp)"
    assert checks[2].detail == "5: 0, 20: 6"


def test_directional_checks_flag_falling_collisions():
    checks = directional_checks(aggregate(dense_records(lm_hits_at_20=0)))
    falling = checks[-1]
    assert falling.name == "collisions rise with obstacles (empty, lm-wp)"
    assert falling.passed is False
    assert falling.detail == "5: 2, 20: 0"
    assert "FAIL collisions rise with obstacles (empty, lm-wp)" in render_report(
        aggregate(dense_records(lm_hits_at_20=0))
    )


def test_directional_checks_without_cells():
    checks = directional_checks(aggregate([record(SUB, 0), record(SUB, 1)]))
    assert [c.passed for c in checks] == [None, None, None]
    assert checks[0].detail == "lm-wp - vs sub-wp -"


# endregion
