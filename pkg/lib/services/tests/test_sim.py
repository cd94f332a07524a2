import json
import math
from dataclasses import replace

import numpy as np
import pytest

from core.config import SimConfig
from core.constants import GeneratorKind
from core.errors import InvalidEpisodeError
from core.localopt import WALL_ID
from core.scenario import Scenario, ScenarioSpec, build_scenario
from core.world import DynamicObstacle, OccupancyGrid, Point2
from services.sim import (
    CollisionCounter,
    EpisodeRunner,
    RobotState,
    reactive_step,
    run_episode,
    write_trace,
)

STILL = Point2(0.0, 0.0)


def with_wall(grid: OccupancyGrid, x: float) -> OccupancyGrid:
    cells = grid.cells.copy()
    ix, _ = grid.world_to_cell((x, 0.0))
    cells[:, ix] = True
    return OccupancyGrid(cells, grid.resolution, grid.origin, "wall")


@pytest.fixture(scope="module")
def obstacle_scenario() -> Scenario:
    return build_scenario(ScenarioSpec(map="empty", obstacles=5, v_obs=0.3, seed=7))


# region Reactive Controller


def test_full_speed_far_from_subgoal(open_grid, sim_cfg):
    robot = RobotState(Point2(0.0, 0.0))
    moved = reactive_step(robot, Point2(5.0, 0.0), [], open_grid, sim_cfg)
    assert moved.position == (pytest.approx(sim_cfg.v_max * sim_cfg.dt), 0.0)
    assert moved.velocity == (pytest.approx(sim_cfg.v_max), 0.0)


def test_slows_down_near_subgoal(open_grid, sim_cfg):
    robot = RobotState(Point2(0.0, 0.0))
    moved = reactive_step(robot, Point2(0.25, 0.0), [], open_grid, sim_cfg)
    assert moved.position.x == pytest.approx(0.5 * sim_cfg.v_max * sim_cfg.dt)


def test_stays_on_subgoal(open_grid, sim_cfg):
    robot = RobotState(Point2(1.0, 1.0))
    moved = reactive_step(robot, Point2(1.0, 1.0), [], open_grid, sim_cfg)
    assert moved.position == robot.position
    assert moved.velocity == STILL


def test_never_enters_walls(open_grid, sim_cfg):
    grid = with_wall(open_grid, 1.05)
    robot = RobotState(Point2(0.79, 0.0))
    blocked = reactive_step(robot, Point2(5.0, 0.0), [], grid, sim_cfg)
    assert blocked.position == robot.position
    slid = reactive_step(robot, Point2(5.0, 5.0), [], grid, sim_cfg)
    assert slid.position.x == pytest.approx(0.79)
    assert slid.position.y > 0.0


def test_head_on_obstacle_deflects_left(open_grid, sim_cfg):
    robot = RobotState(Point2(0.0, 0.0))
    ob = DynamicObstacle(0, Point2(1.0, 0.0), 0.3, STILL)
    moved = reactive_step(robot, Point2(5.0, 0.0), [ob], open_grid, sim_cfg)
    assert moved.position.y > 0.0
    assert moved.position.y > moved.position.x
    assert moved.position.dist(robot.position) <= sim_cfg.v_max * sim_cfg.dt + 1e-12


def test_keeps_full_speed_when_repulsion_opposes(open_grid, sim_cfg):
    robot = RobotState(Point2(0.0, 0.0))
    ob = DynamicObstacle(0, Point2(2.0, 0.0), 0.3, STILL)
    moved = reactive_step(robot, Point2(5.0, 0.0), [ob], open_grid, sim_cfg)
    step = moved.position.dist(robot.position)
    assert step == pytest.approx(sim_cfg.v_max * sim_cfg.dt)
    assert 0.0 < moved.position.y < moved.position.x


# endregion
# region Collisions


CONTACTS = [
    (1.0, {0}),
    (1.05, {0}),
    (1.5, set()),
    (2.0, {0}),
    (2.1, set()),
    (3.5, {0}),
]


@pytest.mark.parametrize("cooldown, expected", [(2.0, 2), (0.0, 3)])
def test_collision_cooldown(cooldown, expected):
    counter = CollisionCounter(cooldown)
    for t, hits in CONTACTS:
        counter.update(t, hits)
    assert counter.events == expected


def test_simultaneous_contacts_are_separate_events():
    counter = CollisionCounter(2.0)
    assert counter.update(0.5, {3, 1}) == [1, 3]
    assert counter.events == 2


def test_contact_outlasting_cooldown_is_counted():
    counter = CollisionCounter(2.0)
    assert counter.update(1.0, {0}) == [0]
    assert counter.update(1.2, set()) == []
    # touches again inside the cooldown and stays in contact
    assert counter.update(2.0, {0}) == []
    assert counter.update(2.5, {0}) == []
    assert counter.update(3.0, {0}) == [0]
    assert counter.update(3.5, {0}) == []
    assert counter.events == 2


def test_contacts(open_grid):
    counter = CollisionCounter(2.0)
    robot = RobotState(Point2(0.0, 0.0), radius=0.2)
    near = DynamicObstacle(4, Point2(0.45, 0.0), 0.3, STILL)
    far = DynamicObstacle(5, Point2(0.55, 0.0), 0.3, STILL)
    assert counter.contacts(robot, [near, far], open_grid) == {4}
    walled = with_wall(open_grid, 0.15)
    assert WALL_ID in counter.contacts(robot, [], walled)


# endregion
# region Episodes


@pytest.mark.parametrize("generator", list(GeneratorKind))
def test_empty_map_succeeds(empty_scenario, generator):
    result = run_episode(empty_scenario, generator)
    m = result.metrics
    assert m.arrived and m.success
    assert m.collisions == 0
    straight = empty_scenario.start.dist(empty_scenario.goal)
    assert m.path_m <= 1.15 * straight
    assert m.time_s < SimConfig().max_sim_time
    assert result.records[-1].t == pytest.approx(m.time_s)


def test_landmarks_in_header(empty_scenario):
    result = run_episode(empty_scenario, "lm-wp", sim_cfg=SimConfig(max_sim_time=1.0))
    assert result.header.landmarks == [tuple(empty_scenario.goal)]
    assert result.header.config["generator"]["d_ahead"] == pytest.approx(1.55)


def test_timeout_reports_max_time(empty_scenario):
    result = run_episode(empty_scenario, "sub-wp", sim_cfg=SimConfig(max_sim_time=3.0))
    assert not result.metrics.arrived
    assert not result.metrics.success
    assert result.metrics.time_s == pytest.approx(3.0)
    ts = [r.t for r in result.records]
    assert len(ts) == 60
    assert ts[0] == pytest.approx(0.05)
    assert np.all(np.diff(ts) > 0)


def test_episode_is_deterministic(obstacle_scenario):
    cfg = SimConfig(max_sim_time=10.0)
    a = run_episode(obstacle_scenario, "lm-wp", sim_cfg=cfg)
    b = run_episode(obstacle_scenario, "lm-wp", sim_cfg=cfg)
    assert a.metrics == b.metrics
    assert a.records == b.records


def test_unreachable_goal_is_invalid(open_grid):
    cells = open_grid.cells.copy()
    ix, iy = open_grid.world_to_cell((5.0, 5.0))
    cells[iy - 3 : iy + 4, ix - 3 : ix + 4] = True
    cells[iy - 2 : iy + 3, ix - 2 : ix + 3] = False
    scenario = Scenario(
        grid=OccupancyGrid(cells, open_grid.resolution, open_grid.origin, "boxed"),
        start=Point2(0.0, 0.0),
        goal=Point2(5.0, 5.0),
        obstacles=(),
        v_obs=0.0,
        seed=0,
    )
    with pytest.raises(InvalidEpisodeError, match="unreachable goal"):
        run_episode(scenario, "sth-wp")


def test_write_trace(tmp_path, empty_scenario):
    result = run_episode(empty_scenario, "sth-wp", sim_cfg=SimConfig(max_sim_time=2.0))
    path = write_trace(result, tmp_path / "out" / "trace.jsonl")
    lines = [json.loads(line) for line in path.read_text().splitlines()]
    assert lines[0]["kind"] == "header"
    assert lines[0]["generator"] == "sth-wp"
    assert lines[-1]["kind"] == "metrics"
    steps = lines[1:-1]
    assert len(steps) == len(result.records)
    assert all(s["kind"] == "step" for s in steps)
    assert all(math.isfinite(s["x"]) and math.isfinite(s["y"]) for s in steps)


def subgoal_offsets(result, scenario):
    """Distance of each non-fallback subgoal from the line robot -> goal."""
    offsets = []
    prev = scenario.start
    for rec in result.records:
        if not rec.fallback:
            u = np.subtract(tuple(scenario.goal), tuple(prev))
            u /= np.linalg.norm(u)
            d = np.subtract((rec.subgoal_x, rec.subgoal_y), tuple(prev))
            offsets.append(abs(d[0] * u[1] - d[1] * u[0]))
        prev = Point2(rec.x, rec.y)
    return offsets


def test_lm_subgoals_stay_on_line_without_obstacles(empty_scenario):
    result = run_episode(empty_scenario, "lm-wp", sim_cfg=SimConfig(max_sim_time=8.0))
    offsets = subgoal_offsets(result, empty_scenario)
    assert offsets and max(offsets) < 1e-3


def test_lm_subgoals_leave_line_near_obstacle(empty_scenario):
    blocker = DynamicObstacle(0, Point2(6.0, 6.0), 0.3, STILL)
    scenario = replace(empty_scenario, obstacles=(blocker,))
    result = run_episode(scenario, "lm-wp", sim_cfg=SimConfig(max_sim_time=8.0))
    assert max(subgoal_offsets(result, scenario)) > 0.3
    near = [r for r in result.records if Point2(r.x, r.y).dist(blocker.center) < 2.0]
    assert near


def test_sub_wp_subgoals_advance_along_path(empty_scenario):
    result = run_episode(empty_scenario, "sub-wp", sim_cfg=SimConfig(max_sim_time=8.0))
    u = np.subtract(tuple(empty_scenario.goal), tuple(empty_scenario.start))
    u /= np.linalg.norm(u)
    start = tuple(empty_scenario.start)
    along = [
        float(np.dot(np.subtract((r.subgoal_x, r.subgoal_y), start), u))
        for r in result.records
    ]
    assert np.all(np.diff(along) >= -1e-9)
    assert along[-1] > along[0]


def test_episode_runner_streams(tmp_path, empty_scenario, gen_cfg, opt_cfg):
    runner = EpisodeRunner(gen_cfg, SimConfig(max_sim_time=1.0), opt_cfg)
    trace = tmp_path / "trace.jsonl"
    messages = list(runner.run(empty_scenario, GeneratorKind.SUB_WP, trace))
    assert [m.status for m in messages] == ["info", "info", "warning"]
    assert runner.result is not None
    assert trace.is_file()


# endregion
