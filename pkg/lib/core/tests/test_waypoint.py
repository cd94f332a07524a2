import math

import numpy as np
import pytest

from core.config import GeneratorConfig
from core.constants import GeneratorKind
from core.globalplan import GlobalPath, parameterize
from core.waypoint import (
    LandmarkQueue,
    LmWpGenerator,
    ReplanRequest,
    SthWpGenerator,
    Subgoal,
    SubWpGenerator,
    advance_landmark,
    circle_intersections,
    lm_subgoal,
    make_generator,
    select_landmarks,
    sth_subgoal,
    sth_watchdog,
    subwp_waypoints,
)
from core.world import DynamicObstacle, OccupancyGrid, Point2

D_AHEAD = 1.55


@pytest.fixture
def five_m_path() -> GlobalPath:
    return GlobalPath.from_points([(0.1 * i, 0.0) for i in range(51)])


def walled(grid: OccupancyGrid, x: float) -> OccupancyGrid:
    """Copy of grid with a full-height wall one cell wide at x."""
    cells = grid.cells.copy()
    ix, _ = grid.world_to_cell((x, 0.0))
    cells[:, ix] = True
    return OccupancyGrid(cells, grid.resolution, grid.origin, "walled")


# region SUB-WP


def test_subwp_spacing(five_m_path):
    waypoints = subwp_waypoints(five_m_path, 1.0)
    assert len(waypoints) == 6
    xs = [w.position.x for w in waypoints]
    assert xs == pytest.approx([1.0, 2.0, 3.0, 4.0, 5.0, 5.0])
    assert waypoints[-1].position == five_m_path.goal
    assert {w.source for w in waypoints} == {GeneratorKind.SUB_WP}


def test_subwp_rejects_bad_spacing(five_m_path):
    with pytest.raises(ValueError):
        subwp_waypoints(five_m_path, 0.0)


def test_subwp_consumed_in_order(five_m_path, empty_grid, gen_cfg):
    gen = SubWpGenerator(gen_cfg, empty_grid)
    gen.reset(five_m_path)
    assert gen.subgoal((0.0, 0.0), 0.0).position.x == pytest.approx(1.0)
    assert gen.subgoal((1.0, 0.0), 0.1).position.x == pytest.approx(2.0)
    # skipping ahead does not skip waypoints
    assert gen.subgoal((4.0, 0.0), 0.2).position.x == pytest.approx(2.0)
    for x in (2.0, 3.0, 4.0, 5.0):
        gen.subgoal((x, 0.0), 0.3)
    last = gen.subgoal((5.0, 0.0), 0.4)
    assert last.position == five_m_path.goal
    assert gen.index == len(gen.waypoints) - 1


# endregion
# region STH-WP


def test_circle_intersections_sorted(straight_path):
    hits = circle_intersections(straight_path, (3.0, 0.5), D_AHEAD)
    half = math.sqrt(D_AHEAD**2 - 0.25)
    assert [s for s, _ in hits] == pytest.approx([3.0 - half, 3.0 + half])
    assert hits[-1][1] == (pytest.approx(3.0 + half), pytest.approx(0.0))


def test_sth_subgoal_picks_farthest_along_path(corner_path):
    cfg = GeneratorConfig(d_ahead=D_AHEAD)
    robot = (4.5, 0.5)
    sg = sth_subgoal(corner_path, robot, cfg)
    assert isinstance(sg, Subgoal)
    expected_y = 0.5 + math.sqrt(D_AHEAD**2 - 0.25)
    assert sg.position == (pytest.approx(5.0), pytest.approx(expected_y))

    # dense sampling oracle: farthest path sample on the circle
    s = np.linspace(0.0, corner_path.length, 20001)
    pts = np.array([corner_path.point_at(v) for v in s])
    dist = np.hypot(pts[:, 0] - robot[0], pts[:, 1] - robot[1])
    on_circle = np.abs(dist - D_AHEAD) < 1e-3
    expected = pts[np.flatnonzero(on_circle)[-1]]
    assert sg.position.dist(expected) < 1e-2


def test_sth_goal_inside_lookahead(straight_path, gen_cfg):
    sg = sth_subgoal(straight_path, (9.0, 0.2), gen_cfg)
    assert sg.position == straight_path.goal


def test_sth_no_intersection_requests_replan(straight_path, gen_cfg):
    request = sth_subgoal(straight_path, (3.0, 3.0), gen_cfg, stamp=1.5)
    assert isinstance(request, ReplanRequest)
    assert request.reason == "no-intersection"
    assert request.stamp == 1.5


def test_watchdog_stall(straight_path, gen_cfg):
    history = [(0.5 * k, (1.0 + 0.002 * k, 0.0)) for k in range(9)]
    request = sth_watchdog(history, straight_path, gen_cfg)
    assert request is not None and request.reason == "stalled"
    moving = [(0.5 * k, (1.0 + 0.5 * k, 0.0)) for k in range(9)]
    assert sth_watchdog(moving, straight_path, gen_cfg) is None
    # window shorter than t_lim
    assert sth_watchdog(history[:4], straight_path, gen_cfg) is None


def test_watchdog_off_course(straight_path, gen_cfg):
    request = sth_watchdog([(0.0, (3.0, 2.0))], straight_path, gen_cfg)
    assert request is not None and request.reason == "off-course"
    assert sth_watchdog([], straight_path, gen_cfg) is None


def test_sth_generator_caches_within_plan_period(straight_path, empty_grid, gen_cfg):
    gen = SthWpGenerator(gen_cfg, empty_grid)
    gen.reset(straight_path)
    first = gen.subgoal((3.0, 0.0), 0.0)
    assert gen.subgoal((3.1, 0.0), 0.1) is first
    fresh = gen.subgoal((3.2, 0.0), 0.3)
    assert fresh.position.x == pytest.approx(3.2 + D_AHEAD)


def test_sth_generator_stall_triggers_replan(straight_path, empty_grid, gen_cfg):
    gen = SthWpGenerator(gen_cfg, empty_grid)
    gen.reset(straight_path)
    result, t = None, 0.0
    for k in range(120):
        t = 0.05 * k
        result = gen.subgoal((2.0, 0.0), t)
        if isinstance(result, ReplanRequest):
            break
    assert isinstance(result, ReplanRequest)
    assert result.reason == "stalled"
    assert t == pytest.approx(gen_cfg.t_lim, abs=0.06)


# endregion
# region LM-WP


def test_straight_path_has_only_goal(straight_path, gen_cfg):
    spline = parameterize(straight_path, gen_cfg.nominal_speed)
    queue = select_landmarks(spline, straight_path.goal, gen_cfg)
    assert queue.points == [straight_path.goal]
    assert queue.interior == []


def test_single_corner_gives_one_landmark(corner_path, gen_cfg):
    spline = parameterize(corner_path, gen_cfg.nominal_speed)
    queue = select_landmarks(spline, corner_path.goal, gen_cfg)
    assert len(queue.interior) == 1
    assert queue.interior[0].dist((5.0, 0.0)) <= 0.3
    assert queue.goal == corner_path.goal
    assert queue.psi[0] == pytest.approx(math.pi / 2, rel=0.15)


def test_zigzag_gives_one_landmark_per_corner(gen_cfg):
    corners = [(4.0, 0.0), (4.0, 4.0), (8.0, 4.0), (8.0, 8.0)]
    vertices = [(0.0, 0.0), *corners, (12.0, 8.0)]
    points = [vertices[0]]
    for (ax, ay), (bx, by) in zip(vertices, vertices[1:]):
        points += [
            (ax + (bx - ax) * k / 40, ay + (by - ay) * k / 40) for k in range(1, 41)
        ]
    path = GlobalPath.from_points(points)
    spline = parameterize(path, gen_cfg.nominal_speed)
    queue = select_landmarks(spline, path.goal, gen_cfg)
    assert len(queue.interior) == 4
    for landmark, apex in zip(queue.interior, corners):
        assert landmark.dist(apex) <= 0.3
    assert queue.goal == Point2(12.0, 8.0)


def test_high_threshold_keeps_goal_only(corner_path):
    cfg = GeneratorConfig(psi_thresh=10.0)
    spline = parameterize(corner_path, cfg.nominal_speed)
    queue = select_landmarks(spline, corner_path.goal, cfg)
    assert queue.points == [corner_path.goal]


def test_advance_landmark_never_pops_goal():
    queue = LandmarkQueue(points=[Point2(1.0, 0.0), Point2(2.0, 0.0)], psi=[0.5, 0.1])
    assert advance_landmark(queue, (0.0, 0.0), 0.3) is queue
    popped = advance_landmark(queue, (1.1, 0.0), 0.3)
    assert popped.points == [Point2(2.0, 0.0)]
    assert popped.psi == [0.1]
    assert advance_landmark(popped, (2.0, 0.0), 0.3).points == [Point2(2.0, 0.0)]


def test_landmark_queue_validates_psi():
    with pytest.raises(ValueError):
        LandmarkQueue(points=[Point2(1.0, 0.0)], psi=[0.1, 0.2])


def test_lm_subgoal_on_open_line(empty_grid, gen_cfg, opt_cfg):
    sg = lm_subgoal((0.0, 0.0), (5.0, 0.0), empty_grid, [], gen_cfg, opt_cfg)
    assert not sg.fallback
    assert sg.source == GeneratorKind.LM_WP
    assert sg.position == (
        pytest.approx(gen_cfg.t_eval_ratio * D_AHEAD),
        pytest.approx(0.0, abs=1e-9),
    )


def test_lm_subgoal_near_landmark_returns_endpoint(empty_grid, gen_cfg, opt_cfg):
    sg = lm_subgoal((0.0, 0.0), (1.0, 0.0), empty_grid, [], gen_cfg, opt_cfg)
    assert sg.position == (pytest.approx(1.0), pytest.approx(0.0, abs=1e-9))
    at = lm_subgoal((1.0, 0.0), (1.0, 0.0), empty_grid, [], gen_cfg, opt_cfg)
    assert at.position == Point2(1.0, 0.0)


def test_lm_subgoal_detours_around_obstacle(empty_grid, gen_cfg, opt_cfg):
    ob = DynamicObstacle(0, Point2(D_AHEAD / 2, 0.0), 0.3, Point2(0.0, 0.0))
    sg = lm_subgoal((0.0, 0.0), (5.0, 0.0), empty_grid, [ob], gen_cfg, opt_cfg)
    assert not sg.fallback
    assert not empty_grid.is_occupied(sg.position)
    assert sg.position.dist(ob.center) - ob.radius >= opt_cfg.safe_dist - 1e-6
    assert sg.position.y > 0.0


def test_lm_subgoal_falls_back_behind_wall(empty_grid, gen_cfg, opt_cfg):
    grid = walled(empty_grid, 0.85)
    sg = lm_subgoal((0.0, 0.0), (5.0, 0.0), grid, [], gen_cfg, opt_cfg, stamp=2.0)
    assert sg.fallback
    assert sg.stamp == 2.0
    assert not grid.is_occupied(sg.position)
    assert sg.position.x <= D_AHEAD / 2 + 1e-9


def test_lm_generator_walks_landmarks(corner_path, empty_grid, gen_cfg):
    gen = LmWpGenerator(gen_cfg, empty_grid)
    gen.reset(corner_path)
    assert len(gen.queue) == 2
    sg = gen.subgoal((0.0, 0.0), 0.0)
    assert isinstance(sg, Subgoal)
    assert sg.position.x == pytest.approx(gen_cfg.t_eval_ratio * D_AHEAD, abs=0.05)
    landmark = gen.queue.front
    gen.subgoal(landmark, 1.0)
    assert gen.queue.front == corner_path.goal


def test_lm_generator_ignores_far_obstacles(straight_path, empty_grid, gen_cfg):
    gen = LmWpGenerator(gen_cfg, empty_grid)
    gen.reset(straight_path)
    far = DynamicObstacle(0, Point2(9.0, 5.0), 0.3, Point2(0.0, 0.0))
    sg = gen.subgoal((0.0, 0.0), 0.0, [far])
    assert not sg.fallback
    assert sg.position.y == pytest.approx(0.0, abs=1e-9)


@pytest.mark.parametrize("kind", list(GeneratorKind))
def test_make_generator(kind, empty_grid, gen_cfg):
    gen = make_generator(kind.value, gen_cfg, empty_grid)
    assert gen.kind == kind


# endregion
