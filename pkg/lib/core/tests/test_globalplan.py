import heapq
import math

import numpy as np
import pytest

from core.bspline import de_boor
from core.errors import UnreachableGoalError
from core.globalplan import GlobalPath, _astar, parameterize, plan_global
from core.world import OccupancyGrid, Point2


def dijkstra_cost(grid: OccupancyGrid, start, goal) -> float:
    """Plain 8-connected Dijkstra without corner cutting, in cell units."""
    w, h = grid.width, grid.height
    dist = {start: 0.0}
    heap = [(0.0, start)]
    while heap:
        d, (x, y) = heapq.heappop(heap)
        if (x, y) == goal:
            return d
        if d > dist[(x, y)]:
            continue
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                if not (dx or dy):
                    continue
                nx, ny = x + dx, y + dy
                if not (0 <= nx < w and 0 <= ny < h) or grid.cells[ny, nx]:
                    continue
                if dx and dy and (grid.cells[y, nx] or grid.cells[ny, x]):
                    continue
                nd = d + math.hypot(dx, dy)
                if nd < dist.get((nx, ny), math.inf):
                    dist[(nx, ny)] = nd
                    heapq.heappush(heap, (nd, (nx, ny)))
    return math.inf


def random_grid(seed: int, size: int = 30, density: float = 0.25) -> OccupancyGrid:
    rng = np.random.default_rng(seed)
    cells = rng.random((size, size)) < density
    return OccupancyGrid(cells, 0.5, Point2(0.0, 0.0), f"random{seed}")


def free_cell(grid: OccupancyGrid, rng: np.random.Generator):
    free = np.argwhere(~grid.cells)
    iy, ix = free[rng.integers(len(free))]
    return int(ix), int(iy)


def cell_path_cost(cells) -> float:
    return sum(math.hypot(b[0] - a[0], b[1] - a[1]) for a, b in zip(cells, cells[1:]))


@pytest.mark.parametrize("seed", range(12))
def test_astar_matches_dijkstra(seed):
    grid = random_grid(seed)
    rng = np.random.default_rng(100 + seed)
    start, goal = free_cell(grid, rng), free_cell(grid, rng)
    expected = dijkstra_cost(grid, start, goal)
    cells = _astar(grid, start, goal)
    if math.isinf(expected):
        assert cells == []
        with pytest.raises(UnreachableGoalError, match="unreachable goal"):
            plan_global(grid, grid.cell_center(*start), grid.cell_center(*goal))
        return
    assert cells[0] == start and cells[-1] == goal
    assert cell_path_cost(cells) == pytest.approx(expected)
    path = plan_global(grid, grid.cell_center(*start), grid.cell_center(*goal))
    assert path.length <= expected * grid.resolution + 1e-6
    assert path.length >= math.dist(path.start, path.goal) - 1e-9


def test_straight_line_on_open_grid(empty_grid):
    path = plan_global(empty_grid, (0.0, 0.0), (5.0, 0.0))
    assert path.length == pytest.approx(5.0, abs=1e-9)
    assert path.start == Point2(0.0, 0.0)
    assert path.goal == Point2(5.0, 0.0)
    assert np.all(np.diff(path.cum_length) <= empty_grid.resolution + 1e-9)


def test_office_path(office_map):
    start, goal = (2.0, 2.0), (28.0, 18.0)
    path = plan_global(office_map, start, goal, clearance=0.5)
    assert path.start == Point2(*start)
    assert path.goal == Point2(*goal)
    assert path.length >= math.dist(start, goal)
    for a, b in zip(path.poses[:-1], path.poses[1:]):
        assert office_map.raycast_free(a, b)
    assert office_map.clearances(path.poses, 1.0).min() >= 0.25


def test_clearance_falls_back_to_plain_grid():
    cells = np.ones((5, 30), dtype=bool)
    cells[2, :] = False
    corridor = OccupancyGrid(cells, 0.2, Point2(0.0, 0.0), "slot")
    path = plan_global(corridor, (0.1, 0.5), (5.9, 0.5), clearance=0.5)
    assert path.length == pytest.approx(5.8)


def test_unreachable_goal(empty_grid):
    cells = empty_grid.cells.copy()
    ix, iy = empty_grid.world_to_cell((5.0, 5.0))
    cells[iy - 3 : iy + 4, ix - 3 : ix + 4] = True
    cells[iy - 2 : iy + 3, ix - 2 : ix + 3] = False
    boxed = OccupancyGrid(cells, empty_grid.resolution, empty_grid.origin)
    with pytest.raises(UnreachableGoalError, match="unreachable goal"):
        plan_global(boxed, (0.0, 0.0), (5.0, 5.0))


def test_occupied_endpoint_is_unreachable(office_map):
    with pytest.raises(UnreachableGoalError):
        plan_global(office_map, (2.0, 2.0), (10.2, 5.0))


def test_project_and_point_at(straight_path):
    proj = straight_path.project((3.0, 1.0))
    assert proj.distance == pytest.approx(1.0)
    assert proj.arclength == pytest.approx(3.0)
    assert proj.point == (pytest.approx(3.0), pytest.approx(0.0))
    assert straight_path.point_at(20.0) == straight_path.goal
    assert straight_path.point_at(-1.0) == straight_path.start
    assert straight_path.point_at(2.5) == (pytest.approx(2.5), pytest.approx(0.0))


def test_from_points_drops_duplicates():
    path = GlobalPath.from_points([(0, 0), (0, 0), (1, 0), (1, 0), (1, 1)])
    assert len(path) == 3
    assert path.length == pytest.approx(2.0)
    assert np.all(np.diff(path.cum_length) > 0)


def test_parameterize_spans_path(corner_path):
    spline = parameterize(corner_path, nominal_speed=1.0)
    assert de_boor(spline, spline.t_start) == (
        pytest.approx(0.0, abs=1e-9),
        pytest.approx(0.0, abs=1e-9),
    )
    assert de_boor(spline, spline.t_end) == (pytest.approx(5.0), pytest.approx(5.0))
    assert spline.duration == pytest.approx(corner_path.length, rel=0.05)
