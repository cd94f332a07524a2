# region Docstring
"""
core.globalplan
Global path search on the occupancy grid and its b-spline parameterization.
Overview:
- plan_global runs 8-connected A* with an octile heuristic, no corner cutting
    and a (f, cell index) heap order, so equal-cost ties always resolve to the
    lower cell index and identical inputs give identical paths.
- The cell path is shortcut greedily (skip poses while the straight segment
    stays free) and resampled at grid-resolution spacing with the exact start
    and goal kept as end poses.
- An optional clearance inflates the grid before the search. When start or
    goal sit inside the inflated band, or the inflated search fails, the search
    is repeated on the plain grid.
Contents:
- Types:
    - GlobalPath: poses plus cumulative arclength, with projection helpers.
- Functions:
    - plan_global(grid, start, goal, clearance) -> GlobalPath
    - parameterize(path, nominal_speed, degree) -> UniformBSpline
"""

# endregion
# region Imports
import heapq
import math
from dataclasses import dataclass
from typing import List, NamedTuple, Sequence, Tuple

import numpy as np

from core.bspline import UniformBSpline, fit_uniform
from core.errors import UnreachableGoalError
from core.logger import get_logger
from core.world import OccupancyGrid, Point2, PointLike

# endregion
# region Logger

logger = get_logger("globalplan")

# endregion
# region GlobalPath


class PathProjection(NamedTuple):
    """Closest point of a path to a query point."""

    distance: float
    arclength: float
    point: Point2
    segment: int


@dataclass(frozen=True, eq=False)
class GlobalPath:
    """
    Dense pose sequence with cumulative arclength.

    Attributes:
        poses (np.ndarray): (N, 2) poses, N >= 2.
        cum_length (np.ndarray): (N,) arclength at each pose, strictly increasing from 0.
    """

    poses: np.ndarray
    cum_length: np.ndarray

    @classmethod
    def from_points(cls, points: Sequence[PointLike]) -> "GlobalPath":
        """Build from points, dropping consecutive duplicates."""
        pts = np.asarray([[float(p[0]), float(p[1])] for p in points], dtype=float)
        keep = [0]
        for i in range(1, len(pts)):
            if np.hypot(*(pts[i] - pts[keep[-1]])) > 1e-9:
                keep.append(i)
        pts = pts[keep]
        if len(pts) == 1:
            pts = np.vstack([pts, pts])
            cum = np.array([0.0, 0.0])
        else:
            cum = np.concatenate(([0.0], np.cumsum(np.hypot(*np.diff(pts, axis=0).T))))
        pts.setflags(write=False)
        cum.setflags(write=False)
        return cls(pts, cum)

    def __len__(self) -> int:
        return int(self.poses.shape[0])

    @property
    def length(self) -> float:
        return float(self.cum_length[-1])

    @property
    def start(self) -> Point2:
        return Point2.of(self.poses[0])

    @property
    def goal(self) -> Point2:
        return Point2.of(self.poses[-1])

    def point_at(self, s: float) -> Point2:
        """Pose at arclength s, clamped to the path."""
        s = min(max(s, 0.0), self.length)
        x = float(np.interp(s, self.cum_length, self.poses[:, 0]))
        y = float(np.interp(s, self.cum_length, self.poses[:, 1]))
        return Point2(x, y)

    def project(self, p: PointLike) -> PathProjection:
        """Closest point on the polyline; ties go to the earliest segment."""
        a = self.poses[:-1]
        b = self.poses[1:]
        ab = b - a
        seg_len2 = np.einsum("ij,ij->i", ab, ab)
        q = np.array([float(p[0]), float(p[1])])
        with np.errstate(invalid="ignore", divide="ignore"):
            s = np.where(seg_len2 > 0, np.einsum("ij,ij->i", q - a, ab) / seg_len2, 0.0)
        s = np.clip(s, 0.0, 1.0)
        foot = a + s[:, None] * ab
        d = np.hypot(*(foot - q).T)
        k = int(np.argmin(d))
        arc = float(self.cum_length[k] + s[k] * np.sqrt(seg_len2[k]))
        return PathProjection(float(d[k]), arc, Point2.of(foot[k]), k)


# endregion
# region A* Search

_MOVES: Tuple[Tuple[int, int, float], ...] = (
    (1, 0, 1.0),
    (-1, 0, 1.0),
    (0, 1, 1.0),
    (0, -1, 1.0),
    (1, 1, math.sqrt(2.0)),
    (1, -1, math.sqrt(2.0)),
    (-1, 1, math.sqrt(2.0)),
    (-1, -1, math.sqrt(2.0)),
)


def _octile(ix: int, iy: int, gx: int, gy: int) -> float:
    dx, dy = abs(ix - gx), abs(iy - gy)
    return (dx + dy) + (math.sqrt(2.0) - 2.0) * min(dx, dy)


def _astar(
    grid: OccupancyGrid, start: Tuple[int, int], goal: Tuple[int, int]
) -> List[Tuple[int, int]]:
    """Cell path from start to goal (inclusive) or [] when unreachable."""
    w, h = grid.width, grid.height
    cells = grid.cells
    g = np.full(w * h, np.inf)
    parent = np.full(w * h, -1, dtype=np.int64)
    closed = np.zeros(w * h, dtype=bool)
    sx, sy = start
    gx, gy = goal
    s_idx, g_idx = sy * w + sx, gy * w + gx
    g[s_idx] = 0.0
    heap: List[Tuple[float, int]] = [(_octile(sx, sy, gx, gy), s_idx)]
    while heap:
        _, idx = heapq.heappop(heap)
        if closed[idx]:
            continue
        closed[idx] = True
        if idx == g_idx:
            break
        iy, ix = divmod(idx, w)
        for dx, dy, cost in _MOVES:
            nx, ny = ix + dx, iy + dy
            if not (0 <= nx < w and 0 <= ny < h) or cells[ny, nx]:
                continue
            if dx and dy and (cells[iy, nx] or cells[ny, ix]):
                continue
            n_idx = ny * w + nx
            if closed[n_idx]:
                continue
            cand = g[idx] + cost
            if cand < g[n_idx]:
                g[n_idx] = cand
                parent[n_idx] = idx
                heapq.heappush(heap, (cand + _octile(nx, ny, gx, gy), n_idx))
    if not closed[g_idx]:
        return []
    out = []
    idx = g_idx
    while idx != -1:
        iy, ix = divmod(int(idx), w)
        out.append((ix, iy))
        idx = parent[idx]
    out.reverse()
    return out


# endregion
# region Smoothing


def _segment_free(grid: OccupancyGrid, a: PointLike, b: PointLike) -> bool:
    length = math.hypot(float(b[0]) - float(a[0]), float(b[1]) - float(a[1]))
    n = max(1, int(math.ceil(length / (grid.resolution / 4.0))))
    s = np.linspace(0.0, 1.0, n + 1)
    xs = float(a[0]) + s * (float(b[0]) - float(a[0]))
    ys = float(a[1]) + s * (float(b[1]) - float(a[1]))
    ix = np.floor((xs - grid.origin.x) / grid.resolution).astype(np.int64)
    iy = np.floor((ys - grid.origin.y) / grid.resolution).astype(np.int64)
    inside = (ix >= 0) & (ix < grid.width) & (iy >= 0) & (iy < grid.height)
    return bool(inside.all()) and not bool(grid.cells[iy, ix].any())


def _shortcut(grid: OccupancyGrid, pts: List[Point2]) -> List[Point2]:
    out = [pts[0]]
    i = 0
    while i < len(pts) - 1:
        j = i + 1
        while j + 1 < len(pts) and _segment_free(grid, pts[i], pts[j + 1]):
            j += 1
        out.append(pts[j])
        i = j
    return out


def _resample(pts: List[Point2], spacing: float) -> List[Point2]:
    out = [pts[0]]
    for a, b in zip(pts[:-1], pts[1:]):
        n = max(1, int(math.ceil(a.dist(b) / spacing)))
        for k in range(1, n + 1):
            s = k / n
            out.append(Point2(a.x + s * (b.x - a.x), a.y + s * (b.y - a.y)))
    out[-1] = pts[-1]
    return out


# endregion
# region Public API


def _search(grid: OccupancyGrid, start: Point2, goal: Point2) -> List[Point2]:
    sc, gc = grid.world_to_cell(start), grid.world_to_cell(goal)
    if grid.occupied_cell(*sc) or grid.occupied_cell(*gc):
        return []
    cells = _astar(grid, sc, gc)
    if not cells:
        return []
    pts = [start] + [grid.cell_center(ix, iy) for ix, iy in cells[1:-1]] + [goal]
    return _shortcut(grid, pts)


def plan_global(
    grid: OccupancyGrid,
    start: PointLike,
    goal: PointLike,
    clearance: float = 0.0,
) -> GlobalPath:
    """
    Collision-free path from start to goal.

    Args:
        grid: Static map.
        start: Start position.
        goal: Goal position.
        clearance: Search clearance [m] from walls; 0 searches the plain grid.

    Raises:
        UnreachableGoalError: "unreachable goal" when no path exists.
    """
    start, goal = Point2.of(start), Point2.of(goal)
    corners: List[Point2] = []
    if clearance > 0:
        corners = _search(grid.inflate(clearance), start, goal)
        if not corners:
            logger.debug("Clearance search failed, retrying on the plain grid")
    if not corners:
        corners = _search(grid, start, goal)
    if not corners:
        raise UnreachableGoalError("unreachable goal")
    if len(corners) == 1 or corners[0] == corners[-1]:
        corners = [start, goal]
    path = GlobalPath.from_points(_resample(corners, grid.resolution))
    logger.debug(
        "Global path planned",
        extra={"poses": len(path), "length": round(path.length, 3)},
    )
    return path


def parameterize(
    path: GlobalPath, nominal_speed: float = 1.0, degree: int = 3
) -> UniformBSpline:
    """
    Uniform b-spline through the path, traversed at about nominal_speed.

    The knot interval is the mean pose spacing divided by nominal_speed, with
    one knot interval per pose spacing.
    """
    spacing = path.length / max(1, len(path) - 1)
    return fit_uniform(
        path, degree=degree, dt=spacing / nominal_speed, segment_length=spacing
    )


# endregion

__all__ = ["GlobalPath", "PathProjection", "parameterize", "plan_global"]
