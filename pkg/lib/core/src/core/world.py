# region Docstring
"""
core.world
Static occupancy maps, geometric queries and dynamic obstacles.
Overview:
- OccupancyGrid stores per-cell binary occupancy with a metric resolution and
    origin. Row 0 is the row with the smallest y; points outside the grid are
    treated as occupied by every query.
- Geometric queries (occupancy, ray casting, clearance, nearest surface) are
    computed on small windows of cells with numpy, so no distance field is ever
    precomputed.
- DynamicObstacle is an immutable circle; step_obstacles returns the advanced
    population without mutating its input.
Contents:
- Types:
    - Point2: (x, y) in meters.
    - OccupancyGrid: Grid geometry plus the queries below as methods.
    - SurfaceHit: Signed distance, closest surface point and outward normal.
    - DynamicObstacle: Circle with velocity and motion model.
- Functions:
    - is_occupied, raycast_free: Module-level wrappers of the grid methods.
    - step_obstacles: Advance a population by dt.
    - parse_map / dump_map / read_map: Text map format.
    - bundled_map / load_map / bundled_endpoints: Maps shipped with the library.
Map file format:
- Line 1: `width height resolution origin_x origin_y`.
- Then `height` lines of `width` characters, `#` occupied, `.` free. The first
    grid line is row 0 (smallest y).
"""

# endregion
# region Imports
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path
from typing import Any, Iterable, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from core.constants import BundledMap, MotionModel
from core.errors import ConfigurationError, MapFormatError

# endregion
# region Types

PointLike = Union["Point2", Sequence[float], np.ndarray]


class Point2(NamedTuple):
    """Planar position or vector in meters."""

    x: float
    y: float

    @classmethod
    def of(cls, p: PointLike) -> "Point2":
        return cls(float(p[0]), float(p[1]))

    def dist(self, other: PointLike) -> float:
        return math.hypot(self.x - float(other[0]), self.y - float(other[1]))

    def norm(self) -> float:
        return math.hypot(self.x, self.y)


class SurfaceHit(NamedTuple):
    """
    Nearest static surface seen from a query point.

    distance is negative inside occupied space; normal is a unit vector that
    points from the surface into free space.
    """

    distance: float
    point: Point2
    normal: Point2


# endregion
# region OccupancyGrid


@dataclass(frozen=True, eq=False)
class OccupancyGrid:
    """
    Immutable binary occupancy grid.

    Attributes:
        cells (np.ndarray): bool array of shape (height, width), indexed [row, col].
        resolution (float): Cell edge length in meters.
        origin (Point2): World position of the lower-left corner of cell (0, 0).
        name (str): Map name used in reports.
    """

    cells: np.ndarray
    resolution: float
    origin: Point2 = Point2(0.0, 0.0)
    name: str = "custom"

    def __post_init__(self) -> None:
        cells = np.asarray(self.cells, dtype=bool)
        if cells.ndim != 2 or cells.shape[0] < 1 or cells.shape[1] < 1:
            raise MapFormatError("grid must have at least one row and one column")
        if not (self.resolution > 0 and math.isfinite(self.resolution)):
            raise MapFormatError(f"resolution must be > 0, got {self.resolution}")
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "origin", Point2.of(self.origin))

    @property
    def width(self) -> int:
        return int(self.cells.shape[1])

    @property
    def height(self) -> int:
        return int(self.cells.shape[0])

    @property
    def extent(self) -> Tuple[float, float, float, float]:
        """(x_min, y_min, x_max, y_max) in meters."""
        return (
            self.origin.x,
            self.origin.y,
            self.origin.x + self.width * self.resolution,
            self.origin.y + self.height * self.resolution,
        )

    # region Index arithmetic

    def world_to_cell(self, p: PointLike) -> Tuple[int, int]:
        """(ix, iy) = (column, row) of the cell containing p; may be out of range."""
        return (
            int(math.floor((float(p[0]) - self.origin.x) / self.resolution)),
            int(math.floor((float(p[1]) - self.origin.y) / self.resolution)),
        )

    def cell_center(self, ix: int, iy: int) -> Point2:
        return Point2(
            self.origin.x + (ix + 0.5) * self.resolution,
            self.origin.y + (iy + 0.5) * self.resolution,
        )

    def in_bounds(self, ix: int, iy: int) -> bool:
        return 0 <= ix < self.width and 0 <= iy < self.height

    def occupied_cell(self, ix: int, iy: int) -> bool:
        if not self.in_bounds(ix, iy):
            return True
        return bool(self.cells[iy, ix])

    # endregion
    # region Queries

    def is_occupied(self, p: PointLike) -> bool:
        if not (math.isfinite(float(p[0])) and math.isfinite(float(p[1]))):
            return True
        return self.occupied_cell(*self.world_to_cell(p))

    def raycast_free(self, a: PointLike, b: PointLike) -> bool:
        """True iff every sample on a->b at resolution/2 spacing is free."""
        ax, ay, bx, by = float(a[0]), float(a[1]), float(b[0]), float(b[1])
        length = math.hypot(bx - ax, by - ay)
        n = max(1, int(math.ceil(length / (self.resolution / 2.0))))
        s = np.linspace(0.0, 1.0, n + 1)
        xs = ax + s * (bx - ax)
        ys = ay + s * (by - ay)
        ix = np.floor((xs - self.origin.x) / self.resolution).astype(np.int64)
        iy = np.floor((ys - self.origin.y) / self.resolution).astype(np.int64)
        inside = (ix >= 0) & (ix < self.width) & (iy >= 0) & (iy < self.height)
        if not inside.all():
            return False
        return not bool(self.cells[iy, ix].any())

    def _window(
        self, p: PointLike, reach: float
    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        px, py = float(p[0]), float(p[1])
        return self._window_box((px - reach, py - reach), (px + reach, py + reach))

    def _window_box(
        self, lo: PointLike, hi: PointLike
    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Cell indices covering [lo, hi] and their occupancy (out of bounds = occupied)."""
        ix0, iy0 = self.world_to_cell(lo)
        ix1, iy1 = self.world_to_cell(hi)
        IX, IY = np.meshgrid(np.arange(ix0, ix1 + 1), np.arange(iy0, iy1 + 1))
        inside = (IX >= 0) & (IX < self.width) & (IY >= 0) & (IY < self.height)
        occ = np.ones(IX.shape, dtype=bool)
        occ[inside] = self.cells[IY[inside], IX[inside]]
        return IX, IY, occ

    def _nearest_box(
        self, p: PointLike, IX: np.ndarray, IY: np.ndarray, mask: np.ndarray
    ) -> Optional[Tuple[float, Point2, Point2]]:
        """Closest point over the boxes of the masked cells; ties go to the lowest index."""
        if not mask.any():
            return None
        px, py = float(p[0]), float(p[1])
        x0 = self.origin.x + IX[mask] * self.resolution
        y0 = self.origin.y + IY[mask] * self.resolution
        qx = np.clip(px, x0, x0 + self.resolution)
        qy = np.clip(py, y0, y0 + self.resolution)
        d = np.hypot(qx - px, qy - py)
        k = int(np.argmin(d))
        center = Point2(
            float(x0[k] + self.resolution / 2), float(y0[k] + self.resolution / 2)
        )
        return float(d[k]), Point2(float(qx[k]), float(qy[k])), center

    def surface_query(self, p: PointLike, max_range: float) -> Optional[SurfaceHit]:
        """
        Nearest static surface within max_range of p, or None.

        From free space the closest occupied cell box is used; from inside an
        occupied cell the closest free cell box is used and the distance is
        negated.
        """
        inside = self.is_occupied(p)
        IX, IY, occ = self._window(p, max_range + self.resolution)
        found = self._nearest_box(p, IX, IY, ~occ if inside else occ)
        if found is None:
            return None
        d, q, center = found
        if d > max_range:
            return None
        px, py = float(p[0]), float(p[1])
        if d > 1e-12:
            nx, ny = (px - q.x) / d, (py - q.y) / d
            if inside:
                nx, ny = -nx, -ny
        else:
            # on a shared cell edge: point away from the occupied cell center
            nx, ny = px - center.x, py - center.y
            if inside:
                nx, ny = -nx, -ny
            n = math.hypot(nx, ny) or 1.0
            nx, ny = nx / n, ny / n
        return SurfaceHit(-d if inside else d, q, Point2(nx, ny))

    def clearance(self, p: PointLike, max_range: float) -> float:
        """Distance from p to the nearest occupied space, capped at max_range."""
        return float(self.clearances([p], max_range)[0])

    def clearances(self, points: Any, max_range: float) -> np.ndarray:
        """
        Vectorised clearance of many nearby points, capped at max_range.

        One window spans the bounding box of all points, so this is meant for
        local point sets such as the samples of a short trajectory.
        """
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        if not np.all(np.isfinite(pts)):
            raise ValueError("clearance query points must be finite")
        lo = pts.min(axis=0) - max_range
        hi = pts.max(axis=0) + max_range
        IX, IY, occ = self._window_box(lo, hi)
        if not occ.any():
            return np.full(pts.shape[0], float(max_range))
        x0 = (self.origin.x + IX[occ] * self.resolution)[None, :]
        y0 = (self.origin.y + IY[occ] * self.resolution)[None, :]
        px, py = pts[:, 0:1], pts[:, 1:2]
        qx = np.clip(px, x0, x0 + self.resolution)
        qy = np.clip(py, y0, y0 + self.resolution)
        d = np.hypot(qx - px, qy - py).min(axis=1)
        return np.minimum(d, max_range)

    def inflate(self, radius: float) -> "OccupancyGrid":
        """Grid where every cell whose center lies within radius of occupied space is occupied."""
        if radius <= 0:
            return self
        res = self.resolution
        k = int(math.ceil(radius / res)) + 1
        padded = np.pad(self.cells, k, mode="constant", constant_values=True)
        out = self.cells.copy()
        for dy in range(-k, k + 1):
            for dx in range(-k, k + 1):
                gx = max(0.0, abs(dx) * res - res / 2)
                gy = max(0.0, abs(dy) * res - res / 2)
                if math.hypot(gx, gy) > radius:
                    continue
                out |= padded[
                    k + dy : k + dy + self.height, k + dx : k + dx + self.width
                ]
        return replace(self, cells=out)

    # endregion


# endregion
# region Module-level Queries


def is_occupied(grid: OccupancyGrid, p: PointLike) -> bool:
    """True iff p maps to an occupied cell; out of bounds counts as occupied."""
    return grid.is_occupied(p)


def raycast_free(grid: OccupancyGrid, a: PointLike, b: PointLike) -> bool:
    """True iff the segment a->b is free at resolution/2 sampling."""
    return grid.raycast_free(a, b)


# endregion
# region DynamicObstacle


@dataclass(frozen=True)
class DynamicObstacle:
    """
    Circular moving obstacle.

    Attributes:
        id (int): Stable index within the scenario.
        center (Point2): Current center [m].
        radius (float): Radius [m].
        velocity (Point2): Current velocity [m/s].
        motion (MotionModel): LINEAR_BOUNCE reflects off walls, WAYPOINT_LOOP
            cycles through route.
        route (Tuple[Point2, ...]): Loop targets for WAYPOINT_LOOP.
        leg (int): Index into route of the current target.
    """

    id: int
    center: Point2
    radius: float
    velocity: Point2
    motion: MotionModel = MotionModel.LINEAR_BOUNCE
    route: Tuple[Point2, ...] = field(default_factory=tuple)
    leg: int = 0

    def __post_init__(self) -> None:
        if not self.radius > 0:
            raise ConfigurationError(f"obstacle radius must be > 0, got {self.radius}")

    @property
    def speed(self) -> float:
        return self.velocity.norm()


@lru_cache(maxsize=16)
def _inflated(grid: OccupancyGrid, radius: float) -> OccupancyGrid:
    return grid.inflate(radius)


def _bounce(ob: DynamicObstacle, dt: float, grid: OccupancyGrid) -> DynamicObstacle:
    walls = _inflated(grid, ob.radius)
    cx, cy = ob.center
    vx, vy = ob.velocity
    nx = cx + vx * dt
    if walls.is_occupied((nx, cy)):
        vx, nx = -vx, cx
    ny = cy + vy * dt
    if walls.is_occupied((nx, ny)):
        vy, ny = -vy, cy
    return replace(ob, center=Point2(nx, ny), velocity=Point2(vx, vy))


def _advance(ob: DynamicObstacle, dt: float) -> DynamicObstacle:
    return replace(
        ob,
        center=Point2(
            ob.center.x + ob.velocity.x * dt, ob.center.y + ob.velocity.y * dt
        ),
    )


def _loop(ob: DynamicObstacle, dt: float) -> DynamicObstacle:
    if not ob.route:
        return _advance(ob, dt)
    speed = ob.speed
    target = ob.route[ob.leg]
    if ob.center.dist(target) > speed * dt:
        return _advance(ob, dt)
    leg = (ob.leg + 1) % len(ob.route)
    nxt = ob.route[leg]
    dx, dy = nxt.x - target.x, nxt.y - target.y
    n = math.hypot(dx, dy)
    if n < 1e-12:
        velocity = ob.velocity
    else:
        velocity = Point2(speed * dx / n, speed * dy / n)
    return replace(ob, center=target, velocity=velocity, leg=leg)


def step_obstacles(
    obstacles: Iterable[DynamicObstacle], dt: float, grid: OccupancyGrid
) -> List[DynamicObstacle]:
    """
    Advance every obstacle by dt.

    Linear-bounce obstacles flip the velocity component of the blocked axis, so
    their speed never changes. Waypoint-loop obstacles snap onto a reached
    target and turn toward the next one at the same speed.
    """
    if not dt > 0:
        raise ConfigurationError(f"dt must be > 0, got {dt}")
    out = []
    for ob in obstacles:
        if ob.motion == MotionModel.WAYPOINT_LOOP:
            out.append(_loop(ob, dt))
        else:
            out.append(_bounce(ob, dt, grid))
    return out


# endregion
# region Map I/O


def parse_map(text: str, name: str = "custom", source: str = "<string>") -> OccupancyGrid:
    """Parse the text map format; errors name the source and line."""
    lines = [ln.rstrip("\r") for ln in text.splitlines()]
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise MapFormatError(f"{source}: empty map file")
    header = lines[0].split()
    if len(header) != 5:
        raise MapFormatError(
            f"{source}:1: header must be 'width height resolution origin_x origin_y'"
        )
    try:
        width, height = int(header[0]), int(header[1])
        resolution, ox, oy = (float(v) for v in header[2:])
    except ValueError as e:
        raise MapFormatError(f"{source}:1: {e}") from e
    if width < 1 or height < 1:
        raise MapFormatError(f"{source}:1: width and height must be >= 1")
    rows = lines[1:]
    if len(rows) != height:
        raise MapFormatError(
            f"{source}: expected {height} grid lines, found {len(rows)}"
        )
    cells = np.zeros((height, width), dtype=bool)
    for iy, row in enumerate(rows):
        if len(row) != width:
            raise MapFormatError(
                f"{source}:{iy + 2}: expected {width} characters, found {len(row)}"
            )
        bad = set(row) - {"#", "."}
        if bad:
            raise MapFormatError(
                f"{source}:{iy + 2}: unexpected characters {sorted(bad)}"
            )
        cells[iy] = [c == "#" for c in row]
    return OccupancyGrid(cells, resolution, Point2(ox, oy), name)


def dump_map(grid: OccupancyGrid) -> str:
    header = (
        f"{grid.width} {grid.height} {grid.resolution:g} "
        f"{grid.origin.x:g} {grid.origin.y:g}"
    )
    rows = ["".join("#" if c else "." for c in row) for row in grid.cells]
    return "\n".join([header, *rows]) + "\n"


def read_map(path: Path) -> OccupancyGrid:
    path = Path(path)
    if not path.is_file():
        raise MapFormatError(f"map file not found: {path}")
    return parse_map(path.read_text(encoding="utf-8"), name=path.stem, source=str(path))


# endregion
# region Bundled Maps

_RES = 0.2
_WALL = 0.4


def _blank(width_m: float, height_m: float) -> np.ndarray:
    cells = np.zeros((round(height_m / _RES), round(width_m / _RES)), dtype=bool)
    t = round(_WALL / _RES)
    cells[:t, :] = cells[-t:, :] = True
    cells[:, :t] = cells[:, -t:] = True
    return cells


def _wall(cells: np.ndarray, x0: float, y0: float, x1: float, y1: float) -> None:
    cells[round(y0 / _RES) : round(y1 / _RES), round(x0 / _RES) : round(x1 / _RES)] = True


def bundled_map(name: Union[str, BundledMap]) -> OccupancyGrid:
    """
    Build a bundled map.

    - empty: 25 x 25 m walled rectangle.
    - office: 30 x 20 m with two offset partitions and two side rooms, so a
        start-to-goal path needs several turns.
    """
    kind = BundledMap(name)
    if kind == BundledMap.EMPTY:
        return OccupancyGrid(_blank(25.0, 25.0), _RES, Point2(0.0, 0.0), kind.value)
    cells = _blank(30.0, 20.0)
    _wall(cells, 10.0, 0.0, 10.0 + _WALL, 14.0)
    _wall(cells, 20.0, 6.0, 20.0 + _WALL, 20.0)
    _wall(cells, 0.0, 10.0, 6.0, 10.0 + _WALL)
    _wall(cells, 24.0, 10.0, 30.0, 10.0 + _WALL)
    return OccupancyGrid(cells, _RES, Point2(0.0, 0.0), kind.value)


_ENDPOINTS = {
    BundledMap.EMPTY: (Point2(2.0, 2.0), Point2(23.0, 23.0)),
    BundledMap.OFFICE: (Point2(2.0, 2.0), Point2(28.0, 18.0)),
}


def bundled_endpoints(name: Union[str, BundledMap]) -> Tuple[Point2, Point2]:
    """Default (start, goal) of a bundled map."""
    return _ENDPOINTS[BundledMap(name)]


def is_bundled(name: str) -> bool:
    return name in {m.value for m in BundledMap}


def load_map(name_or_path: Union[str, Path], base_dir: Optional[Path] = None) -> OccupancyGrid:
    """
    Resolve a bundled map name or a map file path.

    Raises:
        ConfigurationError: Unknown name that is not an existing file either.
        MapFormatError: File exists but does not parse.
    """
    text = str(name_or_path)
    if is_bundled(text):
        return bundled_map(text)
    path = Path(text)
    if not path.is_absolute() and base_dir is not None:
        path = Path(base_dir) / path
    if path.suffix or path.exists() or "/" in text or "\\" in text:
        return read_map(path)
    raise ConfigurationError(
        f"unknown map '{text}' (bundled: {', '.join(m.value for m in BundledMap)})"
    )


# endregion

__all__ = [
    "DynamicObstacle",
    "OccupancyGrid",
    "Point2",
    "PointLike",
    "SurfaceHit",
    "bundled_endpoints",
    "bundled_map",
    "dump_map",
    "is_bundled",
    "is_occupied",
    "load_map",
    "parse_map",
    "raycast_free",
    "read_map",
    "step_obstacles",
]
