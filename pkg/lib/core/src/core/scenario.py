# region Docstring
"""
core.scenario
Scenario files and seeded obstacle populations.
Overview:
- ScenarioSpec is the pydantic model of a scenario file (YAML key: value) and
    of one benchmark cell run. It only names a map; build_scenario resolves the
    map, validates start and goal and spawns the obstacles.
- Spawning draws from numpy's default_rng(seed), so a (spec, seed) pair always
    yields the same obstacle population. The benchmark relies on this to give
    every generator the same obstacles.
Contents:
- Classes:
    - ScenarioSpec: File-level description.
    - Scenario: Resolved grid, endpoints and obstacles.
- Functions:
    - load_scenario_spec(path) -> ScenarioSpec
    - build_scenario(spec, base_dir) -> Scenario
    - spawn_obstacles(grid, start, goal, count, v_obs, ...) -> List[DynamicObstacle]
"""

# endregion
# region Imports
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import yaml
from pydantic import BaseModel, Field, ValidationError

from core.constants import MotionModel
from core.errors import ConfigurationError, ScenarioFormatError
from core.world import (
    DynamicObstacle,
    OccupancyGrid,
    Point2,
    bundled_endpoints,
    is_bundled,
    load_map,
)

# endregion
# region Constants

SPAWN_KEEPOUT: float = 2.0
"""float: [m] Minimum spawn distance from start and goal."""
SPAWN_MARGIN: float = 0.1
"""float: [m] Extra wall clearance of a spawned obstacle."""
SPAWN_ATTEMPTS: int = 2000
ROUTE_LENGTH: int = 4
ROUTE_REACH: float = 6.0
"""float: [m] Maximum leg length of a waypoint-loop route."""

# endregion
# region Models


class ScenarioSpec(BaseModel):
    """
    Scenario file contents.

    Attributes:
        map (str): Bundled map name or map file path (relative to the scenario file).
        start (Tuple[float, float] | None): Start position; bundled maps supply a default.
        goal (Tuple[float, float] | None): Goal position; bundled maps supply a default.
        obstacles (int): Number of dynamic obstacles.
        v_obs (float): Obstacle speed [m/s].
        motion (MotionModel): Obstacle motion model.
        seed (int): Seed of the obstacle population.
        obstacle_radius (float): Obstacle radius [m].
        generator (Dict[str, Any]): GeneratorConfig overrides.
    """

    map: str = Field(..., description="Bundled map name or map file path.")
    start: Optional[Tuple[float, float]] = Field(default=None)
    goal: Optional[Tuple[float, float]] = Field(default=None)
    obstacles: int = Field(default=0, ge=0)
    v_obs: float = Field(default=0.3, ge=0)
    motion: MotionModel = Field(default=MotionModel.LINEAR_BOUNCE)
    seed: int = Field(default=0, ge=0)
    obstacle_radius: float = Field(default=0.3, gt=0)
    generator: Dict[str, Any] = Field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class Scenario:
    """A resolved episode setup."""

    grid: OccupancyGrid
    start: Point2
    goal: Point2
    obstacles: Tuple[DynamicObstacle, ...]
    v_obs: float
    seed: int
    motion: MotionModel = MotionModel.LINEAR_BOUNCE

    @property
    def map_name(self) -> str:
        return self.grid.name


# endregion
# region Loading


def load_scenario_spec(path: Path) -> ScenarioSpec:
    """
    Read a YAML scenario file.

    Raises:
        ScenarioFormatError: Missing file, YAML errors or invalid fields. The
            message names the file and the offending field.
    """
    path = Path(path)
    if not path.is_file():
        raise ScenarioFormatError(f"scenario file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as e:
        raise ScenarioFormatError(f"{path}: {e}") from e
    if not isinstance(data, dict):
        raise ScenarioFormatError(f"{path}: expected 'key: value' mapping")
    try:
        return ScenarioSpec.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        loc = ".".join(str(part) for part in first.get("loc", ())) or "?"
        raise ScenarioFormatError(
            f"{path}: invalid value for '{loc}': {first['msg']}"
        ) from e


def _endpoint(
    value: Optional[Tuple[float, float]], fallback: Optional[Point2], label: str
) -> Point2:
    if value is not None:
        return Point2.of(value)
    if fallback is None:
        raise ScenarioFormatError(f"'{label}' is required for custom maps")
    return fallback


def build_scenario(spec: ScenarioSpec, base_dir: Optional[Path] = None) -> Scenario:
    """Resolve the map, check the endpoints and spawn the obstacle population."""
    grid = load_map(spec.map, base_dir)
    defaults = bundled_endpoints(spec.map) if is_bundled(spec.map) else (None, None)
    start = _endpoint(spec.start, defaults[0], "start")
    goal = _endpoint(spec.goal, defaults[1], "goal")
    for label, p in (("start", start), ("goal", goal)):
        if grid.is_occupied(p):
            raise ScenarioFormatError(
                f"'{label}' ({p.x:g}, {p.y:g}) lies in occupied space of map '{grid.name}'"
            )
    obstacles = spawn_obstacles(
        grid,
        start,
        goal,
        count=spec.obstacles,
        v_obs=spec.v_obs,
        motion=spec.motion,
        seed=spec.seed,
        radius=spec.obstacle_radius,
    )
    return Scenario(
        grid=grid,
        start=start,
        goal=goal,
        obstacles=tuple(obstacles),
        v_obs=spec.v_obs,
        seed=spec.seed,
        motion=spec.motion,
    )


# endregion
# region Spawning


def _sample_free(
    rng: np.random.Generator, inflated: OccupancyGrid, near: Optional[Point2] = None
) -> Point2:
    x0, y0, x1, y1 = inflated.extent
    if near is not None:
        x0, x1 = max(x0, near.x - ROUTE_REACH), min(x1, near.x + ROUTE_REACH)
        y0, y1 = max(y0, near.y - ROUTE_REACH), min(y1, near.y + ROUTE_REACH)
    return Point2(float(rng.uniform(x0, x1)), float(rng.uniform(y0, y1)))


def _route(
    rng: np.random.Generator, inflated: OccupancyGrid, home: Point2
) -> Tuple[Point2, ...]:
    """Closed loop home -> p1 -> ... -> home whose legs are all free."""
    for _ in range(SPAWN_ATTEMPTS // 10):
        points = [home]
        for _ in range(SPAWN_ATTEMPTS):
            if len(points) == ROUTE_LENGTH:
                break
            p = _sample_free(rng, inflated, near=points[-1])
            if (
                not inflated.is_occupied(p)
                and p.dist(points[-1]) > 1.0
                and inflated.raycast_free(points[-1], p)
            ):
                points.append(p)
        if len(points) == ROUTE_LENGTH and inflated.raycast_free(points[-1], home):
            return tuple(points[1:]) + (home,)
    raise ConfigurationError("could not build a free waypoint-loop route")


def spawn_obstacles(
    grid: OccupancyGrid,
    start: Point2,
    goal: Point2,
    count: int,
    v_obs: float,
    motion: MotionModel = MotionModel.LINEAR_BOUNCE,
    seed: int = 0,
    radius: float = 0.3,
) -> List[DynamicObstacle]:
    """
    Place count obstacles in free space away from start, goal and each other.

    Every obstacle moves at exactly v_obs. Linear-bounce obstacles get a
    uniformly random heading; waypoint-loop obstacles head to the first point
    of a random closed route with free legs.
    """
    rng = np.random.default_rng(seed)
    inflated = grid.inflate(radius + SPAWN_MARGIN)
    placed: List[DynamicObstacle] = []
    for idx in range(count):
        for _ in range(SPAWN_ATTEMPTS):
            c = _sample_free(rng, inflated)
            if inflated.is_occupied(c):
                continue
            if c.dist(start) < SPAWN_KEEPOUT or c.dist(goal) < SPAWN_KEEPOUT:
                continue
            if any(c.dist(o.center) < 2 * radius + SPAWN_MARGIN for o in placed):
                continue
            break
        else:
            raise ConfigurationError(
                f"could not place obstacle {idx} of {count} in map '{grid.name}'"
            )
        if motion == MotionModel.WAYPOINT_LOOP:
            route = _route(rng, inflated, c)
            dx, dy = route[0].x - c.x, route[0].y - c.y
            n = math.hypot(dx, dy)
            velocity = Point2(v_obs * dx / n, v_obs * dy / n)
        else:
            route = ()
            heading = float(rng.uniform(0.0, 2.0 * math.pi))
            velocity = Point2(v_obs * math.cos(heading), v_obs * math.sin(heading))
        placed.append(
            DynamicObstacle(
                id=idx,
                center=c,
                radius=radius,
                velocity=velocity,
                motion=motion,
                route=route,
            )
        )
    return placed


# endregion

__all__ = [
    "Scenario",
    "ScenarioSpec",
    "build_scenario",
    "load_scenario_spec",
    "spawn_obstacles",
]
