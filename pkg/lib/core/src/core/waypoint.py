# region Docstring
"""
core.waypoint
Subgoal generation between the global path and the local controller.
Overview:
- Three interchangeable generators share the SubgoalGenerator interface:
    - SubWpGenerator: fixed arclength waypoints consumed strictly in order.
    - SthWpGenerator: circle/path intersection at d_ahead with a stall and
        off-course watchdog.
    - LmWpGenerator: landmarks at turning points of the fitted global spline,
        approached through rebound-optimized local trajectories.
- A generator answers every query with a Subgoal or a ReplanRequest. The
    caller owns replanning and hands the new path back through reset().
Contents:
- Models:
    - Subgoal, ReplanRequest, LandmarkQueue.
- Functions:
    - subwp_waypoints(path, spacing) -> List[Subgoal]
    - circle_intersections(path, center, radius) -> List[(arclength, Point2)]
    - sth_subgoal(path, robot, cfg) -> Subgoal | ReplanRequest
    - sth_watchdog(history, path, cfg) -> ReplanRequest | None
    - select_landmarks(spline, goal, cfg) -> LandmarkQueue
    - lm_subgoal(robot, landmark, grid, obstacles, cfg, opt_cfg) -> Subgoal
    - advance_landmark(queue, robot, reach_radius) -> LandmarkQueue
    - make_generator(kind, ...) -> SubgoalGenerator
Design Notes:
- Landmarks: the steering profile is split into turns (runs of samples whose
    curvature exceeds kappa_floor). psi accumulates from the last landmark; a
    turn that ends with the accumulator above psi_thresh emits one landmark at
    its sample of largest angular rate and resets the accumulator.
- STH-WP picks the intersection with the largest arclength. When the goal is
    within d_ahead the goal itself is the subgoal.
- SUB-WP places waypoints at every multiple of the spacing up to the path
    length (1e-6 m tolerance) and then appends the goal, so a 5 m path at 1 m
    spacing gives waypoints at 1 .. 5 m plus the goal.
"""

# endregion
# region Imports
import math
from abc import ABC, abstractmethod
from collections import deque
from logging import Logger
from typing import Deque, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, field_validator

from core.bspline import UniformBSpline, de_boor, line_spline, steering_profile
from core.config import GeneratorConfig, OptConfig
from core.constants import GeneratorKind
from core.globalplan import GlobalPath, parameterize
from core.localopt import ObstacleLike, rebound_optimize
from core.logger import get_logger
from core.world import OccupancyGrid, Point2, PointLike

# endregion
# region Logger

logger = get_logger("waypoint")

# endregion
# region Models


class Subgoal(BaseModel):
    """Short-horizon target handed to the local controller."""

    position: Point2 = Field(..., description="Subgoal position [m].")
    source: GeneratorKind = Field(..., description="Generator that produced it.")
    stamp: float = Field(default=0.0, description="Creation time [s].")
    fallback: bool = Field(
        default=False, description="LM-WP fallback after an optimizer failure."
    )


class ReplanRequest(BaseModel):
    """Ask the caller for a new global path."""

    reason: str = Field(..., description="no-intersection, stalled or off-course.")
    stamp: float = Field(default=0.0)


class LandmarkQueue(BaseModel):
    """
    Ordered landmarks ending with the goal.

    Attributes:
        points (List[Point2]): Landmarks, last one is the goal.
        psi (List[float]): Accumulated steering angle at emission, one per point.
    """

    points: List[Point2] = Field(..., min_length=1)
    psi: List[float] = Field(default_factory=list)

    @field_validator("psi")
    @classmethod
    def _psi_len(cls, v: List[float], info) -> List[float]:
        points = info.data.get("points") or []
        if v and len(v) != len(points):
            raise ValueError("psi must have one value per landmark")
        return v

    def __len__(self) -> int:
        return len(self.points)

    @property
    def front(self) -> Point2:
        return self.points[0]

    @property
    def goal(self) -> Point2:
        return self.points[-1]

    @property
    def interior(self) -> List[Point2]:
        return self.points[:-1]


SubgoalResult = Union[Subgoal, ReplanRequest]

# endregion
# region SUB-WP


def subwp_waypoints(
    path: GlobalPath, spacing: float, stamp: float = 0.0
) -> List[Subgoal]:
    """Waypoints every `spacing` meters of arclength, then the goal."""
    if not spacing > 0:
        raise ValueError(f"spacing must be > 0, got {spacing}")
    out: List[Subgoal] = []
    k = 1
    while k * spacing <= path.length + 1e-6:
        out.append(
            Subgoal(
                position=path.point_at(k * spacing),
                source=GeneratorKind.SUB_WP,
                stamp=stamp,
            )
        )
        k += 1
    out.append(Subgoal(position=path.goal, source=GeneratorKind.SUB_WP, stamp=stamp))
    return out


# endregion
# region STH-WP


def circle_intersections(
    path: GlobalPath, center: PointLike, radius: float
) -> List[Tuple[float, Point2]]:
    """All (arclength, point) where the circle crosses the polyline, by arclength."""
    cx, cy = float(center[0]), float(center[1])
    out: List[Tuple[float, Point2]] = []
    P = path.poses
    for i in range(len(P) - 1):
        ax, ay = P[i]
        bx, by = P[i + 1]
        dx, dy = bx - ax, by - ay
        fx, fy = ax - cx, ay - cy
        a = dx * dx + dy * dy
        if a < 1e-18:
            continue
        b = 2.0 * (fx * dx + fy * dy)
        c = fx * fx + fy * fy - radius * radius
        disc = b * b - 4.0 * a * c
        if disc < 0:
            continue
        root = math.sqrt(disc)
        seg_len = math.sqrt(a)
        for s in sorted({(-b - root) / (2.0 * a), (-b + root) / (2.0 * a)}):
            if 0.0 <= s <= 1.0:
                out.append(
                    (
                        float(path.cum_length[i] + s * seg_len),
                        Point2(float(ax + s * dx), float(ay + s * dy)),
                    )
                )
    out.sort(key=lambda e: e[0])
    return out


def sth_subgoal(
    path: GlobalPath, robot: PointLike, cfg: GeneratorConfig, stamp: float = 0.0
) -> SubgoalResult:
    """
    Intersection of circle(robot, d_ahead) with the path that lies farthest
    along it, or a ReplanRequest when the circle misses the path.
    """
    robot = Point2.of(robot)
    if robot.dist(path.goal) <= cfg.d_ahead:
        return Subgoal(position=path.goal, source=GeneratorKind.STH_WP, stamp=stamp)
    phi = circle_intersections(path, robot, cfg.d_ahead)
    if not phi:
        return ReplanRequest(reason="no-intersection", stamp=stamp)
    return Subgoal(position=phi[-1][1], source=GeneratorKind.STH_WP, stamp=stamp)


def sth_watchdog(
    history: Sequence[Tuple[float, PointLike]],
    path: GlobalPath,
    cfg: GeneratorConfig,
) -> Optional[ReplanRequest]:
    """
    Replan when the robot moved less than motion_eps during the last t_lim
    seconds, or when it is farther than offcourse_dist from the path.

    Args:
        history: (time, position) pairs in time order.
    """
    if not history:
        return None
    now, here = history[-1]
    here = Point2.of(here)
    if path.project(here).distance > cfg.offcourse_dist:
        return ReplanRequest(reason="off-course", stamp=now)
    if now - history[0][0] < cfg.t_lim - 1e-9:
        return None
    then = history[0][1]
    for t, p in history:
        if t <= now - cfg.t_lim + 1e-9:
            then = p
        else:
            break
    if here.dist(then) < cfg.motion_eps:
        return ReplanRequest(reason="stalled", stamp=now)
    return None


# endregion
# region LM-WP


def _turns(kappa: np.ndarray, floor: float) -> List[Tuple[int, int]]:
    out: List[Tuple[int, int]] = []
    start = None
    for i, k in enumerate(kappa):
        if k > floor and start is None:
            start = i
        elif k <= floor and start is not None:
            out.append((start, i - 1))
            start = None
    if start is not None:
        out.append((start, len(kappa) - 1))
    return out


def select_landmarks(
    spline: UniformBSpline,
    goal: PointLike,
    cfg: GeneratorConfig,
    sample_dt: Optional[float] = None,
) -> LandmarkQueue:
    """Landmarks at the turning points of the spline, followed by the goal."""
    profile = steering_profile(spline, sample_dt)
    psi = profile.psi
    points: List[Point2] = []
    psis: List[float] = []
    last = 0.0
    for lo, hi in _turns(profile.curvature, cfg.kappa_floor):
        accumulated = float(psi[hi] - last)
        if accumulated > cfg.psi_thresh:
            k = lo + int(np.argmax(profile.omega[lo : hi + 1]))
            points.append(Point2.of(profile.positions[k]))
            psis.append(accumulated)
            last = float(psi[hi])
    points.append(Point2.of(goal))
    psis.append(float(psi[-1] - last))
    return LandmarkQueue(points=points, psi=psis)


def advance_landmark(
    queue: LandmarkQueue, robot: PointLike, reach_radius: float
) -> LandmarkQueue:
    """Pop reached landmarks from the front; the goal is never popped."""
    points = list(queue.points)
    psi = list(queue.psi)
    while len(points) > 1 and points[0].dist(robot) <= reach_radius:
        points.pop(0)
        if psi:
            psi.pop(0)
    if len(points) == len(queue.points):
        return queue
    return LandmarkQueue(points=points, psi=psi)


def _free_toward(
    grid: OccupancyGrid, robot: Point2, target: Point2, length: float
) -> Point2:
    d = robot.dist(target)
    if d < 1e-12:
        return robot
    ux, uy = (target.x - robot.x) / d, (target.y - robot.y) / d
    s = min(length, d)
    step = grid.resolution / 2.0
    while s > 0:
        p = Point2(robot.x + s * ux, robot.y + s * uy)
        if not grid.is_occupied(p):
            return p
        s -= step
    return robot


def lm_subgoal(
    robot: PointLike,
    landmark: PointLike,
    grid: OccupancyGrid,
    obstacles: Sequence[ObstacleLike],
    cfg: GeneratorConfig,
    opt_cfg: Optional[OptConfig] = None,
    stamp: float = 0.0,
) -> Subgoal:
    """
    Subgoal on a rebound-optimized local trajectory toward the landmark.

    The initial trajectory is a straight spline of length
    min(d_ahead, |landmark - robot|). When the optimizer fails, or the
    evaluated point is occupied, the subgoal falls back to the free point
    toward the landmark at half d_ahead and is flagged.
    """
    robot, landmark = Point2.of(robot), Point2.of(landmark)
    opt_cfg = opt_cfg or OptConfig()
    dist = robot.dist(landmark)
    if dist < 1e-9:
        return Subgoal(position=landmark, source=GeneratorKind.LM_WP, stamp=stamp)
    length = min(cfg.d_ahead, dist)
    target = Point2(
        robot.x + (landmark.x - robot.x) * length / dist,
        robot.y + (landmark.y - robot.y) * length / dist,
    )
    n = cfg.local_points
    dt = (length / (n - 3)) / cfg.local_speed
    zeta0 = line_spline(robot, target, n, dt, degree=3)
    result = rebound_optimize(zeta0, grid, obstacles, opt_cfg)
    if result.success:
        zeta = result.trajectory.spline
        if dist <= cfg.d_ahead:
            t = zeta.t_end
        else:
            t_eval = cfg.t_eval if cfg.t_eval is not None else cfg.t_eval_ratio * zeta.duration
            t = zeta.t_start + min(t_eval, zeta.duration)
        p = de_boor(zeta, t)
        if not grid.is_occupied(p):
            return Subgoal(position=p, source=GeneratorKind.LM_WP, stamp=stamp)
    p = _free_toward(grid, robot, landmark, cfg.d_ahead / 2.0)
    logger.debug(
        "LM-WP fallback subgoal",
        extra={"reason": result.message, "x": round(p.x, 3), "y": round(p.y, 3), "t": stamp},
    )
    return Subgoal(position=p, source=GeneratorKind.LM_WP, stamp=stamp, fallback=True)


# endregion
# region Generators


class SubgoalGenerator(ABC):
    """
    Per-run subgoal generator.

    Holds mutable state (waypoint index, landmark queue, watchdog history), so
    one instance serves exactly one episode.
    """

    kind: GeneratorKind

    def __init__(
        self,
        cfg: GeneratorConfig,
        grid: OccupancyGrid,
        opt_cfg: Optional[OptConfig] = None,
        logger: Logger = logger,
    ) -> None:
        self.cfg = cfg
        self.grid = grid
        self.opt_cfg = opt_cfg or OptConfig()
        self.logger = logger.getChild(self.__class__.__name__)
        self.path: Optional[GlobalPath] = None
        self.replans = 0

    def reset(self, path: GlobalPath, t: float = 0.0) -> None:
        """Adopt a new global path."""
        self.path = path
        self._on_reset(path, t)

    @abstractmethod
    def _on_reset(self, path: GlobalPath, t: float) -> None: ...

    @abstractmethod
    def subgoal(
        self, robot: PointLike, t: float, obstacles: Sequence[ObstacleLike] = ()
    ) -> SubgoalResult:
        """Current subgoal for the robot at time t, or a ReplanRequest."""
        ...


class SubWpGenerator(SubgoalGenerator):
    """Fixed-spacing waypoints; never asks for a replan."""

    kind = GeneratorKind.SUB_WP

    def _on_reset(self, path: GlobalPath, t: float) -> None:
        self.waypoints = subwp_waypoints(path, self.cfg.sub_wp_spacing, stamp=t)
        self.index = 0

    def subgoal(
        self, robot: PointLike, t: float, obstacles: Sequence[ObstacleLike] = ()
    ) -> SubgoalResult:
        while (
            self.index < len(self.waypoints) - 1
            and self.waypoints[self.index].position.dist(robot) <= self.cfg.reach_radius
        ):
            self.index += 1
        return self.waypoints[self.index]


class _WatchdogGenerator(SubgoalGenerator):
    """Shared watchdog history and plan_period caching."""

    def _on_reset(self, path: GlobalPath, t: float) -> None:
        self.history: Deque[Tuple[float, Point2]] = deque()
        self._cached: Optional[Subgoal] = None
        self._cached_key: object = None

    def _watch(self, robot: Point2, t: float) -> Optional[ReplanRequest]:
        self.history.append((t, robot))
        horizon = t - self.cfg.t_lim - 1.0
        while self.history and self.history[0][0] < horizon:
            self.history.popleft()
        request = sth_watchdog(list(self.history), self.path, self.cfg)
        if request is not None:
            self.history.clear()
            self._cached = None
        return request

    def _fresh(self, t: float, key: object = None) -> Optional[Subgoal]:
        c = self._cached
        if c is not None and key == self._cached_key and t - c.stamp < self.cfg.plan_period - 1e-9:
            return c
        return None

    def _store(self, sg: Subgoal, key: object = None) -> Subgoal:
        self._cached, self._cached_key = sg, key
        return sg


class SthWpGenerator(_WatchdogGenerator):
    """Spatial-time-horizon subgoals."""

    kind = GeneratorKind.STH_WP

    def subgoal(
        self, robot: PointLike, t: float, obstacles: Sequence[ObstacleLike] = ()
    ) -> SubgoalResult:
        robot = Point2.of(robot)
        request = self._watch(robot, t)
        if request is not None:
            return request
        cached = self._fresh(t)
        if cached is not None:
            return cached
        result = sth_subgoal(self.path, robot, self.cfg, stamp=t)
        if isinstance(result, ReplanRequest):
            self.history.clear()
            return result
        return self._store(result)


class LmWpGenerator(_WatchdogGenerator):
    """Landmark-based subgoals through the rebound optimizer."""

    kind = GeneratorKind.LM_WP

    def _on_reset(self, path: GlobalPath, t: float) -> None:
        super()._on_reset(path, t)
        self.spline = parameterize(path, self.cfg.nominal_speed)
        self.queue = select_landmarks(self.spline, path.goal, self.cfg)
        self.logger.debug(
            "Landmarks selected",
            extra={"landmarks": len(self.queue.interior), "t": t},
        )

    def subgoal(
        self, robot: PointLike, t: float, obstacles: Sequence[ObstacleLike] = ()
    ) -> SubgoalResult:
        robot = Point2.of(robot)
        request = self._watch(robot, t)
        if request is not None:
            return request
        self.queue = advance_landmark(self.queue, robot, self.cfg.reach_radius)
        landmark = self.queue.front
        cached = self._fresh(t, key=landmark)
        if cached is not None:
            return cached
        sensed = [
            o
            for o in obstacles
            if Point2.of(o.center).dist(robot) - o.radius <= self.cfg.sensor_range
        ]
        sg = lm_subgoal(
            robot, landmark, self.grid, sensed, self.cfg, self.opt_cfg, stamp=t
        )
        return self._store(sg, key=landmark)


_GENERATORS = {
    GeneratorKind.SUB_WP: SubWpGenerator,
    GeneratorKind.STH_WP: SthWpGenerator,
    GeneratorKind.LM_WP: LmWpGenerator,
}


def make_generator(
    kind: Union[str, GeneratorKind],
    cfg: GeneratorConfig,
    grid: OccupancyGrid,
    opt_cfg: Optional[OptConfig] = None,
) -> SubgoalGenerator:
    """Instantiate the generator class for kind."""
    return _GENERATORS[GeneratorKind(kind)](cfg, grid, opt_cfg)


# endregion

__all__ = [
    "LandmarkQueue",
    "LmWpGenerator",
    "ReplanRequest",
    "SthWpGenerator",
    "SubWpGenerator",
    "Subgoal",
    "SubgoalGenerator",
    "SubgoalResult",
    "advance_landmark",
    "circle_intersections",
    "lm_subgoal",
    "make_generator",
    "select_landmarks",
    "sth_subgoal",
    "sth_watchdog",
    "subwp_waypoints",
]
