# region Docstring
"""
services.sim
Fixed-step episode simulation: moving obstacles, a subgoal generator and a
reactive potential-field controller on a disc robot.
Overview:
- run_episode() plans a global path, hands it to the generator and steps the
    world at SimConfig.dt until the robot is within goal_radius of the goal or
    max_sim_time elapses.
- Each step advances the obstacles, asks the generator for a subgoal (replanning
    on request), moves the robot with reactive_step() and counts collision events.
- EpisodeRunner wraps run_episode() in the service style of this package and
    streams status messages while it writes the optional JSON-lines trace.
Contents:
- Classes:
    - RobotState: position, velocity and disc radius.
    - EpisodeResult: metrics, trace header and step records.
    - EpisodeRunner: service that runs one scenario and exports its trace.
- Functions:
    - reactive_step(robot, subgoal, obstacles, grid, cfg) -> RobotState
    - run_episode(scenario, generator, gen_cfg, sim_cfg, opt_cfg) -> EpisodeResult
    - write_trace(result, path) -> Path
Design notes:
- Robot motion never enters a wall: a step that would bring the disc closer
    than its radius to an occupied cell is reduced to an axis-aligned slide or
    dropped.
- A collision event starts when the robot disc touches an obstacle disc (or a
    wall, reported as obstacle -1) and at least collision_cooldown seconds have
    passed since the previous event with that obstacle. A contact that starts
    sooner is counted once the cooldown runs out, if it still lasts.
"""

# endregion
# region Imports
import json
import math
from dataclasses import dataclass, field
from logging import Logger as T_Logger
from pathlib import Path
from typing import Dict, Generator, List, Optional, Sequence, Set, Union

from core.config import GeneratorConfig, OptConfig, SimConfig, effective_config
from core.constants import (
    MIN_SURFACE_DIST,
    SLOW_RADIUS,
    SUCCESS_MAX_COLLISIONS,
    GeneratorKind,
)
from core.errors import InvalidEpisodeError, UnreachableGoalError
from core.globalplan import GlobalPath, plan_global
from core.localopt import WALL_ID
from core.logger import get_logger
from core.models import RunMetrics, TraceHeader, TraceRecord
from core.scenario import Scenario
from core.waypoint import LmWpGenerator, ReplanRequest, Subgoal, make_generator
from core.world import DynamicObstacle, OccupancyGrid, Point2, step_obstacles

from .models import StreamingServiceResponse

logger = get_logger("sim")

COLLISION_RULE = (
    "event per obstacle when the discs start touching, "
    "at most one per obstacle per collision_cooldown; a contact still running "
    "when the cooldown ends counts then; walls count as obstacle -1"
)

# endregion
# region Robot


@dataclass(frozen=True)
class RobotState:
    """Disc robot with a commanded velocity."""

    position: Point2
    velocity: Point2 = Point2(0.0, 0.0)
    radius: float = 0.2


def _repulsion(
    p: Point2,
    heading: Optional[Point2],
    obstacles: Sequence[DynamicObstacle],
    radius: float,
    k_rep: float,
    influence: float,
) -> Point2:
    fx = fy = 0.0
    for ob in obstacles:
        dx, dy = p.x - ob.center.x, p.y - ob.center.y
        dist = math.hypot(dx, dy)
        surface = max(dist - ob.radius - radius, MIN_SURFACE_DIST)
        if surface >= influence:
            continue
        if dist < 1e-12:
            ux, uy = (-heading.x, -heading.y) if heading else (1.0, 0.0)
        else:
            ux, uy = dx / dist, dy / dist
        mag = k_rep * (1.0 / surface - 1.0 / influence)
        fx += mag * ux
        fy += mag * uy
        if heading is None:
            continue
        ahead = -(ux * heading.x + uy * heading.y)
        if ahead <= 0:
            continue
        # slide around head-on obstacles on the side the robot already is, left on a tie
        nx, ny = -heading.y, heading.x
        side = dx * nx + dy * ny
        sign = -1.0 if side < -1e-9 else 1.0
        fx += sign * mag * ahead * nx
        fy += sign * mag * ahead * ny
    return Point2(fx, fy)


def _wall_ok(grid: OccupancyGrid, old: Point2, new: Point2, radius: float) -> bool:
    before, after = grid.clearances([old, new], radius + grid.resolution)
    return after >= radius or after >= before


def reactive_step(
    robot: RobotState,
    subgoal: Point2,
    obstacles: Sequence[DynamicObstacle],
    grid: OccupancyGrid,
    cfg: SimConfig,
) -> RobotState:
    """
    Move the robot one time step toward subgoal.

    The command is an attraction toward the subgoal that saturates beyond
    SLOW_RADIUS plus a repulsion from every obstacle disc whose surface is
    within cfg.influence, with a tangential share for obstacles in front.
    The robot moves along the combined force at cfg.v_max, slowing linearly
    only inside SLOW_RADIUS of the subgoal.
    """
    p = robot.position
    gx, gy = subgoal.x - p.x, subgoal.y - p.y
    d = math.hypot(gx, gy)
    scale = max(d, SLOW_RADIUS)
    attract = Point2(gx / scale, gy / scale)
    heading = Point2(gx / d, gy / d) if d > 1e-9 else None
    rep = _repulsion(p, heading, obstacles, robot.radius, cfg.k_rep, cfg.influence)
    fx, fy = attract.x + rep.x, attract.y + rep.y
    norm = math.hypot(fx, fy)
    if norm < 1e-12:
        return RobotState(p, Point2(0.0, 0.0), robot.radius)
    speed = cfg.v_max * min(1.0, d / SLOW_RADIUS)
    sx, sy = speed * fx / norm * cfg.dt, speed * fy / norm * cfg.dt
    for cand in (
        Point2(p.x + sx, p.y + sy),
        Point2(p.x + sx, p.y),
        Point2(p.x, p.y + sy),
    ):
        if cand != p and _wall_ok(grid, p, cand, robot.radius):
            v = Point2((cand.x - p.x) / cfg.dt, (cand.y - p.y) / cfg.dt)
            return RobotState(cand, v, robot.radius)
    return RobotState(p, Point2(0.0, 0.0), robot.radius)


# endregion
# region Collisions


@dataclass
class CollisionCounter:
    """Turns per-step contacts into cooled-down collision events."""

    cooldown: float
    events: int = 0
    _counted: Set[int] = field(default_factory=set)
    _last: Dict[int, float] = field(default_factory=dict)

    def contacts(
        self,
        robot: RobotState,
        obstacles: Sequence[DynamicObstacle],
        grid: OccupancyGrid,
    ) -> Set[int]:
        p = robot.position
        hits = {
            ob.id
            for ob in obstacles
            if p.dist(ob.center) < ob.radius + robot.radius
        }
        if grid.clearance(p, robot.radius + grid.resolution) < robot.radius - 1e-9:
            hits.add(WALL_ID)
        return hits

    def update(self, t: float, hits: Set[int]) -> List[int]:
        """
        Record the contacts of step t; returns obstacle ids of new events.

        A contact that begins inside the cooldown is counted at the first step
        after the cooldown ends, provided it still lasts.
        """
        new: List[int] = []
        self._counted &= hits
        for oid in sorted(hits - self._counted):
            last = self._last.get(oid)
            if last is None or t - last >= self.cooldown - 1e-9:
                self._last[oid] = t
                self._counted.add(oid)
                new.append(oid)
        self.events += len(new)
        return new


# endregion
# region Episode


@dataclass
class EpisodeResult:
    """Outcome of run_episode()."""

    metrics: RunMetrics
    header: TraceHeader
    records: List[TraceRecord] = field(default_factory=list)
    path: Optional[GlobalPath] = None


def run_episode(
    scenario: Scenario,
    generator: Union[str, GeneratorKind],
    gen_cfg: Optional[GeneratorConfig] = None,
    sim_cfg: Optional[SimConfig] = None,
    opt_cfg: Optional[OptConfig] = None,
    log: T_Logger = logger,
) -> EpisodeResult:
    """
    Simulate one episode of scenario with the named generator.

    Args:
        scenario: Resolved map, endpoints and obstacles.
        generator: GeneratorKind or its string value.
        gen_cfg: Generator parameters; defaults when None.
        sim_cfg: Loop and controller parameters; defaults when None.
        opt_cfg: Local optimizer parameters for LM-WP; defaults when None.
        log: Logger for per-episode messages.

    Returns:
        EpisodeResult with the metrics and, when sim_cfg.record_trace is set,
        one TraceRecord per step.

    Raises:
        InvalidEpisodeError: If the goal cannot be reached from the start on
            the static map.
    """
    gen_cfg = gen_cfg or GeneratorConfig()
    sim_cfg = sim_cfg or SimConfig()
    opt_cfg = opt_cfg or OptConfig()
    kind = GeneratorKind(generator)
    grid, goal = scenario.grid, scenario.goal

    try:
        path = plan_global(grid, scenario.start, goal, sim_cfg.plan_clearance)
    except UnreachableGoalError as e:
        raise InvalidEpisodeError(
            f"unreachable goal {tuple(goal)} from {tuple(scenario.start)} "
            f"on map '{scenario.map_name}'"
        ) from e

    gen = make_generator(kind, gen_cfg, grid, opt_cfg)
    gen.reset(path, 0.0)
    header = TraceHeader(
        map=scenario.map_name,
        generator=kind,
        seed=scenario.seed,
        start=tuple(scenario.start),
        goal=tuple(goal),
        motion=scenario.motion.value,
        collision_rule=COLLISION_RULE,
        config=effective_config(generator=gen_cfg, sim=sim_cfg, opt=opt_cfg),
        landmarks=(
            [tuple(p) for p in gen.queue.points]
            if isinstance(gen, LmWpGenerator)
            else []
        ),
    )

    robot = RobotState(scenario.start, radius=sim_cfg.robot_radius)
    obstacles = list(scenario.obstacles)
    counter = CollisionCounter(sim_cfg.collision_cooldown)
    records: List[TraceRecord] = []
    steps = int(round(sim_cfg.max_sim_time / sim_cfg.dt))
    travelled = 0.0
    replans = fallbacks = 0
    arrived = False
    t = 0.0
    last: Optional[Subgoal] = None

    for k in range(1, steps + 1):
        t = k * sim_cfg.dt
        obstacles = step_obstacles(obstacles, sim_cfg.dt, grid)

        result = gen.subgoal(robot.position, t, obstacles)
        replan: Optional[str] = None
        if isinstance(result, ReplanRequest):
            replan = result.reason
            replans += 1
            try:
                path = plan_global(grid, robot.position, goal, sim_cfg.plan_clearance)
            except UnreachableGoalError:
                log.warning(
                    "Replan failed, keeping the previous path",
                    extra={"t": round(t, 3), "reason": replan},
                )
            gen.reset(path, t)
            result = gen.subgoal(robot.position, t, obstacles)
        if isinstance(result, ReplanRequest):
            sub = last or Subgoal(position=goal, source=kind, stamp=t)
        else:
            sub = result
        if sub.fallback and sub is not last:
            fallbacks += 1
        last = sub

        moved = reactive_step(robot, sub.position, obstacles, grid, sim_cfg)
        travelled += moved.position.dist(robot.position)
        robot = moved
        events = counter.update(t, counter.contacts(robot, obstacles, grid))

        if sim_cfg.record_trace:
            records.append(
                TraceRecord(
                    t=round(t, 6),
                    x=robot.position.x,
                    y=robot.position.y,
                    subgoal_x=sub.position.x,
                    subgoal_y=sub.position.y,
                    obstacles=[tuple(o.center) for o in obstacles],
                    collision=bool(events),
                    collision_with=events,
                    replan=replan,
                    fallback=sub.fallback,
                )
            )
        if robot.position.dist(goal) <= sim_cfg.goal_radius:
            arrived = True
            break

    metrics = RunMetrics(
        time_s=t if arrived else sim_cfg.max_sim_time,
        path_m=travelled,
        collisions=counter.events,
        success=arrived and counter.events < SUCCESS_MAX_COLLISIONS,
        arrived=arrived,
        replans=replans,
        fallbacks=fallbacks,
    )
    log.debug(
        "Episode finished",
        extra={
            "map": scenario.map_name,
            "generator": kind.value,
            "seed": scenario.seed,
            **metrics.model_dump(),
        },
    )
    return EpisodeResult(metrics=metrics, header=header, records=records, path=path)


def write_trace(result: EpisodeResult, path: Path) -> Path:
    """Write header and step records as JSON lines."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(result.header.model_dump_json() + "\n")
        for rec in result.records:
            fh.write(rec.model_dump_json() + "\n")
        fh.write(json.dumps({"kind": "metrics", **result.metrics.model_dump()}) + "\n")
    return path


# endregion
# region Episode Runner Service


class EpisodeRunner:
    """Runs single scenarios and streams progress messages."""

    __logger: T_Logger

    def __init__(
        self,
        gen_cfg: GeneratorConfig,
        sim_cfg: SimConfig,
        opt_cfg: OptConfig,
        logger: T_Logger = logger,
    ) -> None:
        self.gen_cfg = gen_cfg
        self.sim_cfg = sim_cfg
        self.opt_cfg = opt_cfg
        self.__logger = logger.getChild(self.__class__.__name__)
        self.result: Optional[EpisodeResult] = None

    def run(
        self,
        scenario: Scenario,
        generator: Union[str, GeneratorKind],
        trace_path: Optional[Path] = None,
    ) -> Generator[StreamingServiceResponse, None, None]:
        kind = GeneratorKind(generator)
        self.__logger.info(
            "Running %s on %s (seed %s, %s obstacles)",
            kind.value,
            scenario.map_name,
            scenario.seed,
            len(scenario.obstacles),
        )
        yield StreamingServiceResponse(
            status="info",
            message=f"{kind.value} on {scenario.map_name}, "
            f"{len(scenario.obstacles)} obstacles at {scenario.v_obs:g} m/s",
        )
        self.result = run_episode(
            scenario,
            kind,
            self.gen_cfg,
            self.sim_cfg,
            self.opt_cfg,
            log=self.__logger,
        )
        m = self.result.metrics
        if trace_path is not None:
            write_trace(self.result, trace_path)
            yield StreamingServiceResponse(
                status="info", message=f"Trace written to {trace_path}"
            )
        yield StreamingServiceResponse(
            status="success" if m.success else "warning",
            message=(
                f"arrived={m.arrived} time={m.time_s:.2f}s path={m.path_m:.2f}m "
                f"collisions={m.collisions} replans={m.replans}"
            ),
        )


# endregion

__all__ = [
    "COLLISION_RULE",
    "CollisionCounter",
    "EpisodeResult",
    "EpisodeRunner",
    "RobotState",
    "reactive_step",
    "run_episode",
    "write_trace",
]
