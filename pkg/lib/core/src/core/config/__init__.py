# region Module Docstring
"""
core.config
Configuration for the waypoint generators, the local optimizer, the simulator
and the benchmark harness.
Overview:
- Every tunable lives on a FactoryBaseSettings subclass with a WPNAV_* env-var
    alias and a description, so a value can come from a CLI flag, the
    environment, a .env file or config.yaml without code changes.
- Numeric invariants are pydantic constraints; build_settings turns violations
    into ConfigurationError naming the field.
Contents:
- Imports:
    - FactoryBaseSettings, get_settings, build_settings (exported).
- Settings Classes:
    - GeneratorConfig:
        Look-ahead distance, stall time limit, steering threshold, local
        trajectory evaluation time, SUB-WP spacing, off-course distance and the
        refresh/consumption radii shared by the three subgoal generators.
    - OptConfig:
        Weights, safety distance and limits of the rebound optimizer.
    - SimConfig:
        Time step, time limit, goal radius, collision cooldown and the robot
        and reactive controller parameters.
    - BenchSettings:
        Benchmark grid axes, runs per cell, base seed and worker count.
    - AppSettings:
        Environment name and log level/file.
- Functions:
    - effective_config(...) -> dict: Fully resolved configuration for output
        headers.
Design Notes:
- Per-run configs are built with build_settings so overrides never leak across
    runs; AppSettings is read once through get_settings.
"""

# endregion
# region Imports

from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import Field, field_validator

from core.config.base import APP_ENV
from core.config.factory import FactoryBaseSettings
from core.config.factory import build_settings  # noqa: F401  This is used externally
from core.config.factory import get_settings  # noqa: F401  This is used externally
from core.constants import GeneratorKind

# endregion
# region GeneratorConfig Class


class GeneratorConfig(FactoryBaseSettings):
    """
    Subgoal generator parameters.

    Attributes:
        d_ahead (float): [m] Look-ahead radius (STH-WP) and local trajectory length (LM-WP).
        t_lim (float): [s] Stall window of the replanning watchdog.
        psi_thresh (float): [rad] Accumulated steering angle that makes a landmark.
        t_eval (float | None): [s] Evaluation time on the local trajectory; None means
            t_eval_ratio of the trajectory's domain length.
        t_eval_ratio (float): Fraction of the local domain used when t_eval is unset.
        sub_wp_spacing (float): [m] Arclength spacing of SUB-WP waypoints.
        offcourse_dist (float): [m] Distance from the path that triggers a replan.
        reach_radius (float): [m] Radius at which waypoints/landmarks count as reached.
        motion_eps (float): [m] Net displacement over t_lim below which the robot is stalled.
        plan_period (float): [s] Refresh period of STH-WP/LM-WP subgoals.
        sensor_range (float): [m] Dynamic obstacles farther than this are ignored by LM-WP.
        kappa_floor (float): [1/m] Curvature below which a profile sample is not part of a turn.
        nominal_speed (float): [m/s] Traversal speed of the global spline.
        local_speed (float): [m/s] Traversal speed of the local trajectory.
        local_points (int): Control points of the local trajectory.
    """

    d_ahead: float = Field(
        default=1.55, gt=0, alias="WPNAV_D_AHEAD", description="Look-ahead distance [m]."
    )
    t_lim: float = Field(
        default=4.0, gt=0, alias="WPNAV_T_LIM", description="Stall time limit [s]."
    )
    psi_thresh: float = Field(
        default=0.3,
        gt=0,
        alias="WPNAV_PSI_THRESH",
        description="Steering threshold for landmarks [rad].",
    )
    t_eval: Optional[float] = Field(
        default=None,
        gt=0,
        alias="WPNAV_T_EVAL",
        description="Evaluation time on the local trajectory [s].",
    )
    t_eval_ratio: float = Field(
        default=0.75,
        gt=0,
        le=1,
        alias="WPNAV_T_EVAL_RATIO",
        description="Fraction of the local domain used when t_eval is unset.",
    )
    sub_wp_spacing: float = Field(
        default=1.0,
        gt=0,
        alias="WPNAV_SPACING",
        description="SUB-WP arclength spacing [m].",
    )
    offcourse_dist: float = Field(
        default=1.0,
        gt=0,
        alias="WPNAV_OFFCOURSE_DIST",
        description="Off-course replan distance [m].",
    )
    reach_radius: float = Field(
        default=0.3,
        gt=0,
        alias="WPNAV_REACH_RADIUS",
        description="Waypoint/landmark reach radius [m].",
    )
    motion_eps: float = Field(
        default=0.05,
        gt=0,
        alias="WPNAV_MOTION_EPS",
        description="Stall displacement threshold [m].",
    )
    plan_period: float = Field(
        default=0.25,
        gt=0,
        alias="WPNAV_PLAN_PERIOD",
        description="Subgoal refresh period [s].",
    )
    sensor_range: float = Field(
        default=4.0,
        gt=0,
        alias="WPNAV_SENSOR_RANGE",
        description="Obstacle sensing range for LM-WP [m].",
    )
    kappa_floor: float = Field(
        default=0.05,
        gt=0,
        alias="WPNAV_KAPPA_FLOOR",
        description="Curvature floor for turn detection [1/m].",
    )
    nominal_speed: float = Field(
        default=1.0,
        gt=0,
        alias="WPNAV_NOMINAL_SPEED",
        description="Global spline traversal speed [m/s].",
    )
    local_speed: float = Field(
        default=0.5,
        gt=0,
        alias="WPNAV_LOCAL_SPEED",
        description="Local trajectory traversal speed [m/s].",
    )
    local_points: int = Field(
        default=14,
        ge=6,
        alias="WPNAV_LOCAL_POINTS",
        description="Control points of the local trajectory.",
    )


# endregion
# region OptConfig Class


class OptConfig(FactoryBaseSettings):
    """
    Rebound optimizer parameters.

    Attributes:
        w_smooth (float): Weight of the second-difference smoothness term.
        w_collision (float): Weight of the anchor penalty term.
        w_feasible (float): Weight of the velocity/acceleration limit term.
        safe_dist (float): [m] Required clearance from every obstacle.
        rebound_margin (float): [m] Clearance beyond safe_dist that rebound_optimize
            aims for, so accepted trajectories clear safe_dist.
        max_iters (int): Iteration budget.
        step_tol (float): Step norm below which a collision-free iterate is final.
        v_max (float): [m/s] Velocity limit.
        a_max (float): [m/s^2] Acceleration limit.
        escalation (float): Factor applied to w_collision after 10 colliding iterations.
    """

    w_smooth: float = Field(default=1.0, ge=0, alias="WPNAV_W_SMOOTH")
    w_collision: float = Field(default=10.0, ge=0, alias="WPNAV_W_COLLISION")
    w_feasible: float = Field(default=1.0, ge=0, alias="WPNAV_W_FEASIBLE")
    safe_dist: float = Field(
        default=0.3,
        gt=0,
        alias="WPNAV_SAFE_DIST",
        description="Required obstacle clearance [m].",
    )
    rebound_margin: float = Field(
        default=0.1,
        ge=0,
        alias="WPNAV_REBOUND_MARGIN",
        description="Extra clearance targeted by the rebound optimizer [m].",
    )
    max_iters: int = Field(default=100, ge=1, alias="WPNAV_MAX_ITERS")
    step_tol: float = Field(default=1e-4, gt=0, alias="WPNAV_STEP_TOL")
    v_max: float = Field(default=2.0, gt=0, alias="WPNAV_OPT_V_MAX")
    a_max: float = Field(default=3.0, gt=0, alias="WPNAV_OPT_A_MAX")
    escalation: float = Field(default=2.0, ge=1, alias="WPNAV_ESCALATION")


# endregion
# region SimConfig Class


class SimConfig(FactoryBaseSettings):
    """
    Simulation loop and reactive controller parameters.

    Attributes:
        dt (float): [s] Fixed time step.
        max_sim_time (float): [s] Episode time limit.
        goal_radius (float): [m] Arrival radius around the goal.
        collision_cooldown (float): [s] Minimum time between two events of one obstacle.
        robot_radius (float): [m] Robot disc radius.
        v_max (float): [m/s] Robot speed limit.
        k_rep (float): Repulsion gain of the reactive controller.
        influence (float): [m] Surface distance beyond which obstacles do not repel.
        plan_clearance (float): [m] Wall clearance of the global search; falls
            back to the plain grid when nothing fits.
        record_trace (bool): Keep per-step trace records.
    """

    dt: float = Field(default=0.05, gt=0, alias="WPNAV_DT")
    max_sim_time: float = Field(default=240.0, gt=0, alias="WPNAV_MAX_SIM_TIME")
    goal_radius: float = Field(default=0.3, gt=0, alias="WPNAV_GOAL_RADIUS")
    collision_cooldown: float = Field(
        default=2.0, ge=0, alias="WPNAV_COLLISION_COOLDOWN"
    )
    robot_radius: float = Field(default=0.2, gt=0, alias="WPNAV_ROBOT_RADIUS")
    v_max: float = Field(default=1.0, gt=0, alias="WPNAV_V_MAX")
    k_rep: float = Field(default=0.5, ge=0, alias="WPNAV_K_REP")
    influence: float = Field(default=2.0, gt=0, alias="WPNAV_INFLUENCE")
    plan_clearance: float = Field(
        default=0.5, ge=0, alias="WPNAV_PLAN_CLEARANCE"
    )
    record_trace: bool = Field(default=True, alias="WPNAV_RECORD_TRACE")


# endregion
# region BenchSettings Class


class BenchSettings(FactoryBaseSettings):
    """
    Benchmark grid.

    Attributes:
        maps (List[str]): Bundled map names or map file paths.
        obstacle_counts (List[int]): Obstacle populations.
        velocities (List[float]): [m/s] Obstacle speeds.
        runs_per_cell (int): Runs per (map, count, velocity, generator) cell.
        generators (List[GeneratorKind]): Generators under test.
        base_seed (int): Seed of run 0 of cell 0.
        motion (str): Obstacle motion model.
        jobs (int): Worker processes; 1 runs in-process.
    """

    maps: List[str] = Field(default=["empty", "office"], alias="WPNAV_MAPS")
    obstacle_counts: List[int] = Field(default=[5, 10, 20], alias="WPNAV_COUNTS")
    velocities: List[float] = Field(default=[0.1, 0.2, 0.3], alias="WPNAV_VELOCITIES")
    runs_per_cell: int = Field(default=30, ge=1, alias="WPNAV_RUNS")
    generators: List[GeneratorKind] = Field(
        default=[GeneratorKind.SUB_WP, GeneratorKind.STH_WP, GeneratorKind.LM_WP],
        alias="WPNAV_GENERATORS",
    )
    base_seed: int = Field(default=0, ge=0, alias="WPNAV_SEED")
    motion: str = Field(default="linear-bounce", alias="WPNAV_MOTION")
    jobs: int = Field(default=1, ge=1, alias="WPNAV_JOBS")

    @field_validator("maps", "obstacle_counts", "velocities", "generators")
    @classmethod
    def _non_empty(cls, v: List[Any]) -> List[Any]:
        if not v:
            raise ValueError("must not be empty")
        return v

    @field_validator("velocities")
    @classmethod
    def _positive_velocities(cls, v: List[float]) -> List[float]:
        if any(x <= 0 for x in v):
            raise ValueError("velocities must be > 0")
        return v


# endregion
# region AppSettings Class


class AppSettings(FactoryBaseSettings):
    """
    Global application settings.

    Attributes:
        app_env (str): Detected environment.
        log_level (str): Level of the wpnav loggers.
        log_file (Path | None): JSON-lines log file; None disables file logging.
    """

    app_env: str = Field(default=APP_ENV, alias="WPNAV_ENV")
    log_level: str = Field(default="INFO", alias="WPNAV_LOG_LEVEL")
    log_file: Optional[Path] = Field(default=None, alias="WPNAV_LOG_FILE")

    @field_validator("log_level")
    @classmethod
    def _upper(cls, v: str) -> str:
        return v.upper()


# endregion
# region Helpers


def effective_config(**sections: FactoryBaseSettings) -> Dict[str, Dict[str, Any]]:
    """Dump settings objects by section name with every default resolved."""
    return {
        name: settings.model_dump(mode="json", by_alias=False)
        for name, settings in sections.items()
    }


# endregion

__all__ = [
    "AppSettings",
    "BenchSettings",
    "GeneratorConfig",
    "OptConfig",
    "SimConfig",
    "build_settings",
    "effective_config",
    "get_settings",
]
