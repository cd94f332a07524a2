# region Docstring
"""
core.constants
Shared enumerations and numeric constants for planning and simulation.
Overview:
- Names the three subgoal generators, the obstacle motion models and the
    bundled maps as str enums so they compare equal to their CLI spellings.
- Collects numeric guards that are not user-tunable.
Contents:
- Enumerations:
    - GeneratorKind: SUB_WP, STH_WP, LM_WP ("sub-wp", "sth-wp", "lm-wp").
    - MotionModel: LINEAR_BOUNCE, WAYPOINT_LOOP.
    - BundledMap: EMPTY, OFFICE.
- Constants:
    - LOGGER_NAME: Root logger name of the package.
    - EPS_SPEED: Speed below which the angular rate is defined as zero.
    - MOTION_EPS: Displacement under which the robot counts as stalled.
    - SLOW_RADIUS: Distance at which the reactive attraction starts to shrink.
    - REPULSION_RANGE / REPULSION_GAIN / MIN_SURFACE_DIST: reactive field terms.
    - RESULT_COLUMNS: Column order of the benchmark results file.
Design Notes:
- Enums inherit from both str and enum.Enum, so values round-trip through
    CSV, YAML and typer options unchanged.
"""

# endregion
# region Imports
import enum
from typing import List

# endregion
# region Constants -- Enums


class GeneratorKind(str, enum.Enum):
    """Subgoal generator behind the intermediate planner."""

    SUB_WP = "sub-wp"  # fixed arclength subsampling
    STH_WP = "sth-wp"  # spatial-time horizon
    LM_WP = "lm-wp"  # landmark based


class MotionModel(str, enum.Enum):
    """Dynamic obstacle motion pattern."""

    LINEAR_BOUNCE = "linear-bounce"
    WAYPOINT_LOOP = "waypoint-loop"


class BundledMap(str, enum.Enum):
    """Maps shipped with the library."""

    EMPTY = "empty"
    OFFICE = "office"


# endregion
# region Constants -- Numeric Guards

LOGGER_NAME: str = "wpnav"
"""str: Root logger name."""
EPS_SPEED: float = 1e-4
"""float: [m/s] Speed guard for the angular-rate division."""
MOTION_EPS: float = 0.05
"""float: [m] Net displacement over t_lim below which the robot is stalled."""
SLOW_RADIUS: float = 0.5
"""float: [m] Attraction magnitude is dist/SLOW_RADIUS inside this radius."""
REPULSION_RANGE: float = 2.0
"""float: [m] Obstacles farther than this (surface distance) do not repel."""
REPULSION_GAIN: float = 0.5
"""float: Gain k_rep of the reactive repulsion."""
MIN_SURFACE_DIST: float = 0.05
"""float: [m] Lower clamp of the surface distance in the repulsion term."""
SUCCESS_MAX_COLLISIONS: int = 3
"""int: Runs with fewer collisions than this that reach the goal succeed."""
RESULT_COLUMNS: List[str] = [
    "map",
    "count",
    "v_obs",
    "generator",
    "run_idx",
    "seed",
    "time_s",
    "path_m",
    "collisions",
    "success",
    "error",
]
"""List[str]: Column order of the benchmark results file."""
# endregion


__all__ = [
    "BundledMap",
    "EPS_SPEED",
    "GeneratorKind",
    "LOGGER_NAME",
    "MIN_SURFACE_DIST",
    "MOTION_EPS",
    "MotionModel",
    "REPULSION_GAIN",
    "REPULSION_RANGE",
    "RESULT_COLUMNS",
    "SLOW_RADIUS",
    "SUCCESS_MAX_COLLISIONS",
]
