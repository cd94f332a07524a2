# region Docstring
"""
core.models.run
Pydantic records produced by one simulation episode.
Overview:
- RunMetrics is the per-episode outcome; RunRecord adds the benchmark cell
    coordinates and is the unit persisted to sqlite and the results CSV.
- TraceHeader and TraceRecord are the lines of a JSON-lines trace export.
Contents:
- Models:
    - RunMetrics: time, path length, collision events, success and bookkeeping.
    - RunRecord: one results row; csv_row() renders it with fixed formatting.
    - TraceHeader: first trace line with the effective configuration.
    - TraceRecord: one simulation step.
Design notes:
- Floats in csv_row() use fixed precision so repeated runs produce
    byte-identical files.
"""

# endregion
# region Imports
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, Field

from core.constants import GeneratorKind

# endregion
# region RunMetrics


class RunMetrics(BaseModel):
    """
    Outcome of one episode.

    Attributes:
        time_s (float): Arrival time, or max_sim_time on timeout [s].
        path_m (float): Sum of step displacements [m].
        collisions (int): Counted collision events.
        success (bool): Arrived with fewer than three collision events.
        arrived (bool): Reached the goal radius.
        replans (int): Global replans after the initial plan.
        fallbacks (int): LM-WP fallback subgoals used.
    """

    time_s: float = Field(..., ge=0)
    path_m: float = Field(..., ge=0)
    collisions: int = Field(..., ge=0)
    success: bool
    arrived: bool
    replans: int = Field(default=0, ge=0)
    fallbacks: int = Field(default=0, ge=0)


# endregion
# region RunRecord


class RunRecord(BaseModel):
    """One persisted benchmark row."""

    map: str
    count: int
    v_obs: float
    generator: GeneratorKind
    run_idx: int
    seed: int
    time_s: Optional[float] = None
    path_m: Optional[float] = None
    collisions: Optional[int] = None
    success: Optional[bool] = None
    error: str = ""

    @classmethod
    def from_metrics(cls, metrics: RunMetrics, **cell: Any) -> "RunRecord":
        return cls(
            time_s=metrics.time_s,
            path_m=metrics.path_m,
            collisions=metrics.collisions,
            success=metrics.success,
            **cell,
        )

    @property
    def failed(self) -> bool:
        return bool(self.error)

    def csv_row(self) -> List[str]:
        def num(v: Optional[float]) -> str:
            return "" if v is None else f"{v:.3f}"

        return [
            self.map,
            str(self.count),
            f"{self.v_obs:g}",
            self.generator.value,
            str(self.run_idx),
            str(self.seed),
            num(self.time_s),
            num(self.path_m),
            "" if self.collisions is None else str(self.collisions),
            "" if self.success is None else str(int(self.success)),
            self.error,
        ]

    @classmethod
    def from_csv_row(cls, row: Dict[str, str]) -> "RunRecord":
        """Inverse of csv_row() for a csv.DictReader row."""

        def opt(key: str, cast):
            v = row.get(key, "")
            return None if v in ("", None) else cast(v)

        return cls(
            map=row["map"],
            count=int(row["count"]),
            v_obs=float(row["v_obs"]),
            generator=GeneratorKind(row["generator"]),
            run_idx=int(row["run_idx"]),
            seed=int(row["seed"]),
            time_s=opt("time_s", float),
            path_m=opt("path_m", float),
            collisions=opt("collisions", int),
            success=opt("success", lambda s: bool(int(s))),
            error=row.get("error", "") or "",
        )


# endregion
# region Trace


class TraceHeader(BaseModel):
    """First line of a trace file."""

    kind: Literal["header"] = "header"
    map: str
    generator: GeneratorKind
    seed: int
    start: Tuple[float, float]
    goal: Tuple[float, float]
    motion: str
    collision_rule: str
    config: Dict[str, Any] = Field(default_factory=dict)
    landmarks: List[Tuple[float, float]] = Field(default_factory=list)


class TraceRecord(BaseModel):
    """
    One simulation step.

    Attributes:
        t (float): Step time [s].
        x, y (float): Robot position [m].
        subgoal_x, subgoal_y (float): Active subgoal [m].
        obstacles (List[Tuple[float, float]]): Obstacle centers.
        collision (bool): A collision event was counted at this step.
        collision_with (List[int]): Obstacle ids of the counted events, -1 for walls.
        replan (str | None): Reason of a global replan at this step.
        fallback (bool): Active subgoal is an LM-WP fallback.
    """

    kind: Literal["step"] = "step"
    t: float
    x: float
    y: float
    subgoal_x: float
    subgoal_y: float
    obstacles: List[Tuple[float, float]] = Field(default_factory=list)
    collision: bool = False
    collision_with: List[int] = Field(default_factory=list)
    replan: Optional[str] = None
    fallback: bool = False


# endregion

__all__ = [
    "RunMetrics",
    "RunRecord",
    "TraceHeader",
    "TraceRecord",
]
