"""
core.models.report
Aggregated benchmark statistics in the layout of the results table: one entry
per (map, obstacle count, velocity, generator) cell, then per-map and overall
averages per generator.
"""

from typing import Dict, List, Optional

from pydantic import BaseModel, Field

from core.constants import GeneratorKind


class CellStats(BaseModel):
    """
    Statistics of one cell.

    Attributes:
        runs (int): Completed runs; 0 marks a missing cell and leaves every
            statistic as None.
        failed (int): Runs that raised instead of completing.
        mean_time (float | None): Mean episode time [s].
        mean_path (float | None): Mean path length [m].
        total_collisions (int | None): Sum of collision events.
        success_rate (float | None): Percentage of successful runs.
    """

    map: str
    count: int
    v_obs: float
    generator: GeneratorKind
    runs: int = 0
    failed: int = 0
    mean_time: Optional[float] = None
    mean_path: Optional[float] = None
    total_collisions: Optional[int] = None
    success_rate: Optional[float] = Field(default=None, ge=0, le=100)

    @property
    def missing(self) -> bool:
        return self.runs == 0


class GeneratorSummary(BaseModel):
    """Mean over the populated cells of one generator."""

    cells: int = 0
    mean_time: Optional[float] = None
    mean_path: Optional[float] = None
    mean_collisions: Optional[float] = None
    success_rate: Optional[float] = Field(default=None, ge=0, le=100)


class AggregateReport(BaseModel):
    """Full benchmark report."""

    cells: List[CellStats] = Field(default_factory=list)
    per_map: Dict[str, Dict[GeneratorKind, GeneratorSummary]] = Field(
        default_factory=dict
    )
    overall: Dict[GeneratorKind, GeneratorSummary] = Field(default_factory=dict)
    collision_rule: str = ""
    motion: str = ""

    def cell(
        self, map: str, count: int, v_obs: float, generator: GeneratorKind
    ) -> Optional[CellStats]:
        for c in self.cells:
            if (
                c.map == map
                and c.count == count
                and abs(c.v_obs - v_obs) < 1e-9
                and c.generator == generator
            ):
                return c
        return None


class DirectionalCheck(BaseModel):
    """
    One comparative expectation evaluated on a report.

    Attributes:
        name (str): What is compared.
        passed (bool | None): None when the report lacks the cells it needs.
        detail (str): The compared values.
    """

    name: str
    passed: Optional[bool] = None
    detail: str = ""


__all__ = ["AggregateReport", "CellStats", "DirectionalCheck", "GeneratorSummary"]
