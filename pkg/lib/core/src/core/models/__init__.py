# region Docstring
"""
core.models
Single import point for the pydantic records exchanged between the simulator,
the benchmark harness and the CLI.

Contents:
- Run records (core.models.run):
        - RunMetrics, RunRecord, TraceHeader, TraceRecord
- Report models (core.models.report):
        - CellStats, GeneratorSummary, AggregateReport, DirectionalCheck
"""

# endregion
# region Imports
from .report import AggregateReport, CellStats, DirectionalCheck, GeneratorSummary
from .run import RunMetrics, RunRecord, TraceHeader, TraceRecord

# endregion

__all__ = [
    "AggregateReport",
    "CellStats",
    "DirectionalCheck",
    "GeneratorSummary",
    "RunMetrics",
    "RunRecord",
    "TraceHeader",
    "TraceRecord",
]
