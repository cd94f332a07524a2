from .bench import (
    BenchmarkJob,
    BenchmarkService,
    aggregate,
    build_grid,
    execute_job,
    read_results_csv,
    read_results_db,
    render_report,
    write_report,
    write_results_csv,
)
from .models import BenchProgress, StreamingServiceResponse
from .sim import (
    COLLISION_RULE,
    CollisionCounter,
    EpisodeResult,
    EpisodeRunner,
    RobotState,
    reactive_step,
    run_episode,
    write_trace,
)

__all__ = [
    "BenchProgress",
    "BenchmarkJob",
    "BenchmarkService",
    "COLLISION_RULE",
    "CollisionCounter",
    "EpisodeResult",
    "EpisodeRunner",
    "RobotState",
    "StreamingServiceResponse",
    "aggregate",
    "build_grid",
    "execute_job",
    "reactive_step",
    "read_results_csv",
    "read_results_db",
    "render_report",
    "run_episode",
    "write_report",
    "write_results_csv",
    "write_trace",
]
