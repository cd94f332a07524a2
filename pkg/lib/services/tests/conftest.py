import sys
from pathlib import Path

import numpy as np
import pytest

# Add the src directories to the path for imports
src_path = Path(__file__).parent.parent / "src"
core_src_path = Path(__file__).parents[2] / "core" / "src"
sys.path.insert(0, str(core_src_path))
sys.path.insert(0, str(src_path))

from core.config import BenchSettings, GeneratorConfig, OptConfig, SimConfig  # noqa: E402
from core.constants import MotionModel  # noqa: E402
from core.scenario import Scenario  # noqa: E402
from core.world import OccupancyGrid, Point2, bundled_endpoints, bundled_map  # noqa: E402


@pytest.fixture
def gen_cfg() -> GeneratorConfig:
    return GeneratorConfig()


@pytest.fixture
def opt_cfg() -> OptConfig:
    return OptConfig()


@pytest.fixture
def sim_cfg() -> SimConfig:
    return SimConfig()


@pytest.fixture
def open_grid() -> OccupancyGrid:
    """20 x 20 m obstacle-free grid centered on the origin, 0.1 m cells."""
    return OccupancyGrid(np.zeros((200, 200), dtype=bool), 0.1, Point2(-10.0, -10.0))


@pytest.fixture(scope="session")
def empty_scenario() -> Scenario:
    """Bundled empty map with its default endpoints and no obstacles."""
    start, goal = bundled_endpoints("empty")
    return Scenario(
        grid=bundled_map("empty"),
        start=start,
        goal=goal,
        obstacles=(),
        v_obs=0.0,
        seed=0,
        motion=MotionModel.LINEAR_BOUNCE,
    )


@pytest.fixture
def tiny_bench() -> BenchSettings:
    """One cell, one generator, two short runs."""
    return BenchSettings(
        maps=["empty"],
        obstacle_counts=[2],
        velocities=[0.3],
        generators=["sub-wp"],
        runs_per_cell=2,
        base_seed=4,
    )
