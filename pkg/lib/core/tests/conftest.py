import sys
from pathlib import Path

import numpy as np
import pytest

# Add the src directory to the path for imports
src_path = Path(__file__).parent.parent / "src"
sys.path.insert(0, str(src_path))

from core.config import GeneratorConfig, OptConfig  # noqa: E402
from core.globalplan import GlobalPath  # noqa: E402
from core.world import OccupancyGrid, Point2, bundled_map  # noqa: E402


def open_grid(size_m: float = 20.0, res: float = 0.1, origin=(-10.0, -10.0)) -> OccupancyGrid:
    """Obstacle-free grid; out-of-bounds space still counts as occupied."""
    n = int(round(size_m / res))
    return OccupancyGrid(np.zeros((n, n), dtype=bool), res, Point2(*origin), "open")


@pytest.fixture
def empty_grid() -> OccupancyGrid:
    """20 x 20 m obstacle-free grid centered on the origin, 0.1 m cells."""
    return open_grid()


@pytest.fixture(scope="session")
def office_map() -> OccupancyGrid:
    return bundled_map("office")


@pytest.fixture(scope="session")
def empty_map() -> OccupancyGrid:
    return bundled_map("empty")


@pytest.fixture
def gen_cfg() -> GeneratorConfig:
    return GeneratorConfig()


@pytest.fixture
def opt_cfg() -> OptConfig:
    return OptConfig()


@pytest.fixture
def straight_path() -> GlobalPath:
    """(0, 0) -> (10, 0) sampled every 0.1 m."""
    return GlobalPath.from_points([(0.1 * i, 0.0) for i in range(101)])


@pytest.fixture
def corner_path() -> GlobalPath:
    """(0, 0) -> (5, 0) -> (5, 5) sampled every 0.1 m."""
    leg1 = [(0.1 * i, 0.0) for i in range(51)]
    leg2 = [(5.0, 0.1 * i) for i in range(1, 51)]
    return GlobalPath.from_points(leg1 + leg2)
