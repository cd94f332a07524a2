import os
import sys
from pathlib import Path

import pytest

# Add the src directories to the path for imports
root = Path(__file__).parents[3]
for src in (
    root / "lib" / "core" / "src",
    root / "lib" / "services" / "src",
    Path(__file__).parent.parent / "src",
):
    sys.path.insert(0, str(src))

from core.config.base import DATA_DIR  # noqa: E402


@pytest.fixture(autouse=True)
def short_episodes(monkeypatch):
    """Isolated WPNAV_* settings with short episodes."""
    for key in list(os.environ):
        if key.startswith("WPNAV_"):
            monkeypatch.delenv(key)
    monkeypatch.setenv("WPNAV_MAX_SIM_TIME", "3")
    monkeypatch.setenv("WPNAV_LOG_LEVEL", "WARNING")


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR
