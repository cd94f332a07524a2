# region Docstring
"""
core.config.base

Environment detection and path resolution for the navigation workspace.

Overview:
- Detects the current application environment (ci, bench, dev) from an
    environment variable or path-based heuristics.
- Exposes module-level constants for the application root and the bundled
    data directory that holds example scenarios.

Contents:
- Classes:
    - AppEnv:
        Class methods for environment detection and root directory lookup.

- Module-level Constants:
    - APP_ROOT (Path): Directory searched for config.yaml, .env and outputs.
    - APP_ENV (Literal["ci", "bench", "dev"]): Detected environment.
    - DATA_DIR (Path): Bundled scenario files shipped with the core package.

Environment Detection Logic:
- Priority 1: WPNAV_ENV environment variable.
- Priority 2: CI environment variable set -> "ci".
- Priority 3: everything else -> "dev".

Design Notes:
- Detection runs at import time so every settings class sees the same root.
- WPNAV_ROOT overrides the working directory as application root, which lets
    benchmark workers started elsewhere pick up the same config.yaml.
"""

# endregion
# region Imports
import os
from pathlib import Path
from typing import Literal

# endregion
# region AppEnv Class


class AppEnv:
    """
    Application environment detection utility.

    Attributes:
        CI (Literal["ci"]): Continuous integration runs.
        BENCH (Literal["bench"]): Long benchmark sessions.
        DEV (Literal["dev"]): Local development.
    """

    CI: Literal["ci"] = "ci"
    BENCH: Literal["bench"] = "bench"
    DEV: Literal["dev"] = "dev"

    @classmethod
    def environment(cls) -> Literal["ci", "bench", "dev"]:
        """Determine the current application environment."""
        explicit = os.getenv("WPNAV_ENV")
        if explicit in {cls.CI, cls.BENCH, cls.DEV}:
            return explicit
        if os.getenv("CI"):
            return cls.CI
        return cls.DEV

    @classmethod
    def app_root(cls) -> Path:
        """Get the application root directory."""
        return Path(os.getenv("WPNAV_ROOT", Path.cwd())).resolve()


# endregion
# region Module-level Constants

APP_ROOT: Path = AppEnv.app_root()
"""[Path] Root directory of the application."""
APP_ENV: Literal["ci", "bench", "dev"] = AppEnv.environment()
"""[Literal] Environment type."""
DATA_DIR: Path = Path(__file__).resolve().parent.parent / "data"
"""[Path] Bundled scenario files."""
# endregion


__all__ = [
    "APP_ENV",
    "APP_ROOT",
    "DATA_DIR",
    "AppEnv",
]
