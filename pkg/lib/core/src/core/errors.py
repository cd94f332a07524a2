"""
core.errors
Exception hierarchy shared by the library, the services and the CLI.

The CLI maps ConfigurationError to exit code 1 and everything else to 2, so
anything a user can fix by editing a file or a flag derives from it.
"""


class NavError(Exception):
    """Base class for all navigation errors."""

    pass


class ConfigurationError(NavError):
    """Invalid user input: settings, scenario or map files."""

    pass


class MapFormatError(ConfigurationError):
    """A map file does not follow the text grid format."""

    pass


class ScenarioFormatError(ConfigurationError):
    """A scenario file is missing a field or holds an invalid value."""

    pass


class InvalidEpisodeError(ConfigurationError):
    """The episode cannot start, e.g. the goal is unreachable at t=0."""

    pass


class BSplineError(NavError, ValueError):
    """Invalid spline construction or evaluation."""

    pass


class UnreachableGoalError(NavError):
    """Grid search exhausted without reaching the goal."""

    pass


__all__ = [
    "BSplineError",
    "ConfigurationError",
    "InvalidEpisodeError",
    "MapFormatError",
    "NavError",
    "ScenarioFormatError",
    "UnreachableGoalError",
]
