"""wpnav - waypoint generation for hierarchical 2D navigation, with a benchmark CLI."""

__version__ = "0.1.0"
