"""
Core navigation package.

This package holds the planning stack shared by the simulator and the
benchmark: occupancy grids and moving obstacles, uniform b-splines, the
global grid planner, the three subgoal generators and the rebound local
optimizer, together with the pydantic settings, records and logging setup
they are configured and reported through.
"""
