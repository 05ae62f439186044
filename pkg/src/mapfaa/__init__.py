"""Rule-based multi-agent path finding with asynchronous actions."""

from __future__ import annotations

from .planner import PlannerConfig, Solution, lsrp_solve
from .timegraph import DurationModel, Graph, Instance, load_instance
from .validator import validate

__all__ = ["DurationModel", "Graph", "Instance", "PlannerConfig", "Solution",
           "load_instance", "lsrp_solve", "validate"]
__version__ = "0.1.0"
