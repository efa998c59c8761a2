"""Hotspot search with GP-guided Monte Carlo tree search, for one or many robots."""
__version__ = "0.1.0"

from .field import (PACIFIC_REGION, GriddedField, Region, Sensor, SyntheticField,
                    field_stats, load_gridded_field, make_four_maxima_field, measure)
from .gp import GPModel, Hyperparameters, optimize_hyperparameters
from .kernels import BACKEND
from .planner import PlannerConfig, Pose, beta, plan_next
from .strategy import MissionConfig, MissionLog, StrategyKind, run_mission
from .multirobot import FleetConfig, PartitionMode, compute_partition, run_fleet
from .baseline import BoustrophedonPlan, bst_waypoints, run_bst_mission

__all__ = [
    "__version__", "BACKEND", "PACIFIC_REGION", "GriddedField", "Region", "Sensor",
    "SyntheticField", "field_stats", "load_gridded_field", "make_four_maxima_field", "measure",
    "GPModel", "Hyperparameters", "optimize_hyperparameters", "PlannerConfig", "Pose", "beta",
    "plan_next", "MissionConfig", "MissionLog", "StrategyKind", "run_mission", "FleetConfig",
    "PartitionMode", "compute_partition", "run_fleet", "BoustrophedonPlan", "bst_waypoints",
    "run_bst_mission",
]
