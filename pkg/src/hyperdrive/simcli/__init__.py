"""Scenario simulator and differential oracles."""
from .oracles import oracle_check
from .runner import Trajectory, run_scenario, write_outputs
from .scenario import Scenario, ScenarioError, ScenarioEvent, loads_config, loads_scenario, parse_scenario

__all__ = [
    "Scenario",
    "ScenarioError",
    "ScenarioEvent",
    "Trajectory",
    "loads_config",
    "loads_scenario",
    "oracle_check",
    "parse_scenario",
    "run_scenario",
    "write_outputs",
]
