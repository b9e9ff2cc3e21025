"""Discrete-event simulation of the key-value store with fault injection."""
from .engine import Simulation, Trace, run_scenario
from .scenario import Fault, OpSpec, Scenario, Workload, dump_scenario, parse_scenario

__all__ = [
    "Fault",
    "OpSpec",
    "Scenario",
    "Simulation",
    "Trace",
    "Workload",
    "dump_scenario",
    "parse_scenario",
    "run_scenario",
]
