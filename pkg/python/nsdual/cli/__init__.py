"""Scenario files, the runner and the ``nsdual`` command line."""

from .runner import RunOutcome, ScenarioReport, batch, run_scenario
from .scenario import Scenario, Task, load_scenario, parse_scenario
from .tables import emit_plot_data

__all__ = [
    "RunOutcome",
    "Scenario",
    "ScenarioReport",
    "Task",
    "batch",
    "emit_plot_data",
    "load_scenario",
    "parse_scenario",
    "run_scenario",
]
