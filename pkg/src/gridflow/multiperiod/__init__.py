from .dispatch import DispatchSchedule, build_multiperiod, solve_multiperiod
from .scenarios import (
    Profile,
    RenewableUnit,
    Scenario,
    ScenarioSet,
    TransitionMatrix,
    enumerate_paths,
    persistent_scenarios,
    sample_paths,
    sample_scenarios,
)
from .study import Study, load_study, parse_study

__all__ = [
    "DispatchSchedule",
    "Profile",
    "RenewableUnit",
    "Scenario",
    "ScenarioSet",
    "Study",
    "TransitionMatrix",
    "build_multiperiod",
    "enumerate_paths",
    "load_study",
    "parse_study",
    "persistent_scenarios",
    "sample_paths",
    "sample_scenarios",
    "solve_multiperiod",
]
