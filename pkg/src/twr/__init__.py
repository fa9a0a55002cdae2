"""Performance analysis and optimization of interference-limited
three-phase two-way amplify-and-forward relaying."""

__version__ = "0.1.0"

from .scenario import (InterfererSpec, NodeId, Scenario, build_interference_profile,  # noqa: E402
                       load_scenario, scenario_from_dict, swap_roles)

__all__ = ["__version__", "InterfererSpec", "NodeId", "Scenario", "build_interference_profile",
           "load_scenario", "scenario_from_dict", "swap_roles"]
