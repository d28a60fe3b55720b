"""Stochastic model of uncoordinated plug-in vehicle charging demand."""

__version__ = "0.1.0"

from .analytic import (
    SessionModel,
    expected_demand_uniform_closed,
    expected_demand_unwrapped,
    fold_to_day,
)
from .distributions import (
    RandomStream,
    match_moments,
    new_exponential,
    new_gaussian,
    new_rician,
    new_truncated_gaussian,
    new_uniform,
    sample,
)
from .montecarlo import simulate, simulate_fleet
from .profile import DemandProfile, compare_profiles, daily_energy
from .scenario import ScenarioConfig, load_config, load_preset, outlet_lookup

__all__ = [
    "DemandProfile",
    "RandomStream",
    "ScenarioConfig",
    "SessionModel",
    "compare_profiles",
    "daily_energy",
    "expected_demand_uniform_closed",
    "expected_demand_unwrapped",
    "fold_to_day",
    "load_config",
    "load_preset",
    "match_moments",
    "new_exponential",
    "new_gaussian",
    "new_rician",
    "new_truncated_gaussian",
    "new_uniform",
    "outlet_lookup",
    "sample",
    "simulate",
    "simulate_fleet",
]
