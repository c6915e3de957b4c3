"""Benchmark problems (energy storage, beer brewery) and their baselines."""

from .brewery import (BreweryConfig, brewery_config_from_dict,
                      brewery_config_to_dict, brewery_deterministic_baseline,
                      brewery_matrices, brewery_mean_demands,
                      build_brewery_problem, make_plan_policy,
                      save_brewery_config)
from .distributions import (TruncatedNormalSpec, sample_truncated_normal,
                            truncated_mean)
from .energy import (EnergyConfig, build_energy_problem,
                     energy_config_from_dict, energy_config_to_dict,
                     energy_heuristic_policy, energy_no_storage_policy,
                     make_heuristic_policy, make_no_storage_policy,
                     save_energy_config)

__all__ = [
    "BreweryConfig",
    "EnergyConfig",
    "TruncatedNormalSpec",
    "brewery_config_from_dict",
    "brewery_config_to_dict",
    "brewery_deterministic_baseline",
    "brewery_matrices",
    "brewery_mean_demands",
    "build_brewery_problem",
    "build_energy_problem",
    "energy_config_from_dict",
    "energy_config_to_dict",
    "energy_heuristic_policy",
    "energy_no_storage_policy",
    "make_heuristic_policy",
    "make_no_storage_policy",
    "make_plan_policy",
    "sample_truncated_normal",
    "save_brewery_config",
    "save_energy_config",
    "truncated_mean",
]
