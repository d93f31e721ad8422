"""Ensemble Monte Carlo, renewal cycles and statistical estimators."""

from .config import EnsembleConfig
from .ensemble import EnsembleError, run_ensemble, run_path
from .experiments import (
    FluctuationReport,
    Histogram2D,
    StationaryReport,
    StrongLawReport,
    TailReport,
    cycle_extreme_tails,
    fluctuation_scaling,
    stationary_histogram,
    stationary_marginal_test,
    stationary_samples,
    strong_law_estimate,
)
from .hitting import HittingReport, hitting_time_oracle_test, hitting_times, oracle_hit_probability
from .renewal import (
    Rect,
    RenewalCycle,
    cycle_stationary_estimate,
    cycles_from_table,
    detect_renewals,
    pooled_cycles,
)
from .stats import EmpiricalDistribution, ks_distance, ols_slope

__all__ = [
    "EmpiricalDistribution",
    "EnsembleConfig",
    "EnsembleError",
    "FluctuationReport",
    "Histogram2D",
    "HittingReport",
    "Rect",
    "RenewalCycle",
    "StationaryReport",
    "StrongLawReport",
    "TailReport",
    "cycle_extreme_tails",
    "cycle_stationary_estimate",
    "cycles_from_table",
    "detect_renewals",
    "fluctuation_scaling",
    "hitting_time_oracle_test",
    "hitting_times",
    "ks_distance",
    "ols_slope",
    "oracle_hit_probability",
    "pooled_cycles",
    "run_ensemble",
    "run_path",
    "stationary_histogram",
    "stationary_marginal_test",
    "stationary_samples",
    "strong_law_estimate",
]
