"""Inert particle under gravity pushed by reflected Brownian motion.

Simulation of the coupled system and statistical checks of its stationary
law, strong laws, fluctuation scales and first-passage laws.
"""

from .model import (
    GravParams,
    StepResult,
    SystemState,
    TimeSeries,
    new_state,
    simulate_path,
    step,
    zero_noise_path,
    zero_noise_solution,
)

__version__ = "0.1.0"

__all__ = [
    "GravParams",
    "StepResult",
    "SystemState",
    "TimeSeries",
    "new_state",
    "simulate_path",
    "step",
    "zero_noise_path",
    "zero_noise_solution",
]
