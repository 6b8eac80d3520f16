"""Output-feedback control of integrator-chain plants with an integral-chain differentiator.

Numerical core (numkit), plant models, estimators, fuzzy/RBF approximators,
control laws and a fixed-step closed-loop simulator with a CLI on top.
"""
from .errors import (BudgetExceededError, ConfigError, DegenerateInputError, IntegrationDivergedError,
                     InvalidArgumentError, ObslabError, SingularSystemError)
from .estimators import EstimatorGains, DEFAULT_GAINS, freq_response, noise_channel_compare
from .control import BoundSet, ControlCommand, GainVector, DEFAULT_K
from .plant import PendulumParams, Reference, pendulum_dynamics
from .simkit import (ApproximatorConfig, ControllerConfig, EstimatorConfig, NoiseSource, Scenario,
                     SimTrace, run_closed_loop, stability_step_bound)
from .config import load_preset, load_scenario, parse_scenario, dump_scenario

__version__ = "0.1.0"

__all__ = [
    "ObslabError", "InvalidArgumentError", "SingularSystemError", "DegenerateInputError",
    "IntegrationDivergedError", "BudgetExceededError", "ConfigError",
    "EstimatorGains", "DEFAULT_GAINS", "freq_response", "noise_channel_compare",
    "BoundSet", "ControlCommand", "GainVector", "DEFAULT_K",
    "PendulumParams", "Reference", "pendulum_dynamics",
    "ApproximatorConfig", "ControllerConfig", "EstimatorConfig", "NoiseSource", "Scenario", "SimTrace",
    "run_closed_loop", "stability_step_bound",
    "load_preset", "load_scenario", "parse_scenario", "dump_scenario",
]
