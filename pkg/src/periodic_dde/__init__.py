"""Periodic delay systems x' = -A(t) x + lam B(t) F(x(t - tau(t))).

Existence thresholds and lambda-interval classification, a Green-kernel
fixed-point solver for positive periodic solutions, contraction-type
stability certificates and a method-of-steps simulator.
"""
from .periodic import PeriodicFn, QuadratureRule, average, integrate
from .model import DelaySystem, HypothesisError, Limit, Nonlinearity
from .existence import classify, compute_thresholds
from .operator import PeriodicTrajectory, apply_T, evaluate_T, solve_fixed_point
from .stability import certify, compute_alpha, estimate_lipschitz, shifted_system
from .simulator import HistoryFn, detect_periodic, measure_orbit, simulate, trajectories_merge
from .config import load_config, system_to_config
from .scenarios import delayed_exp_system, feedback_system
from . import io, scenarios

__all__ = [
    "PeriodicFn", "QuadratureRule", "average", "integrate",
    "DelaySystem", "HypothesisError", "Limit", "Nonlinearity",
    "classify", "compute_thresholds",
    "PeriodicTrajectory", "apply_T", "evaluate_T", "solve_fixed_point",
    "certify", "compute_alpha", "estimate_lipschitz", "shifted_system",
    "HistoryFn", "detect_periodic", "measure_orbit", "simulate", "trajectories_merge",
    "load_config", "system_to_config", "delayed_exp_system", "feedback_system",
    "io", "scenarios",
]
