"""Place-dependent iterated function systems on [0, 1]: the Diaconis-Friedman chain."""
from .config import ExperimentConfig
from .dfchain import (ConvergenceError, InvariantDensity, RegimeError, apply_Q, apply_Q_adjoint,
                      classify_regime, closed_form_density, drift_decay, expected_delta_one_step,
                      solve_harmonic)
from .grid import GridFunction, holder_seminorm
from .ifs import (LipschitzMap, PlaceDependentKernel, estimate_contraction_r, estimate_R_alpha,
                  check_minorization, verify_hypotheses)
from .mc import absorption_split, ks_distance, martingale_check, run_chains, simulate_trajectory
from .spectral import build_ulam, convergence_curve, estimate_spectrum, power_iteration, second_eigenvalue
from .weights import WeightFunction, parse_weight

__version__ = "0.1.0"

__all__ = [
    "ExperimentConfig", "ConvergenceError", "InvariantDensity", "RegimeError", "apply_Q",
    "apply_Q_adjoint", "classify_regime", "closed_form_density", "drift_decay",
    "expected_delta_one_step", "solve_harmonic", "GridFunction", "holder_seminorm", "LipschitzMap",
    "PlaceDependentKernel", "estimate_contraction_r", "estimate_R_alpha", "check_minorization",
    "verify_hypotheses", "absorption_split", "ks_distance", "martingale_check", "run_chains",
    "simulate_trajectory", "build_ulam", "convergence_curve", "estimate_spectrum",
    "power_iteration", "second_eigenvalue", "WeightFunction", "parse_weight",
]
