"""Weighted l^1 Tikhonov regularization on weighted sequence spaces."""
from .besov import BesovParams, WaveletGrid, besov_rate_experiment, besov_seq_norm, haar_analyze, haar_synthesize
from .operators import ForwardOperator, verify_lipschitz
from .paramchoice import BracketError, DiscrepancyConfig, a_priori_alpha, discrepancy_alpha
from .rates import (
    RateExperimentConfig,
    RateReport,
    converse_probe,
    generate_solution,
    optimality_lower_bound,
    run_rate_experiment,
)
from .seqspace import WeightSystem, kt_norm, lp_norm, omega_norm, omega_weights
from .solver import ConvergenceError, TikhonovProblem, TikhonovSolution, solve, solve_diagonal, solve_fista
from .threshold import eta_estimator, gamma_estimator, hard_threshold, soft_threshold

__all__ = [
    "BesovParams", "BracketError", "ConvergenceError", "DiscrepancyConfig", "ForwardOperator",
    "RateExperimentConfig", "RateReport", "TikhonovProblem", "TikhonovSolution", "WaveletGrid", "WeightSystem",
    "a_priori_alpha", "besov_rate_experiment", "besov_seq_norm", "converse_probe", "discrepancy_alpha",
    "eta_estimator", "gamma_estimator", "generate_solution", "haar_analyze", "haar_synthesize", "hard_threshold",
    "kt_norm", "lp_norm", "omega_norm", "omega_weights", "optimality_lower_bound", "run_rate_experiment",
    "soft_threshold", "solve", "solve_diagonal", "solve_fista", "verify_lipschitz",
]
