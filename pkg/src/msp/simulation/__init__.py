"""Synthetic experiments: DGPs, power and comparison tables, decision rules,
specification-curve joint test, FI/MSP flip regimes and the K=10 search study."""
from .dgp import COVARIATES, DGPSpec, Regime, coarse_space, simulate_dataset, simulation_space
from .experiments import (TAUS, ReplicateResult, SCAResult, additive_fit_study, auc,
                          decision_metrics, flip_experiment, flip_summary, grid_summary, msp_score,
                          refinement_check, roc_curve, run_comparison, run_grid_study,
                          run_power_study, run_sca_study, sca_joint_test, summarize)
from .k10 import SCENARIOS, K10Params, k10_experiment, sample_surface

__all__ = [
    "COVARIATES", "DGPSpec", "Regime", "coarse_space", "simulate_dataset", "simulation_space",
    "TAUS", "ReplicateResult", "SCAResult", "additive_fit_study", "auc", "decision_metrics",
    "flip_experiment", "flip_summary", "grid_summary", "msp_score", "refinement_check",
    "roc_curve", "run_comparison", "run_grid_study", "run_power_study", "run_sca_study",
    "sca_joint_test", "summarize", "SCENARIOS", "K10Params", "k10_experiment", "sample_surface",
]
