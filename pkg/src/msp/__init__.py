"""Minimum Specification Perturbation (MSP).

MSP is the smallest number of binary analyst decisions that must be flipped,
relative to a baseline analysis, to reach a specification whose confidence
interval contains zero (infinite when no such specification exists).
"""
from .specspace import (
    INFEASIBLE,
    Axis,
    AxisWeights,
    EvaluatedGrid,
    GridRecord,
    MSPResult,
    SpecSpace,
    canonical_embedding,
    check_refinement,
    compute_msp,
    feasible_set,
    hamming_weight,
    msp_alpha_curve,
    weighted_msp,
)
from .estimation import (
    AnalysisChoice,
    AxisBinding,
    Bindings,
    Dataset,
    Estimator,
    Form,
    Scale,
    bind_config,
    estimate_effect,
    fit_propensity,
    trim_overlap,
)
from .bootstrap import CIKind, CIMethod, bootstrap_ci, draw_resamples, evaluate_grid
from .solver import (
    AdditiveSurface,
    auto_feasible,
    branch_and_bound,
    diagnostics,
    fit_additive,
    greedy_constant,
    greedy_variable,
    subset_sum_surface,
)
from . import solver

__version__ = "0.1.0"
