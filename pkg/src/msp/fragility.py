"""Continuous-outcome Fragility Index: zero treated outcomes until the CI contains zero.

This perturbs data under a fixed analysis, the mirror image of MSP, which
perturbs the analysis under fixed data. The resample matrix stays fixed
across zeroings so each trajectory is deterministic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .bootstrap import CIMethod, ResampleMatrix, bootstrap_ci
from .estimation import (AnalysisChoice, Dataset, Estimator, EstimationError, effect_batch,
                         fit_propensity)
from .rng import substream

NOT_REACHED = math.inf


class Ordering(str, Enum):
    ADVERSARIAL = "ADVERSARIAL"
    RANDOM_MEDIAN = "RANDOM_MEDIAN"


@dataclass(frozen=True)
class FragilityReport:
    fi_value: float  # count of zeroed outcomes, or NOT_REACHED
    ordering: Ordering
    zeroed_values: tuple
    fraction_perturbed: float
    n_treated: int
    counts: tuple = ()  # per-ordering counts for RANDOM_MEDIAN


def adversarial_order(d: Dataset) -> np.ndarray:
    """Treated rows by descending outcome; ties broken by row index."""
    treated = np.flatnonzero(d.treatment == 1)
    return treated[np.lexsort((treated, -d.outcome[treated]))]


class _CI:
    """CI of one fixed analysis as a function of the outcome vector.

    Propensities depend only on covariates, treatment and resample weights,
    so they are fitted once and reused across zeroings.
    """

    def __init__(self, d: Dataset, a: AnalysisChoice, U: ResampleMatrix, method: CIMethod):
        self.d, self.a, self.method = d, a, method
        self.W = np.vstack([np.ones(d.n), U.counts()])
        self.probs = None
        if a.trimming or a.estimator is Estimator.IPW:
            self.probs = fit_propensity(d, a.covariates, a.functional_form, self.W).probs

    def contains_zero(self, y) -> bool:
        res = effect_batch(self.d, self.a, self.W, outcome=y, propensities=self.probs)
        if not res.ok[0]:
            raise EstimationError(f"full-sample estimate failed under {self.a.label()}")
        draws = res.estimates[1:][res.ok[1:]]
        lo, hi = bootstrap_ci(draws, float(res.estimates[0]), self.method)
        return lo <= 0.0 <= hi


def zeroing_count(d: Dataset, a: AnalysisChoice, U: ResampleMatrix, method: CIMethod, order,
                  ci: _CI | None = None) -> float:
    """Number of outcomes zeroed, in ``order``, before the CI first contains zero."""
    ci = ci or _CI(d, a, U, method)
    y = d.outcome.copy()
    if ci.contains_zero(y):
        return 0
    for k, row in enumerate(order, start=1):
        y[row] = 0.0
        if ci.contains_zero(y):
            return k
    return NOT_REACHED


def fi_adversarial(d: Dataset, a: AnalysisChoice, U: ResampleMatrix,
                   method: CIMethod = CIMethod()) -> FragilityReport:
    order = adversarial_order(d)
    fi = zeroing_count(d, a, U, method, order)
    k = len(order) if fi == NOT_REACHED else int(fi)
    zeroed = tuple(float(d.outcome[r]) for r in order[:k])
    n1 = d.n_treated
    return FragilityReport(fi, Ordering.ADVERSARIAL, zeroed, fi / n1 if n1 else math.nan, n1)


def fi_random_median(d: Dataset, a: AnalysisChoice, U: ResampleMatrix,
                     method: CIMethod = CIMethod(), n_orders: int = 50, seed: int = 0,
                     orders=None) -> FragilityReport:
    """Median zeroing count over uniformly random treated-unit orderings.

    ``orders`` overrides the random draws (one index array per ordering).
    NOT_REACHED sorts above every finite count.
    """
    treated = np.flatnonzero(d.treatment == 1)
    if orders is None:
        orders = [substream(seed, "fi-order", j).permutation(treated) for j in range(n_orders)]
    ci = _CI(d, a, U, method)
    counts = [zeroing_count(d, a, U, method, o, ci) for o in orders]
    med = float(np.median(np.asarray(counts, dtype=float)))
    n1 = d.n_treated
    return FragilityReport(med, Ordering.RANDOM_MEDIAN, (), med / n1 if n1 else math.nan, n1,
                           tuple(counts))
