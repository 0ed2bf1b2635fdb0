"""Sharp-null permutation calibration of the MSP statistic.

The bootstrap resample matrix is drawn once and held fixed, so MSP is a
deterministic function of the treatment assignment; under complete
randomization and the sharp null the observed and permuted statistics are
exchangeable and the add-one p-value is valid in finite samples.
"""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bootstrap import CIMethod, ResampleMatrix, draw_resamples, evaluate_grid
from .estimation import Bindings, Dataset, DataError, EstimationError
from .rng import substream, subseed
from .specspace import (INFEASIBLE, EvaluatedGrid, MSPResult, SpecSpace, compute_msp,
                        msp_from_feasible)

log = logging.getLogger(__name__)

OBSERVATIONAL_DISCLAIMER = (
    "Treatment was not declared randomized: exact calibration does not hold and the "
    "permutation distribution is only a diagnostic reference."
)


def permute_assignment(A, rng: np.random.Generator) -> np.ndarray:
    """Uniformly random rearrangement of A; the treated count is preserved."""
    A = np.asarray(A)
    if not np.isin(A, (0, 1)).all():
        raise DataError("assignment vector must be binary")
    return rng.permutation(A)


def permutation_pvalue(observed: float, permuted) -> float:
    """Add-one Monte Carlo p-value ``(1 + #{V_j >= V_0}) / (P + 1)``.

    MSP values are floats with INFEASIBLE = inf, so ``inf >= inf`` counts
    toward the tail as required.
    """
    permuted = np.asarray(list(permuted), dtype=float)
    if permuted.size == 0:
        raise ValueError("need at least one permuted statistic")
    return (1 + int(np.sum(permuted >= observed))) / (permuted.size + 1)


def _summary_median(values) -> float:
    return float(np.median(np.asarray(values, dtype=float)))


@dataclass(frozen=True)
class CalibrationReport:
    observed: float
    permuted: tuple  # MSP value per permutation; nan for failed replicates
    p_hat: float
    perm_median: float
    perm_mean_finite: float
    perm_infeasible_rate: float
    n_failed: int = 0
    observed_result: MSPResult | None = None
    scale_subgrids: dict = field(default_factory=dict)
    randomized: bool = True
    B: int = 0
    seed: int = 0

    @property
    def disclaimer(self) -> str | None:
        return None if self.randomized else OBSERVATIONAL_DISCLAIMER

    def table_row(self) -> dict:
        fmt = lambda v: "inf" if v == INFEASIBLE else v  # noqa: E731
        return {
            "observed_msp": fmt(self.observed),
            "perm_median": fmt(self.perm_median),
            "perm_mean_finite": self.perm_mean_finite,
            "perm_infeasible_rate": self.perm_infeasible_rate,
            "p_hat": self.p_hat,
            "P": len(self.permuted),
            "n_failed": self.n_failed,
        }


def _scale_axes(space: SpecSpace, bindings: Bindings) -> list:
    return [n for n in space.names if bindings.axes[n].field == "outcome_scale"]


def scale_subgrid_msps(grid: EvaluatedGrid, bindings: Bindings) -> dict:
    """MSP recomputed on each fixed-outcome-scale subgrid (axis dropped).

    Keys are ``"<axis>=<value>"``. The subgrid weight ignores the fixed axis,
    so each entry is the MSP of a K-1 axis space on the same CIs.
    """
    out = {}
    for name in _scale_axes(grid.space, bindings):
        k = grid.space.index(name)
        for bit in (0, 1):
            feas = [c[:k] + c[k + 1:] for c in grid.configs()
                    if c[k] == bit and grid[c].contains_zero]
            value = bindings.axes[name].on if bit else bindings.axes[name].off
            label = getattr(value, "value", value)
            out[f"{name}={label}"] = msp_from_feasible(feas)
    return out


def _msp_for_assignment(args):
    d, space, bindings, U, method, A = args
    try:
        grid = evaluate_grid(d.with_treatment(A), space, bindings, U, method, keep_draws=False)
    except EstimationError as exc:
        log.warning("permutation replicate failed: %s", exc)
        return np.nan
    return compute_msp(grid).value


def calibrate(d: Dataset, space: SpecSpace, bindings: Bindings, P: int = 200, B: int = 50,
              seed: int = 0, method: CIMethod = CIMethod(), randomized: bool = True,
              workers: int = 1, U: ResampleMatrix | None = None) -> CalibrationReport:
    """Observed MSP, its permutation distribution and the add-one p-value.

    The resample matrix is drawn once from ``seed`` (unless given) and reused
    for the observed grid and every permutation; permutation ``j`` uses the
    substream ``(seed, "perm", j)``. Replicates whose estimation fails are
    excluded and counted.
    """
    if P < 1:
        raise ValueError("need P >= 1 permutations")
    if U is None:
        U = draw_resamples(d.n, B, subseed(seed, "calibration-U"))
    grid = evaluate_grid(d, space, bindings, U, method, keep_draws=False)
    obs = compute_msp(grid)
    assignments = [permute_assignment(d.treatment, substream(seed, "perm", j)) for j in range(P)]
    tasks = [(d, space, bindings, U, method, A) for A in assignments]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            values = list(ex.map(_msp_for_assignment, tasks))
    else:
        values = [_msp_for_assignment(t) for t in tasks]
    values = np.asarray(values, dtype=float)
    good = values[~np.isnan(values)]
    if good.size == 0:
        raise EstimationError("every permutation replicate failed")
    finite = good[np.isfinite(good)]
    return CalibrationReport(
        observed=obs.value,
        permuted=tuple(values.tolist()),
        p_hat=permutation_pvalue(obs.value, good),
        perm_median=_summary_median(good),
        perm_mean_finite=float(finite.mean()) if finite.size else float("nan"),
        perm_infeasible_rate=float(np.mean(np.isinf(good))),
        n_failed=int(values.size - good.size),
        observed_result=obs,
        scale_subgrids=scale_subgrid_msps(grid, bindings),
        randomized=randomized,
        B=U.B,
        seed=seed,
    )
