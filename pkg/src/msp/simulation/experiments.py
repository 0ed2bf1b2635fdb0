"""Monte Carlo experiment blocks over the four-axis simulation space.

Every replicate is keyed by ``(master seed, block, tau, replicate index)``
so any single replicate can be re-run in isolation, and results do not
depend on the worker count.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from ..bootstrap import CIMethod, draw_resamples, evaluate_grid
from ..calibration import permute_assignment
from ..estimation import Bindings, Dataset, bind_config, effect_batch
from ..fragility import NOT_REACHED, fi_adversarial
from ..rng import substream, subseed
from ..solver import fit_additive
from ..specspace import (INFEASIBLE, EvaluatedGrid, MSPResult, SpecSpace, canonical_embedding,
                         check_refinement, compute_msp)
from .dgp import DGPSpec, Regime, coarse_space, simulate_dataset, simulation_space

TAUS = (0.0, 0.3, 0.7, 1.5)
POSITIVE_TAUS = (0.7, 1.5)
INFEASIBLE_SCORE = -999.0


def _map(fn, tasks, workers: int):
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            return list(ex.map(fn, tasks))
    return [fn(t) for t in tasks]


def replicate_seed(seed: int, block: str, tau: float, r: int) -> int:
    return subseed(seed, block, f"{tau:g}", r)


# -- per-replicate grid summaries -------------------------------------------

@dataclass(frozen=True)
class ReplicateResult:
    block: str
    tau: float
    replicate: int
    msp: MSPResult
    baseline_estimate: float
    baseline_significant: bool
    share_null_compat: float
    share_sig_any: float
    share_sig_pos: float
    dispersion: float
    n_treated: int
    fi: float | None = None

    def row(self) -> dict:
        out = {k: v for k, v in asdict(self).items() if k != "msp"}
        out["msp"] = self.msp.value
        out["witness"] = "" if self.msp.witness is None else "".join(map(str, self.msp.witness))
        return out


def grid_summary(grid: EvaluatedGrid) -> dict:
    """Shares of null-compatible / significant configs and sd of the estimates.

    Dispersion is the population sd (ddof=0) over every configuration.
    """
    recs = [grid[c] for c in grid.configs()]
    null = np.array([r.contains_zero for r in recs])
    pos = np.array([r.ci_lower > 0 for r in recs])
    base = grid[grid.space.baseline]
    return {
        "baseline_estimate": base.estimate,
        "baseline_significant": not base.contains_zero,
        "share_null_compat": float(null.mean()),
        "share_sig_any": float((~null).mean()),
        "share_sig_pos": float(pos.mean()),
        "dispersion": float(np.std(grid.estimates())),
    }


def evaluate_replicate(d: Dataset, space: SpecSpace, bindings: Bindings, B: int, seed: int,
                       method: CIMethod = CIMethod()) -> tuple:
    U = draw_resamples(d.n, B, subseed(seed, "U"))
    grid = evaluate_grid(d, space, bindings, U, method, keep_draws=False)
    return grid, compute_msp(grid), grid_summary(grid)


def _grid_task(args) -> ReplicateResult:
    block, regime, tau, r, n, B, seed = args
    rs = replicate_seed(seed, block, tau, r)
    d = simulate_dataset(DGPSpec(regime, n, tau), rs)
    space, bindings = simulation_space()
    _, msp, summ = evaluate_replicate(d, space, bindings, B, rs)
    return ReplicateResult(block, tau, r, msp, n_treated=d.n_treated, **summ)


def summarize(replicates) -> list:
    """Per-tau summary rows.

    The median is taken over finite MSP values only (nan when none is
    finite); probabilities are plain replicate fractions.
    """
    rows = []
    for tau in sorted({r.tau for r in replicates}):
        reps = [r for r in replicates if r.tau == tau]
        v = np.array([r.msp.value for r in reps], dtype=float)
        finite = v[np.isfinite(v)]
        rows.append({
            "tau": tau,
            "R": len(reps),
            "p_msp_inf": float(np.mean(np.isinf(v))),
            "median_finite_msp": float(np.median(finite)) if finite.size else math.nan,
            "p_msp_le_1": float(np.mean(v <= 1)),
            "p_baseline_sig": float(np.mean([r.baseline_significant for r in reps])),
            "share_null_compat": float(np.mean([r.share_null_compat for r in reps])),
            "share_sig_any": float(np.mean([r.share_sig_any for r in reps])),
            "share_sig_pos": float(np.mean([r.share_sig_pos for r in reps])),
            "dispersion": float(np.mean([r.dispersion for r in reps])),
        })
    return rows


def run_grid_study(taus=TAUS, R: int = 120, n: int = 800, B: int = 100, seed: int = 0,
                   regime=Regime.ADDITIVE, block: str = "power", workers: int = 1) -> tuple:
    """Simulate R datasets per tau and evaluate the 16-config grid on each.

    Returns ``(replicates, summary_rows)``.
    """
    tasks = [(block, Regime(regime), float(t), r, n, B, seed) for t in taus for r in range(R)]
    reps = _map(_grid_task, tasks, workers)
    return reps, summarize(reps)


def run_power_study(taus=TAUS, R: int = 120, n: int = 800, B: int = 100, seed: int = 0,
                    workers: int = 1) -> tuple:
    return run_grid_study(taus, R, n, B, seed, Regime.ADDITIVE, "power", workers)


def run_comparison(taus=TAUS, R: int = 200, n: int = 800, B: int = 100, seed: int = 0,
                   workers: int = 1) -> tuple:
    """Same design as the power study on independent seeds, for the summary comparison."""
    return run_grid_study(taus, R, n, B, seed, Regime.ADDITIVE, "compare", workers)


# -- decision rules ----------------------------------------------------------

def msp_score(value: float) -> float:
    """Classifier score for MSP: larger means more robust; INFEASIBLE is most fragile."""
    return INFEASIBLE_SCORE if value == INFEASIBLE else float(value)


SCORES = {
    "msp": lambda r: msp_score(r.msp.value),
    "share_sig_pos": lambda r: r.share_sig_pos,
    "share_sig_any": lambda r: r.share_sig_any,
    "share_null_compat": lambda r: 1.0 - r.share_null_compat,
    "dispersion": lambda r: r.dispersion,
}

RULES = {
    "share_sig_any > 0.5": lambda r: r.share_sig_any > 0.5,
    "share_sig_pos > 0.2": lambda r: r.share_sig_pos > 0.2,
    "share_null_compat < 0.2": lambda r: r.share_null_compat < 0.2,
    "share_sig_any > 0.9": lambda r: r.share_sig_any > 0.9,
    "MSP >= 1 (finite)": lambda r: 1 <= r.msp.value < INFEASIBLE,
    "MSP >= 2 (finite)": lambda r: 2 <= r.msp.value < INFEASIBLE,
    "share_sig_pos > 0.5": lambda r: r.share_sig_pos > 0.5,
}


def roc_curve(scores, labels) -> tuple:
    """ROC points sweeping the threshold down through each unique score.

    A unit is called positive when ``score >= threshold``. Returns
    ``(fpr, tpr, thresholds)`` starting at (0, 0) with threshold +inf.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=bool)
    P, N = labels.sum(), (~labels).sum()
    if P == 0 or N == 0:
        raise ValueError("ROC needs both positive and negative labels")
    thresholds = np.concatenate([[np.inf], np.unique(scores)[::-1]])
    pred = scores[None, :] >= thresholds[:, None]
    tpr = (pred & labels).sum(1) / P
    fpr = (pred & ~labels).sum(1) / N
    return fpr, tpr, thresholds


def auc(fpr, tpr) -> float:
    """Trapezoidal area under the ROC points."""
    fpr, tpr = np.asarray(fpr, float), np.asarray(tpr, float)
    return float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2))


def decision_metrics(replicates, positive_taus=POSITIVE_TAUS, fpr_tau: float = 0.3) -> dict:
    """AUC per summary score, ROC points and rule false-positive rates at ``fpr_tau``."""
    labels = [r.tau in positive_taus for r in replicates]
    aucs, roc_rows = {}, []
    for name, score in SCORES.items():
        fpr, tpr, thr = roc_curve([score(r) for r in replicates], labels)
        aucs[name] = auc(fpr, tpr)
        roc_rows += [{"score": name, "threshold": float(t), "fpr": float(f), "tpr": float(p)}
                     for t, f, p in zip(thr, fpr, tpr)]
    at = [r for r in replicates if r.tau == fpr_tau]
    fpr_table = [{"rule": name, f"fpr_tau_{fpr_tau:g}": float(np.mean([rule(r) for r in at]))}
                 for name, rule in RULES.items()] if at else []
    return {"auc": aucs, "roc_points": roc_rows, "fpr_table": fpr_table}


# -- specification-curve joint test -----------------------------------------

@dataclass(frozen=True)
class SCAResult:
    observed_share_pos: float
    observed_median: float
    p_pos: float
    p_median: float
    P: int


def _two_sided(observed: float, permuted: np.ndarray) -> float:
    P = permuted.size
    hi = (1 + np.sum(permuted >= observed)) / (P + 1)
    lo = (1 + np.sum(permuted <= observed)) / (P + 1)
    return float(min(1.0, 2 * min(hi, lo)))


def config_estimates(d: Dataset, space: SpecSpace, bindings: Bindings, assignments) -> np.ndarray:
    """Point estimate of every configuration under each assignment row, shape (rows, configs)."""
    A = np.atleast_2d(assignments)
    ones = np.ones_like(A, dtype=float)
    cols = [effect_batch(d, bind_config(space, bindings, c), ones, treatment=A).estimates
            for c in space.configs()]
    return np.column_stack(cols)


def sca_joint_test(d: Dataset, space: SpecSpace, bindings: Bindings, P: int = 300,
                   seed: int = 0) -> SCAResult:
    """Permutation test of the whole specification curve on point estimates.

    Statistics: share of configurations with a positive estimate and the
    median estimate. Two-sided add-one p-value ``min(1, 2 min(p_hi, p_lo))``.
    Estimates within rounding of zero (relative 1e-10) count as zero so a
    constant outcome gives identical statistics under every permutation.
    """
    perms = [permute_assignment(d.treatment, substream(seed, "sca-perm", j)) for j in range(P)]
    est = config_estimates(d, space, bindings, np.vstack([d.treatment] + perms))
    tol = 1e-10 * max(1.0, float(np.max(np.abs(d.outcome))))
    est = np.where(np.abs(est) <= tol, 0.0, est)
    share = np.array([np.mean(row[np.isfinite(row)] > 0) for row in est])
    med = np.nanmedian(est, axis=1)
    return SCAResult(float(share[0]), float(med[0]), _two_sided(share[0], share[1:]),
                     _two_sided(med[0], med[1:]), P)


def _sca_task(args) -> dict:
    tau, r, n, B, P, seed = args
    rs = replicate_seed(seed, "sca", tau, r)
    d = simulate_dataset(DGPSpec(Regime.ADDITIVE, n, tau), rs)
    space, bindings = simulation_space()
    _, msp, _ = evaluate_replicate(d, space, bindings, B, rs)
    sca = sca_joint_test(d, space, bindings, P, subseed(rs, "sca"))
    return {"tau": tau, "replicate": r, "msp": msp.value, **asdict(sca)}


def run_sca_study(taus=TAUS, R: int = 80, n: int = 800, B: int = 100, P: int = 300,
                  seed: int = 0, alpha: float = 0.05, workers: int = 1) -> tuple:
    """MSP summary and SCA rejection rates per tau. Returns ``(rows, summary)``."""
    tasks = [(float(t), r, n, B, P, seed) for t in taus for r in range(R)]
    rows = _map(_sca_task, tasks, workers)
    summary = []
    for tau in sorted({r["tau"] for r in rows}):
        sel = [r for r in rows if r["tau"] == tau]
        v = np.array([r["msp"] for r in sel], dtype=float)
        finite = v[np.isfinite(v)]
        summary.append({
            "tau": tau,
            "R": len(sel),
            "p_msp_inf": float(np.mean(np.isinf(v))),
            "median_finite_msp": float(np.median(finite)) if finite.size else math.nan,
            "sca_pos_reject": float(np.mean([r["p_pos"] <= alpha for r in sel])),
            "sca_median_reject": float(np.mean([r["p_median"] <= alpha for r in sel])),
        })
    return rows, summary


# -- FI versus MSP flip regimes ---------------------------------------------

def _flip_task(args) -> ReplicateResult:
    regime, r, n, B_msp, B_fi, tail_bonus, seed = args
    spec = DGPSpec.flip_a(n, tail_bonus) if regime is Regime.FLIP_A else DGPSpec.flip_b(n)
    block = f"flip-{regime.value}"
    rs = replicate_seed(seed, block, spec.tau, r)
    d = simulate_dataset(spec, rs)
    space, bindings = simulation_space()
    _, msp, summ = evaluate_replicate(d, space, bindings, B_msp, rs)
    U_fi = draw_resamples(d.n, B_fi, subseed(rs, "U-fi"))
    fi = fi_adversarial(d, bind_config(space, bindings, space.baseline), U_fi)
    return ReplicateResult(block, spec.tau, r, msp, n_treated=d.n_treated, fi=fi.fi_value, **summ)


def flip_summary(reps) -> dict:
    """Flip-table summary; FI means and medians treat NOT_REACHED as above all counts."""
    fi = np.array([r.fi for r in reps], dtype=float)
    frac = np.array([r.fi / r.n_treated for r in reps], dtype=float)
    v = np.array([r.msp.value for r in reps], dtype=float)
    finite_fi = fi[np.isfinite(fi)]
    finite = v[np.isfinite(v)]
    return {
        "R": len(reps),
        "p_baseline_sig": float(np.mean([r.baseline_significant for r in reps])),
        "median_fi": float(np.median(fi)),
        "mean_fi_finite": float(finite_fi.mean()) if finite_fi.size else math.nan,
        "p_fi_le_3": float(np.mean(fi <= 3)),
        "p_fi_le_10": float(np.mean(fi <= 10)),
        "median_fi_fraction": float(np.median(frac)),
        "p_fi_not_reached": float(np.mean(fi == NOT_REACHED)),
        "p_msp_eq_1": float(np.mean(v == 1)),
        "p_msp_inf": float(np.mean(np.isinf(v))),
        "median_finite_msp": float(np.median(finite)) if finite.size else math.nan,
    }


def flip_experiment(R: int = 120, n: int = 800, B_msp: int = 100, B_fi: int = 100,
                    seed: int = 0, tail_bonus: float = 15.0, workers: int = 1,
                    regimes=(Regime.FLIP_A, Regime.FLIP_B)) -> dict:
    """Per-regime replicates and summary: ``{regime: (replicates, summary)}``.

    FI is the adversarial variant on the baseline analysis with its own
    resample matrix. ``tail_bonus=0`` removes the only signal in regime A.
    """
    out = {}
    for regime in map(Regime, regimes):
        tasks = [(regime, r, n, B_msp, B_fi, tail_bonus, seed) for r in range(R)]
        reps = _map(_flip_task, tasks, workers)
        out[regime.value] = (reps, flip_summary(reps))
    return out


# -- refinement and additive-fit checks -------------------------------------

def _refine_task(args) -> dict:
    r, n, B, tau, regime, seed = args
    rs = replicate_seed(seed, "refine", tau, r)
    d = simulate_dataset(DGPSpec(regime, n, tau), rs)
    U = draw_resamples(d.n, B, subseed(rs, "U"))
    fine_space, fine_b = simulation_space()
    coarse, coarse_b = coarse_space()
    g_fine = evaluate_grid(d, fine_space, fine_b, U, keep_draws=False)
    g_coarse = evaluate_grid(d, coarse, coarse_b, U, keep_draws=False)
    rep = check_refinement(g_coarse, g_fine, canonical_embedding(coarse, fine_space))
    return {"replicate": r, "coarse_msp": rep.coarse_msp.value, "refined_msp": rep.refined_msp.value,
            "feasibility_preserving": rep.is_feasibility_preserving,
            "monotone": rep.monotonicity_holds}


def refinement_check(R: int = 120, n: int = 800, B: int = 100, tau: float = 0.7,
                     regime=Regime.ADDITIVE, seed: int = 0, workers: int = 1) -> tuple:
    """Coarse three-axis grid (trimming fixed on) against the four-axis grid.

    The embedding appends a zero trimming bit, so it preserves weight.
    Returns ``(rows, summary)``.
    """
    rows = _map(_refine_task, [(r, n, B, tau, Regime(regime), seed) for r in range(R)], workers)
    c = np.array([r["coarse_msp"] for r in rows], dtype=float)
    f = np.array([r["refined_msp"] for r in rows], dtype=float)
    return rows, {
        "R": R,
        "all_monotone": bool(all(r["monotone"] for r in rows)),
        "mean_coarse_msp_finite": float(c[np.isfinite(c)].mean()) if np.isfinite(c).any() else math.nan,
        "mean_refined_msp_finite": float(f[np.isfinite(f)].mean()) if np.isfinite(f).any() else math.nan,
    }


def _fit_task(args) -> dict:
    regime, r, n, B, tau, seed = args
    rs = replicate_seed(seed, f"fit-{regime.value}", tau, r)
    d = simulate_dataset(DGPSpec(regime, n, tau), rs)
    space, bindings = simulation_space()
    grid, _, _ = evaluate_replicate(d, space, bindings, B, rs)
    _, r2, mae = fit_additive(grid)
    return {"regime": regime.value, "replicate": r, "r2": r2, "mae": mae}


def additive_fit_study(R: int = 120, n: int = 800, B: int = 100, tau: float = 0.7, seed: int = 0,
                       regimes=(Regime.ADDITIVE, Regime.INTERACTION), workers: int = 1) -> tuple:
    """Additive main-effects fit of the estimate surface under each DGP."""
    tasks = [(Regime(g), r, n, B, tau, seed) for g in regimes for r in range(R)]
    rows = _map(_fit_task, tasks, workers)
    summary = [{"regime": Regime(g).value,
                "mean_r2": float(np.mean([r["r2"] for r in rows if r["regime"] == Regime(g).value])),
                "mean_mae": float(np.mean([r["mae"] for r in rows if r["regime"] == Regime(g).value]))}
               for g in regimes]
    return rows, summary
