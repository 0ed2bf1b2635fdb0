"""Shared bootstrap resamples and confidence intervals over a whole grid."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np
from scipy.stats import norm

from .estimation import Bindings, Dataset, EstimationError, bind_config, effect_batch
from .rng import substream
from .specspace import EvaluatedGrid, GridRecord, SpecError, SpecSpace

log = logging.getLogger(__name__)

QUANTILE_RULE = "linear interpolation between order statistics (numpy 'linear')"
FAILURE_FLAG_FRACTION = 0.10


@dataclass(frozen=True, eq=False)
class ResampleMatrix:
    """B x n bootstrap row indices, drawn once and reused everywhere."""

    indices: np.ndarray
    seed: int

    @property
    def B(self) -> int:
        return self.indices.shape[0]

    @property
    def n(self) -> int:
        return self.indices.shape[1]

    def counts(self) -> np.ndarray:
        """Multiplicity of every row in every resample, shape (B, n)."""
        B, n = self.indices.shape
        flat = (self.indices + n * np.arange(B)[:, None]).ravel()
        return np.bincount(flat, minlength=B * n).reshape(B, n).astype(float)


def draw_resamples(n: int, B: int, seed: int) -> ResampleMatrix:
    if n < 2:
        raise ValueError(f"need n >= 2 rows to resample, got {n}")
    if B < 10:
        raise ValueError(f"need B >= 10 resamples, got {B}")
    rng = substream(seed, "bootstrap")
    return ResampleMatrix(rng.integers(0, n, size=(B, n)), int(seed))


class CIKind(str, Enum):
    PERCENTILE = "PERCENTILE"
    BIAS_CORRECTED = "BIAS_CORRECTED"
    BOOT_WALD = "BOOT_WALD"


@dataclass(frozen=True)
class CIMethod:
    kind: CIKind = CIKind.PERCENTILE
    alpha: float = 0.05

    def __post_init__(self):
        object.__setattr__(self, "kind", CIKind(self.kind))
        if not 0 < self.alpha <= 0.5:
            raise SpecError(f"alpha must be in (0, 0.5], got {self.alpha}")

    def at(self, alpha: float) -> "CIMethod":
        return CIMethod(self.kind, alpha)


class Interval(NamedTuple):
    lower: float
    upper: float

    @property
    def degenerate(self) -> bool:
        return self.lower == self.upper


def bootstrap_ci(draws, point: float, method: CIMethod) -> Interval:
    """Percentile, bias-corrected (no acceleration) or bootstrap-Wald interval."""
    x = np.asarray(draws, dtype=float)
    if x.size < 10:
        raise ValueError(f"need at least 10 draws, got {x.size}")
    if not np.isfinite(x).all():
        raise ValueError("draws must be finite")
    a = method.alpha
    if np.all(x == x[0]):
        log.warning("all %d bootstrap draws identical; degenerate interval", x.size)
        return Interval(float(x[0]), float(x[0]))
    if method.kind is CIKind.PERCENTILE:
        lo, hi = np.quantile(x, [a / 2, 1 - a / 2])
    elif method.kind is CIKind.BIAS_CORRECTED:
        B = x.size
        frac = np.clip(np.mean(x < point), 0.5 / B, 1 - 0.5 / B)
        z0 = norm.ppf(frac)
        q = norm.cdf(2 * z0 + norm.ppf([a / 2, 1 - a / 2]))
        lo, hi = np.quantile(x, q)
    else:
        z = norm.ppf(1 - a / 2)
        sd = x.std(ddof=1)
        lo, hi = point - z * sd, point + z * sd
    return Interval(float(lo), float(hi))


def rethreshold(kind: CIKind):
    """Interval rule ``(record, alpha) -> (lo, hi)`` for msp_alpha_curve."""
    kind = CIKind(kind)

    def interval(rec: GridRecord, alpha: float):
        return bootstrap_ci(rec.draws, rec.estimate, CIMethod(kind, min(alpha, 0.5)))

    return interval


def evaluate_config(d: Dataset, choice, U: ResampleMatrix, method: CIMethod, counts=None,
                    keep_draws: bool = True) -> GridRecord:
    if U.n != d.n:
        raise SpecError(f"resample matrix is for n={U.n}, dataset has n={d.n}")
    W = np.vstack([np.ones(d.n), U.counts() if counts is None else counts])
    res = effect_batch(d, choice, W)
    if not res.ok[0]:
        raise EstimationError(f"full-sample estimate failed under {choice.label()}")
    draws = res.estimates[1:][res.ok[1:]]
    n_failed = U.B - draws.size
    if n_failed > FAILURE_FLAG_FRACTION * U.B:
        log.warning("%d of %d resamples failed under %s", n_failed, U.B, choice.label())
    if draws.size < 10:
        raise EstimationError(f"only {draws.size} resamples survived under {choice.label()}")
    point = float(res.estimates[0])
    ci = bootstrap_ci(draws, point, method)
    return GridRecord(point, ci.lower, ci.upper, draws if keep_draws else None, n_failed)


def evaluate_grid(d: Dataset, space: SpecSpace, bindings: Bindings, U: ResampleMatrix,
                  method: CIMethod = CIMethod(), keep_draws: bool = True) -> EvaluatedGrid:
    """Point estimate, B resampled estimates and CI for every admissible config.

    All configurations share the same resample matrix ``U``. A failed
    full-sample estimate is a grid-level error naming the configuration;
    failed resamples are dropped and counted per config.
    """
    bindings.check(space)
    counts = U.counts()
    records = {}
    for c in space.configs():
        choice = bind_config(space, bindings, c)
        try:
            records[c] = evaluate_config(d, choice, U, method, counts, keep_draws)
        except EstimationError as exc:
            raise EstimationError(f"config {''.join(map(str, c))}: {exc}") from exc
    return EvaluatedGrid(space, records, method)


def significant(lo: float, hi: float) -> bool:
    return not (lo <= 0.0 <= hi)
