"""Synthetic data-generating processes and the four-axis simulation space."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import expit

from ..estimation import AnalysisChoice, AxisBinding, Bindings, Dataset
from ..rng import substream
from ..specspace import Axis, SpecSpace

COVARIATES = ("X1", "X2", "X3", "X4")
PROPENSITY_CLIP = (0.02, 0.98)


class Regime(str, Enum):
    ADDITIVE = "ADDITIVE"
    INTERACTION = "INTERACTION"
    FLIP_A = "FLIP_A"
    FLIP_B = "FLIP_B"


@dataclass(frozen=True)
class DGPSpec:
    """One synthetic design.

    ``tail_fraction`` and ``tail_bonus`` only act under FLIP_A: that share
    of treated units (rounded, at least one when positive) gets
    ``tail_bonus`` noise standard deviations added to its outcome.
    """

    regime: Regime = Regime.ADDITIVE
    n: int = 800
    tau: float = 0.0
    tail_fraction: float = 0.03
    tail_bonus: float = 15.0

    def __post_init__(self):
        object.__setattr__(self, "regime", Regime(self.regime))
        if self.n < 20:
            raise ValueError("simulated datasets need n >= 20")

    @classmethod
    def flip_a(cls, n: int = 800, tail_bonus: float = 15.0) -> "DGPSpec":
        return cls(Regime.FLIP_A, n, 0.0, 0.03, tail_bonus)

    @classmethod
    def flip_b(cls, n: int = 800) -> "DGPSpec":
        return cls(Regime.FLIP_B, n, 0.7)


def _linear_predictor_and_signal(regime: Regime, X: np.ndarray):
    x1, x2, x3, x4 = X.T
    if regime is Regime.ADDITIVE:
        eta = -0.2 + 0.8 * x1 + 0.8 * x2 + 1.1 * x3
        g = -1.2 * x1 - 1.0 * x2 - 0.6 * x3 + 0.2 * x4
    elif regime is Regime.INTERACTION:
        eta = -0.2 + 0.8 * x1 + 0.6 * x2 + 1.1 * x3 + 1.0 * x1 * x2
        g = -1.1 * x1 - 0.7 * x2 - 0.6 * x3 + 0.2 * x4 - 1.0 * x1 * x2 - 0.8 * x2**2
    elif regime is Regime.FLIP_A:
        eta = 0.05 * x1 + 0.05 * x2
        g = 0.1 * x1 + 0.1 * x2
    else:
        eta = -0.2 + 1.2 * x1 + 0.8 * x2 + 0.6 * x3
        g = -1.5 * x1 - 1.0 * x2 - 0.5 * x1 * x2
    return eta, g


def simulate_dataset(g: DGPSpec, seed: int) -> Dataset:
    """Draw ``X ~ N(0, I_4)``, ``A | X ~ Bernoulli(clip(expit(eta)))`` and
    ``Y = tau A + g(X) + eps`` with standard normal noise."""
    rng = substream(seed, "dgp")
    X = rng.standard_normal((g.n, 4))
    eta, signal = _linear_predictor_and_signal(g.regime, X)
    p = np.clip(expit(eta), *PROPENSITY_CLIP)
    A = (rng.random(g.n) < p).astype(np.int8)
    Y = g.tau * A + signal + rng.standard_normal(g.n)
    if g.regime is Regime.FLIP_A and g.tail_fraction > 0:
        treated = np.flatnonzero(A == 1)
        k = min(len(treated), max(1, int(round(g.tail_fraction * len(treated)))))
        if k:
            Y[rng.choice(treated, size=k, replace=False)] += g.tail_bonus
    return Dataset(X, COVARIATES, A, Y)


# The baseline keeps every confounder, fits the nonlinear design and trims;
# each axis swaps in one weaker choice.
SIM_AXES = (
    Axis("omit_x1", "adjust for X1", "omit X1"),
    Axis("omit_x2", "adjust for X2", "omit X2"),
    Axis("linear", "nonlinear design", "linear design"),
    Axis("no_trim", "trim to overlap", "no trimming"),
)


def simulation_space() -> tuple:
    """The 16-configuration space and its bindings."""
    base = AnalysisChoice(covariates=("X3", "X4"), functional_form="NONLINEAR", trimming=True)
    bindings = Bindings(base, {
        "omit_x1": AxisBinding("covariates", ("X1",), ()),
        "omit_x2": AxisBinding("covariates", ("X2",), ()),
        "linear": AxisBinding("functional_form", "NONLINEAR", "LINEAR"),
        "no_trim": AxisBinding("trimming", True, False),
    })
    return SpecSpace(SIM_AXES), bindings


def coarse_space() -> tuple:
    """Three-axis space without the trimming axis (trimming held on)."""
    space, bindings = simulation_space()
    axes = {k: v for k, v in bindings.axes.items() if k != "no_trim"}
    return SpecSpace(SIM_AXES[:3]), Bindings(bindings.base, axes)
