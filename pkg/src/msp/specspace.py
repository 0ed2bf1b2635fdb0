"""Specification spaces, evaluated grids and the MSP combinatorics on them.

A configuration is a tuple of 0/1 bits, one per axis; bit ``k`` set means
axis ``k`` is perturbed away from the baseline. Everything here works on
already-evaluated grids and never touches raw data.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from itertools import product
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

INFEASIBLE = math.inf
"""MSP value when no admissible configuration has a CI containing zero.

Using ``math.inf`` gives the required total order for free: it compares
above every finite count and equal to itself.
"""

MAX_ENUM_K = 30

Config = tuple  # tuple[int, ...] of 0/1 bits


class SpecError(ValueError):
    """Invalid specification space, configuration or grid."""


@dataclass(frozen=True)
class Axis:
    name: str
    baseline_label: str = "off"
    perturbed_label: str = "on"

    def __post_init__(self):
        if not self.name:
            raise SpecError("axis name must be non-empty")


@dataclass(frozen=True)
class SpecSpace:
    """Ordered binary axes plus an optional explicit admissible subset."""

    axes: tuple
    admissible: frozenset | None = None

    def __post_init__(self):
        axes = tuple(a if isinstance(a, Axis) else Axis(str(a)) for a in self.axes)
        object.__setattr__(self, "axes", axes)
        if not 1 <= len(axes) <= MAX_ENUM_K:
            raise SpecError(f"K must be in [1, {MAX_ENUM_K}], got {len(axes)}")
        names = [a.name for a in axes]
        if len(set(names)) != len(names):
            raise SpecError(f"duplicate axis names in {names}")
        if self.admissible is not None:
            adm = frozenset(tuple(int(b) for b in c) for c in self.admissible)
            for c in adm:
                self.check_config(c)
            if self.baseline not in adm:
                raise SpecError("baseline configuration must be admissible")
            object.__setattr__(self, "admissible", adm)

    @classmethod
    def from_names(cls, names: Iterable[str], admissible=None) -> "SpecSpace":
        return cls(tuple(Axis(n) for n in names), admissible)

    @property
    def K(self) -> int:
        return len(self.axes)

    @property
    def names(self) -> list[str]:
        return [a.name for a in self.axes]

    @property
    def baseline(self) -> Config:
        return (0,) * self.K

    def check_config(self, c) -> Config:
        c = tuple(int(b) for b in c)
        if len(c) != self.K or any(b not in (0, 1) for b in c):
            raise SpecError(f"config {c} is not a length-{self.K} bit vector")
        return c

    def configs(self) -> list[Config]:
        """Admissible configurations in lexicographic order."""
        if self.admissible is None:
            return list(product((0, 1), repeat=self.K))
        return sorted(self.admissible)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise SpecError(f"unknown axis {name!r}") from None

    def describe(self, c: Config) -> str:
        """Human-readable list of the flips in ``c``."""
        flips = [
            f"{a.name}: {a.baseline_label} -> {a.perturbed_label}"
            for a, b in zip(self.axes, c)
            if b
        ]
        return "; ".join(flips) if flips else "baseline"


@dataclass(frozen=True)
class GridRecord:
    estimate: float
    ci_lower: float
    ci_upper: float
    draws: np.ndarray | None = None
    n_failed: int = 0

    def __post_init__(self):
        if not self.ci_lower <= self.ci_upper:
            raise SpecError(f"ci_lower {self.ci_lower} > ci_upper {self.ci_upper}")

    @property
    def contains_zero(self) -> bool:
        return self.ci_lower <= 0.0 <= self.ci_upper


@dataclass(frozen=True)
class EvaluatedGrid:
    """One record per admissible configuration, keyed by config bits."""

    space: SpecSpace
    records: Mapping
    method: object = None  # CIMethod the intervals were built with, if known

    def __post_init__(self):
        recs = {self.space.check_config(c): r for c, r in self.records.items()}
        missing = set(self.space.configs()) - set(recs)
        if missing:
            raise SpecError(f"grid is missing {len(missing)} admissible configs, e.g. {min(missing)}")
        extra = set(recs) - set(self.space.configs())
        if extra:
            raise SpecError(f"grid has records for non-admissible configs, e.g. {min(extra)}")
        object.__setattr__(self, "records", recs)

    def __getitem__(self, c) -> GridRecord:
        return self.records[tuple(int(b) for b in c)]

    def configs(self) -> list[Config]:
        return self.space.configs()

    @property
    def has_draws(self) -> bool:
        return all(r.draws is not None for r in self.records.values())

    def estimates(self) -> np.ndarray:
        return np.array([self.records[c].estimate for c in self.configs()])


@dataclass(frozen=True)
class MSPResult:
    value: float  # int-valued, or INFEASIBLE
    witness: Config | None
    feasible_count: int | None  # None when the solver does not count the feasible set

    @property
    def is_finite(self) -> bool:
        return self.value != INFEASIBLE

    def __str__(self):
        v = "inf" if not self.is_finite else str(int(self.value))
        return f"MSP={v} witness={self.witness} feasible={self.feasible_count}"


def hamming_weight(c) -> int:
    return int(sum(int(b) for b in c))


def feasible_set(grid: EvaluatedGrid) -> set:
    """Configurations whose closed CI contains zero."""
    return {c for c, r in grid.records.items() if r.contains_zero}


def msp_from_feasible(feasible: Iterable[Config]) -> MSPResult:
    """MSP of an explicit feasible set; ties go to the lexicographically smallest config."""
    feasible = list(feasible)
    if not feasible:
        return MSPResult(INFEASIBLE, None, 0)
    witness = min(feasible, key=lambda c: (hamming_weight(c), tuple(c)))
    return MSPResult(hamming_weight(witness), tuple(witness), len(feasible))


def compute_msp(grid: EvaluatedGrid) -> MSPResult:
    return msp_from_feasible(feasible_set(grid))


@dataclass(frozen=True)
class AxisWeights:
    w: tuple

    def __post_init__(self):
        w = tuple(float(x) for x in self.w)
        if not w or any(not (x > 0 and math.isfinite(x)) for x in w):
            raise SpecError(f"axis weights must be finite and > 0, got {w}")
        object.__setattr__(self, "w", w)


def weighted_msp(grid: EvaluatedGrid, weights) -> tuple:
    """Minimum total axis weight over the feasible set.

    Returns ``(value, witness)``; value is INFEASIBLE with witness None when
    nothing is feasible. The sandwich ``w_min*MSP <= wMSP <= w_max*MSP`` is
    asserted on every call.
    """
    if not isinstance(weights, AxisWeights):
        weights = AxisWeights(tuple(weights))
    w = np.asarray(weights.w)
    if len(w) != grid.space.K:
        raise SpecError(f"need {grid.space.K} weights, got {len(w)}")
    feas = feasible_set(grid)
    if not feas:
        return INFEASIBLE, None
    cost = {c: float(np.dot(c, w)) for c in feas}
    witness = min(feas, key=lambda c: (cost[c], tuple(c)))
    value = cost[witness]
    msp = compute_msp(grid).value
    tol = 1e-12 * max(1.0, value)
    assert w.min() * msp - tol <= value <= w.max() * msp + tol, "weighted sandwich violated"
    return value, witness


@dataclass(frozen=True)
class RefinementReport:
    is_weight_preserving: bool
    is_feasibility_preserving: bool
    monotonicity_holds: bool
    coarse_msp: MSPResult
    refined_msp: MSPResult
    violations: tuple = ()


def canonical_embedding(coarse: SpecSpace, refined: SpecSpace, mapping: Mapping[str, str | None] | None = None) -> Callable:
    """Embedding that carries each coarse axis onto one refined axis.

    ``mapping`` sends coarse axis names to refined axis names (default: same
    name). Refined axes not hit by the mapping are set to 0, i.e. the extra
    options of the refined space are left at their baseline.
    """
    mapping = mapping or {n: n for n in coarse.names}
    targets = [refined.index(mapping[n]) for n in coarse.names]
    if len(set(targets)) != len(targets):
        raise SpecError("two coarse axes map onto the same refined axis")

    def iota(c: Config) -> Config:
        out = [0] * refined.K
        for bit, t in zip(c, targets):
            out[t] = int(bit)
        return tuple(out)

    return iota


def check_refinement(coarse: EvaluatedGrid, refined: EvaluatedGrid, iota: Callable,
                     coarse_feasible=None, refined_feasible=None) -> RefinementReport:
    """Check an embedding for feasibility preservation and refinement monotonicity.

    Feasible sets default to the zero-containment sets of the grids. An
    embedding that changes Hamming weight is reported as such rather than
    rejected silently.
    """
    F = set(coarse_feasible) if coarse_feasible is not None else feasible_set(coarse)
    Fr = set(refined_feasible) if refined_feasible is not None else feasible_set(refined)
    images = {c: tuple(iota(c)) for c in coarse.configs()}
    for img in images.values():
        refined.space.check_config(img)
    weight_ok = all(hamming_weight(c) == hamming_weight(img) for c, img in images.items())
    violations = tuple(c for c in sorted(F) if images[c] not in Fr)
    preserving = weight_ok and not violations
    m_coarse = msp_from_feasible(F)
    m_ref = msp_from_feasible(Fr)
    monotone = m_ref.value <= m_coarse.value
    if preserving:
        assert monotone, "refinement monotonicity violated on a feasibility-preserving refinement"
    return RefinementReport(weight_ok, preserving, monotone, m_coarse, m_ref, violations)


def percentile_interval(draws, alpha: float) -> tuple:
    """Linear-interpolation percentile interval of ``draws`` at level 1-alpha."""
    lo, hi = np.quantile(np.asarray(draws, dtype=float), [alpha / 2, 1 - alpha / 2])
    return float(lo), float(hi)


def msp_alpha_curve(grid: EvaluatedGrid, alphas: Sequence[float], interval=None) -> list:
    """Re-threshold stored draws at each alpha and recompute MSP.

    ``interval(record, alpha) -> (lo, hi)`` defaults to the percentile rule;
    bootstrap.rethreshold provides the other interval kinds. Returns a
    list of ``(alpha, msp_value, feasible_count)``.
    """
    if not grid.has_draws:
        raise SpecError("msp_alpha_curve needs a grid built with retained bootstrap draws")
    alphas = [float(a) for a in alphas]
    if any(not 0 < a < 1 for a in alphas) or alphas != sorted(alphas):
        raise SpecError("alphas must be ascending values in (0, 1)")
    if interval is None:
        interval = lambda rec, a: percentile_interval(rec.draws, a)  # noqa: E731
    out = []
    for a in alphas:
        feas = []
        for c, rec in grid.records.items():
            lo, hi = interval(rec, a)
            if lo <= 0.0 <= hi:
                feas.append(c)
        res = msp_from_feasible(feas)
        out.append((a, res.value, res.feasible_count))
    vals = [v for _, v, _ in out]
    counts = [n for _, _, n in out]
    assert all(x <= y for x, y in zip(vals, vals[1:])), "MSP-alpha curve not monotone"
    assert all(x >= y for x, y in zip(counts, counts[1:])), "feasible count not monotone"
    return out


# -- persistence -----------------------------------------------------------

def bits_str(c: Config) -> str:
    return "".join(str(int(b)) for b in c)


def parse_bits(s: str) -> Config:
    s = s.strip()
    if not s or any(ch not in "01" for ch in s):
        raise SpecError(f"bad config bits {s!r}")
    return tuple(int(ch) for ch in s)


def write_grid_csv(grid: EvaluatedGrid, path, draws_path=None) -> None:
    """Write the grid as CSV (config_bits, estimate, ci_lower, ci_upper).

    When ``draws_path`` is given the per-config draws go to a companion CSV
    with one column per configuration.
    """
    configs = grid.configs()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["config_bits", "estimate", "ci_lower", "ci_upper"])
        for c in configs:
            r = grid[c]
            w.writerow([bits_str(c), repr(r.estimate), repr(r.ci_lower), repr(r.ci_upper)])
    if draws_path is not None:
        if not grid.has_draws:
            raise SpecError("grid has no retained draws to write")
        cols = [np.asarray(grid[c].draws, dtype=float) for c in configs]
        B = max(len(col) for col in cols)
        with open(draws_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([bits_str(c) for c in configs])
            for b in range(B):
                w.writerow([repr(float(col[b])) if b < len(col) else "" for col in cols])


def read_grid_csv(path, space: SpecSpace | None = None, draws_path=None) -> EvaluatedGrid:
    """Inverse of :func:`write_grid_csv`.

    Without ``space`` the axes are named ``axis1..axisK`` and the admissible
    set is whatever configs appear in the file.
    """
    rows = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            c = parse_bits(row["config_bits"])
            rows[c] = (float(row["estimate"]), float(row["ci_lower"]), float(row["ci_upper"]))
    if not rows:
        raise SpecError(f"{path}: empty grid")
    if space is None:
        K = len(next(iter(rows)))
        full = len(rows) == 2 ** K
        space = SpecSpace.from_names([f"axis{k + 1}" for k in range(K)],
                                     None if full else frozenset(rows))
    draws = {}
    if draws_path is not None:
        with open(draws_path, newline="") as fh:
            reader = csv.reader(fh)
            header = [parse_bits(h) for h in next(reader)]
            cols = [[] for _ in header]
            for line in reader:
                for j, v in enumerate(line):
                    if v != "":
                        cols[j].append(float(v))
        draws = {c: np.array(col) for c, col in zip(header, cols)}
    records = {c: GridRecord(e, lo, hi, draws.get(c)) for c, (e, lo, hi) in rows.items()}
    return EvaluatedGrid(space, records)


def grid_from_intervals(space: SpecSpace, intervals: Mapping, estimates: Mapping | None = None) -> EvaluatedGrid:
    """Build a grid from ``{config: (lo, hi)}``; estimates default to midpoints."""
    recs = {}
    for c, (lo, hi) in intervals.items():
        est = estimates[c] if estimates is not None else 0.5 * (lo + hi)
        recs[tuple(c)] = GridRecord(float(est), float(lo), float(hi))
    return EvaluatedGrid(space, recs)
