"""MSP on analytic search surfaces.

A surface gives the point estimate and CI half-width of every configuration
in closed form::

    tau(s) = tau0 + sum_k s_k delta_k + sum_{k<j} s_k s_j gamma_kj
    c(s)   = c0   + sum_k s_k delta_c_k

and a configuration is null-compatible when ``|tau(s)| <= c(s)``.

Solvers: constant-width greedy, variable-width greedy with its lower-bound
check, exhaustive enumeration and branch-and-bound. Surfaces whose numbers
are all ints/Fractions are solved in exact integer arithmetic.
"""
from __future__ import annotations

import math
import time
from builtins import enumerate as _enum
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from itertools import combinations
from numbers import Rational
from typing import Mapping, Sequence

import numpy as np

from .specspace import INFEASIBLE, EvaluatedGrid, MSPResult, SpecError

BAND_TOL = 1e-12
MAX_ENUM_K = 24


class PreconditionError(ValueError):
    """A solver was called outside the scope its exactness guarantee covers."""


class SurfaceError(ValueError):
    """Malformed surface, e.g. a negative CI half-width somewhere on the cube."""


def _num(x):
    if isinstance(x, (bool, np.bool_)):
        raise SurfaceError(f"not a number: {x!r}")
    if isinstance(x, Rational):
        return Fraction(x) if not isinstance(x, int) else x
    if isinstance(x, str):
        return Fraction(x.strip())
    return float(x)


@dataclass(frozen=True)
class AdditiveSurface:
    tau0: float
    c0: float
    delta: tuple
    delta_c: tuple = ()
    gamma: Mapping = field(default_factory=dict)

    def __post_init__(self):
        delta = tuple(_num(x) for x in self.delta)
        K = len(delta)
        if K == 0:
            raise SurfaceError("surface needs at least one axis")
        dc = tuple(_num(x) for x in self.delta_c) if self.delta_c else (0,) * K
        if len(dc) != K:
            raise SurfaceError(f"delta_c has {len(dc)} entries, expected {K}")
        gamma = {}
        for (k, j), v in dict(self.gamma).items():
            k, j = int(k), int(j)
            if k == j or not (0 <= k < K and 0 <= j < K):
                raise SurfaceError(f"bad interaction index ({k}, {j}) for K={K}")
            key = (min(k, j), max(k, j))
            gamma[key] = gamma.get(key, 0) + _num(v)
        c0 = _num(self.c0)
        if not c0 > 0:
            raise SurfaceError(f"c0 must be > 0, got {c0}")
        object.__setattr__(self, "tau0", _num(self.tau0))
        object.__setattr__(self, "c0", c0)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "delta_c", dc)
        object.__setattr__(self, "gamma", {k: v for k, v in gamma.items() if v != 0})

    @property
    def K(self) -> int:
        return len(self.delta)

    @property
    def exact(self) -> bool:
        vals = (self.tau0, self.c0) + self.delta + self.delta_c + tuple(self.gamma.values())
        return all(isinstance(v, (int, Fraction)) for v in vals)

    @property
    def constant_width(self) -> bool:
        return all(x == 0 for x in self.delta_c)

    def estimate(self, s) -> float:
        t = self.tau0 + sum(d for d, b in zip(self.delta, s) if b)
        return t + sum(g for (k, j), g in self.gamma.items() if s[k] and s[j])

    def width(self, s) -> float:
        return self.c0 + sum(d for d, b in zip(self.delta_c, s) if b)

    def is_null_compatible(self, s) -> bool:
        tol = 0 if self.exact else BAND_TOL
        return abs(self.estimate(s)) <= self.width(s) + tol

    def narrowest_config(self) -> tuple:
        return tuple(int(x < 0) for x in self.delta_c)

    def validate_widths(self) -> None:
        """Raise if c(s) < 0 anywhere; the narrowest config is exact for additive widths."""
        s = self.narrowest_config()
        if self.width(s) < 0:
            raise SurfaceError(f"negative CI half-width {float(self.width(s)):.6g} at config "
                               f"{''.join(map(str, s))}")

    def negated(self) -> "AdditiveSurface":
        return AdditiveSurface(-self.tau0, self.c0, tuple(-d for d in self.delta), self.delta_c,
                               {k: -v for k, v in self.gamma.items()})

    def normalized(self) -> "AdditiveSurface":
        """Orient the surface so the baseline estimate is non-negative."""
        return self.negated() if self.tau0 < 0 else self

    def additive_part(self) -> "AdditiveSurface":
        return AdditiveSurface(self.tau0, self.c0, self.delta, self.delta_c)


class Method(str, Enum):
    GREEDY_CONST = "GREEDY_CONST"
    GREEDY_VW = "GREEDY_VW"
    BNB = "BNB"
    ENUM = "ENUM"


@dataclass(frozen=True)
class SolveReport:
    msp: MSPResult
    method: Method
    greedy_feasible: bool | None = None
    nodes_explored: int = 0
    wall_time: float = 0.0


@dataclass(frozen=True)
class Diagnostics:
    rho: float
    width_cv: float
    additive_r2: float | None = None
    additive_mae: float | None = None


def _result(witness_axes, K, feasible_count=None) -> MSPResult:
    if witness_axes is None:
        return MSPResult(INFEASIBLE, None, 0 if feasible_count is None else feasible_count)
    s = tuple(int(k in set(witness_axes)) for k in range(K))
    return MSPResult(len(set(witness_axes)), s, feasible_count)


# -- numeric views -----------------------------------------------------------

def _arrays(s: AdditiveSurface):
    """(tau0, c0, delta, delta_c, gamma matrix, tol) as float or scaled-integer arrays."""
    K = s.K
    if s.exact:
        vals = [s.tau0, s.c0, *s.delta, *s.delta_c, *s.gamma.values()]
        den = 1
        for v in vals:
            den = math.lcm(den, Fraction(v).denominator)
        scale = lambda v: int(Fraction(v) * den)  # noqa: E731
        bound = sum(abs(scale(v)) for v in vals)
        dtype = np.int64 if bound < 2**62 else object
        tau0, c0 = scale(s.tau0), scale(s.c0)
        delta = np.array([scale(v) for v in s.delta], dtype=dtype)
        dc = np.array([scale(v) for v in s.delta_c], dtype=dtype)
        G = np.zeros((K, K), dtype=dtype)
        for (k, j), v in s.gamma.items():
            G[k, j] = G[j, k] = scale(v)
        return tau0, c0, delta, dc, G, 0
    G = np.zeros((K, K))
    for (k, j), v in s.gamma.items():
        G[k, j] = G[j, k] = float(v)
    return (float(s.tau0), float(s.c0), np.array(s.delta, float), np.array(s.delta_c, float), G,
            BAND_TOL)


def _cube_values(s: AdditiveSurface):
    """Estimates, widths and weights of all 2^K configs; axis k is bit k of the index."""
    tau0, c0, delta, dc, G, tol = _arrays(s)
    dtype = delta.dtype
    tau = np.array([tau0], dtype=dtype)
    wid = np.array([c0], dtype=dtype)
    weight = np.zeros(1, dtype=np.int64)
    for k in range(s.K):
        inter = np.zeros(1, dtype=dtype)
        if s.gamma:
            for j in range(k):
                inter = np.concatenate([inter, inter + G[j, k]])
        else:
            inter = np.zeros(len(tau), dtype=dtype)
        tau = np.concatenate([tau, tau + delta[k] + inter])
        wid = np.concatenate([wid, wid + dc[k]])
        weight = np.concatenate([weight, weight + 1])
    return tau, wid, weight, tol


def enumerate(s: AdditiveSurface) -> MSPResult:  # noqa: A001 - operation name
    """Exhaustive search over all 2^K configurations (K <= 24)."""
    if s.K > MAX_ENUM_K:
        raise PreconditionError(f"enumeration capped at K={MAX_ENUM_K}, got K={s.K}")
    tau, wid, weight, tol = _cube_values(s)
    feas = np.abs(tau) <= wid + tol
    count = int(feas.sum())
    if count == 0:
        return MSPResult(INFEASIBLE, None, 0)
    best = int(weight[feas].min())
    cand = np.flatnonzero(feas & (weight == best))
    # lexicographic order on (s_1, ..., s_K) == numeric order of bit-reversed index
    keys = np.zeros(len(cand), dtype=np.int64)
    for k in range(s.K):
        keys |= ((cand >> k) & 1) << (s.K - 1 - k)
    idx = int(cand[np.argmin(keys)])
    witness = tuple((idx >> k) & 1 for k in range(s.K))
    return MSPResult(best, witness, count)


# -- greedy ------------------------------------------------------------------

def greedy_constant(s: AdditiveSurface) -> MSPResult:
    """Constant-width greedy: largest opposing shifts first, O(K log K).

    Exact under an additive estimate map, constant half-width, a significant
    baseline and opposing steps no larger than twice the half-width.
    """
    if s.gamma:
        raise PreconditionError("greedy_constant: surface has interaction terms")
    if not s.constant_width:
        raise PreconditionError("greedy_constant: CI half-width varies (nonzero delta_c)")
    if not abs(s.tau0) > s.c0:
        raise PreconditionError("greedy_constant: baseline CI already contains zero (|tau0| <= c0)")
    n = s.normalized()
    opposing = [k for k in range(n.K) if n.delta[k] < 0]
    too_big = [k for k in opposing if -n.delta[k] > 2 * n.c0]
    if too_big:
        raise PreconditionError(f"greedy_constant: bounded-step condition fails on axes {too_big} "
                                f"(|delta| > 2*c0 = {float(2 * n.c0):g})")
    order = sorted(opposing, key=lambda k: (n.delta[k], k))
    gap = n.tau0 - n.c0
    tol = 0 if s.exact else BAND_TOL
    total = 0
    for m, k in _enum(order, start=1):
        total += -n.delta[k]
        if total >= gap - tol:
            return _result(order[:m], s.K)
    return _result(None, s.K)


def _vw_prepare(s: AdditiveSurface) -> AdditiveSurface:
    if s.gamma:
        raise PreconditionError("variable-width greedy: surface has interaction terms")
    n = s.normalized()
    if not n.tau0 > n.c0:
        raise PreconditionError("variable-width greedy: needs |tau0| > c0 (baseline significant)")
    try:
        n.validate_widths()
    except SurfaceError as exc:
        raise PreconditionError(f"variable-width greedy: {exc}") from None
    return n


def _effective_shifts(n: AdditiveSurface) -> list:
    return [n.delta_c[k] - n.delta[k] for k in range(n.K)]


def _greedy_prefix(n: AdditiveSurface, tol):
    """Sorted positive-e axes and the critical length m (None if unreachable)."""
    e = _effective_shifts(n)
    pos = sorted((k for k in range(n.K) if e[k] > 0), key=lambda k: (-e[k], k))
    gap = n.tau0 - n.c0
    total = 0
    for m, k in _enum(pos, start=1):
        total += e[k]
        if total >= gap - tol:
            return e, pos, m
    return e, pos, None


def _tied_prefixes(e, pos, m):
    """All prefixes of length m consistent with some tie-breaking of equal e."""
    boundary = e[pos[m - 1]]
    fixed = [k for k in pos if e[k] > boundary]
    tied = [k for k in pos if e[k] == boundary]
    for extra in combinations(tied, m - len(fixed)):
        yield fixed + list(extra)


def greedy_variable(s: AdditiveSurface) -> SolveReport:
    """Greedy on effective shifts e_k = delta_c_k - delta_k with a lower-bound check.

    When no tied greedy prefix passes ``tau(s_g) >= -c(s_g)`` the exact answer
    comes from branch-and-bound and ``greedy_feasible`` is False.
    """
    t0 = time.perf_counter()
    n = _vw_prepare(s)
    tol = 0 if s.exact else BAND_TOL
    e, pos, m = _greedy_prefix(n, tol)
    if m is None:
        return SolveReport(_result(None, s.K), Method.GREEDY_VW, True, 0, time.perf_counter() - t0)
    for prefix in _tied_prefixes(e, pos, m):
        cfg = tuple(int(k in prefix) for k in range(n.K))
        if n.estimate(cfg) >= -n.width(cfg) - tol:
            return SolveReport(_result(prefix, s.K), Method.GREEDY_VW, True, 0,
                               time.perf_counter() - t0)
    bnb = branch_and_bound(s)
    return SolveReport(bnb.msp, Method.GREEDY_VW, False, bnb.nodes_explored,
                       time.perf_counter() - t0)


def auto_feasible(s: AdditiveSurface) -> bool:
    """Structural condition under which the greedy prefix needs no lower-bound check."""
    n = _vw_prepare(s)
    e = _effective_shifts(n)
    plus = [k for k in range(n.K) if e[k] > 0]
    return all(n.delta_c[k] >= 0 for k in plus) and all(e[k] <= 2 * n.c0 for k in plus)


def greedy_prefix_scan(s: AdditiveSurface) -> MSPResult:
    """Heuristic for surfaces with interactions: walk the additive greedy order.

    Axes are ranked by effective shift of the additive part; prefixes of
    growing length are evaluated on the full surface and the first
    null-compatible one is returned. Always an upper bound on the exact MSP.
    """
    n = s.normalized()
    if n.is_null_compatible((0,) * n.K):
        return _result([], s.K)
    e = _effective_shifts(n)
    pos = sorted((k for k in range(n.K) if e[k] > 0), key=lambda k: (-e[k], k))
    for m in range(1, len(pos) + 1):
        cfg = tuple(int(k in pos[:m]) for k in range(n.K))
        if n.is_null_compatible(cfg):
            return _result(pos[:m], s.K)
    return _result(None, s.K)


# -- branch and bound --------------------------------------------------------

def branch_and_bound(s: AdditiveSurface, use_additive_pruning: bool = False) -> SolveReport:
    """Exact depth-first branch-and-bound over axis inclusion.

    Axes are tried in descending effective shift, include-branch first, and
    the incumbent is the lightest null-compatible configuration found so far.
    A node is pruned when even the best-case remaining contribution to the
    upper null-band inequality cannot close the gap within the incumbent's
    weight. The default bound accounts for interactions and is admissible on
    every surface; ``use_additive_pruning`` swaps in the interaction-free
    bound, which is only exact when interactions never beat the additive
    prediction.
    """
    t0 = time.perf_counter()
    n = s.normalized()
    K = n.K
    tau0, c0, delta, dc, G, tol = _arrays(n)
    e = dc - delta
    order = sorted(range(K), key=lambda k: (-e[k], k))
    gap = tau0 - c0
    exact = n.exact
    zero = 0 if exact else 0.0
    neg = np.where(G < 0, -G, zero) if not use_additive_pruning else None
    # suffix[i, j] = sum of max(0, -gamma_jl) over l at order positions >= i
    if neg is not None:
        suffix = np.zeros((K + 1, K), dtype=G.dtype)
        for i in range(K - 1, -1, -1):
            suffix[i] = suffix[i + 1] + neg[:, order[i]]

    best_w = [K + 1]
    best_set: list = [None]
    nodes = [0]

    def feasible(tau, wid):
        return abs(tau) <= wid + tol

    def search(i, chosen, tau, wid, upper, inter):
        # upper = sum of e over chosen minus pairwise gammas = c(s) - tau(s) + gap
        nodes[0] += 1
        w = len(chosen)
        if feasible(tau, wid):
            if w < best_w[0]:
                best_w[0], best_set[0] = w, list(chosen)
            return
        if w + 1 >= best_w[0] or i >= K:
            return
        rem = order[i:]
        need = gap - upper
        if use_additive_pruning:
            u = e[rem]
        else:
            u = e[rem] - inter[rem] + suffix[i, rem]
        u = u[u > 0]
        if need > tol:
            if len(u) == 0:
                return
            u = np.sort(u)[::-1]
            cum = np.cumsum(u)
            hit = np.flatnonzero(cum >= need - tol)
            if len(hit) == 0:
                return
            t = int(hit[0]) + 1
        else:
            t = 1
        if w + t >= best_w[0]:
            return
        k = order[i]
        chosen.append(k)
        search(i + 1, chosen, tau + delta[k] + inter[k], wid + dc[k],
               upper + e[k] - inter[k], inter + G[k])
        chosen.pop()
        search(i + 1, chosen, tau, wid, upper, inter)

    search(0, [], tau0, c0, zero, np.zeros(K, dtype=G.dtype))
    res = _result(best_set[0], s.K) if best_set[0] is not None else _result(None, s.K)
    return SolveReport(res, Method.BNB, None, nodes[0], time.perf_counter() - t0)


# -- diagnostics and fitting ---------------------------------------------------

def diagnostics(s: AdditiveSurface, additive_r2=None, additive_mae=None) -> Diagnostics:
    """rho = max_k |delta_k - delta_c_k| / (2 c0) in the orientation tau0 >= 0,
    and the coefficient of variation of c(s) over the full cube.

    For additive widths the cube mean and variance are closed form (each bit
    is an independent fair coin over the cube), so no sweep is needed.
    """
    n = s.normalized()
    delta = np.array(n.delta, float)
    dc = np.array(n.delta_c, float)
    c0 = float(n.c0)
    rho = float(np.max(np.abs(delta - dc)) / (2 * c0))
    mean = c0 + float(dc.sum()) / 2
    sd = math.sqrt(float((dc ** 2).sum()) / 4)
    cv = sd / mean if mean != 0 else math.inf
    return Diagnostics(rho, cv, additive_r2, additive_mae)


def fit_additive(grid: EvaluatedGrid):
    """Least-squares additive surface through an evaluated grid.

    Point estimates and CI half-widths are each regressed on an intercept
    plus main effects. Returns ``(surface, r2, mae)`` for the estimate fit.
    """
    configs = grid.configs()
    K = grid.space.K
    if len(configs) < K + 1:
        raise SpecError(f"{len(configs)} configs cannot identify {K + 1} parameters")
    S = np.array(configs, float)
    Z = np.column_stack([np.ones(len(S)), S])
    est = np.array([grid[c].estimate for c in configs])
    half = np.array([(grid[c].ci_upper - grid[c].ci_lower) / 2 for c in configs])
    beta, *_ = np.linalg.lstsq(Z, est, rcond=None)
    gam, *_ = np.linalg.lstsq(Z, half, rcond=None)
    fitted = Z @ beta
    ss_res = float(((est - fitted) ** 2).sum())
    ss_tot = float(((est - est.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    mae = float(np.abs(est - fitted).mean())
    c0 = float(gam[0])
    if not c0 > 0:
        raise SpecError(f"fitted baseline half-width {c0:g} is not positive")
    surface = AdditiveSurface(float(beta[0]), c0, tuple(beta[1:]), tuple(gam[1:]))
    return surface, r2, mae


def subset_sum_surface(a: Sequence[int], T: int) -> AdditiveSurface:
    """Additive instance whose null-compatible configs are exactly the subsets summing to T.

    delta_k = -a_k, constant half-width 1/4 and tau0 = T + 1/4, so
    ``|tau(s)| <= 1/4`` iff the selected a_k sum to T (an integer in
    [T, T + 1/2]).
    """
    a = [int(x) for x in a]
    if not a or any(x <= 0 for x in a) or int(T) <= 0:
        raise SurfaceError("subset-sum instance needs non-empty positive integers and T > 0")
    q = Fraction(1, 4)
    return AdditiveSurface(int(T) + q, q, tuple(-x for x in a))


# -- dispatch ------------------------------------------------------------------

def solve(s: AdditiveSurface, method: str = "auto", cross_check: bool = False) -> list:
    """Run one method (or all applicable ones with ``cross_check``).

    Returns the list of SolveReports; with ``cross_check`` all values must
    agree or an AssertionError is raised.
    """
    s.validate_widths()
    method = method.lower()
    reports = []

    def run(m):
        t0 = time.perf_counter()
        if m == "enum":
            return SolveReport(enumerate(s), Method.ENUM, wall_time=time.perf_counter() - t0)
        if m == "greedy":
            if s.constant_width:
                return SolveReport(greedy_constant(s), Method.GREEDY_CONST,
                                   wall_time=time.perf_counter() - t0)
            return greedy_variable(s)
        if m == "greedy_vw":
            return greedy_variable(s)
        if m == "bnb":
            return branch_and_bound(s)
        raise ValueError(f"unknown method {m!r}")

    if cross_check:
        for m in ("greedy", "bnb", "enum"):
            if m == "enum" and s.K > MAX_ENUM_K:
                continue
            try:
                reports.append(run(m))
            except PreconditionError:
                continue
        values = {r.msp.value for r in reports}
        assert len(values) == 1, f"solvers disagree: {[(r.method.value, r.msp.value) for r in reports]}"
        return reports
    if method == "auto":
        method = "enum" if s.K <= 16 else "bnb"
    return [run(method)]
