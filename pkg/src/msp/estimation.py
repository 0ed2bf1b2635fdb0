"""Treatment-effect estimation for one analysis choice.

Every estimator here is a weighted sum over rows, so a bootstrap resample is
the same computation with multiplicity weights (row counts). The batched
entry point :func:`effect_batch` exploits that: it takes a ``(B, n)`` weight
matrix and returns ``B`` estimates in one pass. Permutations and outcome
edits ride along as ``(B, n)`` treatment/outcome arrays.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np

from .specspace import SpecError, SpecSpace

log = logging.getLogger(__name__)

PROPENSITY_CLIP = (0.02, 0.98)
TRIM_BOUNDS = (0.05, 0.95)
IRLS_TOL = 1e-8
IRLS_MAX_ITER = 100
_RANK_TOL = 1e-10


class DataError(ValueError):
    """Dataset cannot be ingested or is unusable for the requested analysis."""


class EstimationError(RuntimeError):
    """The effect is not identifiable for this dataset and analysis choice."""


class Estimator(str, Enum):
    OLS = "OLS"
    IPW = "IPW"
    DID_FIRST_DIFF = "DID_FIRST_DIFF"
    DID_LONG = "DID_LONG"


class Form(str, Enum):
    LINEAR = "LINEAR"
    NONLINEAR = "NONLINEAR"


class Scale(str, Enum):
    RAW = "RAW"
    LOG1P = "LOG1P"


@dataclass(frozen=True)
class Dataset:
    """Tabular data with treatment, outcome and named covariates.

    ``pre_outcome`` holds the baseline-period outcome of the same unit and is
    only needed by the difference-in-differences estimators (the treatment
    column doubles as the group indicator there).
    """

    covariates: np.ndarray
    covariate_names: tuple
    treatment: np.ndarray
    outcome: np.ndarray
    pre_outcome: np.ndarray | None = None

    def __post_init__(self):
        X = np.asarray(self.covariates, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1) if X.size else X.reshape(len(self.outcome), 0)
        A = np.asarray(self.treatment)
        Y = np.asarray(self.outcome, dtype=float)
        n = len(Y)
        if X.shape[0] != n or len(A) != n:
            raise DataError("covariates, treatment and outcome must have the same row count")
        if X.shape[1] != len(self.covariate_names):
            raise DataError("one name per covariate column required")
        if not np.isin(A, (0, 1)).all():
            raise DataError("treatment must be strictly binary 0/1")
        if n < 2:
            raise DataError("need at least two rows")
        if not (np.isfinite(X).all() and np.isfinite(Y).all()):
            raise DataError("missing or non-finite values in covariates/outcome")
        object.__setattr__(self, "covariates", X)
        object.__setattr__(self, "covariate_names", tuple(self.covariate_names))
        object.__setattr__(self, "treatment", A.astype(np.int8))
        object.__setattr__(self, "outcome", Y)
        if self.pre_outcome is not None:
            P = np.asarray(self.pre_outcome, dtype=float)
            if P.shape != Y.shape or not np.isfinite(P).all():
                raise DataError("pre_outcome must be finite and match outcome length")
            object.__setattr__(self, "pre_outcome", P)

    @property
    def n(self) -> int:
        return len(self.outcome)

    @property
    def n_treated(self) -> int:
        return int(self.treatment.sum())

    def column(self, name: str) -> np.ndarray:
        try:
            return self.covariates[:, self.covariate_names.index(name)]
        except ValueError:
            raise DataError(f"unknown covariate column {name!r}") from None

    def with_treatment(self, A) -> "Dataset":
        return replace(self, treatment=np.asarray(A))

    def with_outcome(self, Y) -> "Dataset":
        return replace(self, outcome=np.asarray(Y, dtype=float))

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows)
        return Dataset(
            self.covariates[rows], self.covariate_names, self.treatment[rows],
            self.outcome[rows], None if self.pre_outcome is None else self.pre_outcome[rows],
        )


def read_dataset_csv(path, treatment: str, outcome: str, covariates: Sequence[str] | None = None,
                     pre_outcome: str | None = None, min_rows: int = 20) -> Dataset:
    """Load a headed CSV; ``covariates=None`` takes every remaining numeric column."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        rows = list(reader)
    roles = [treatment, outcome] + ([pre_outcome] if pre_outcome else [])
    for col in roles + list(covariates or []):
        if col not in header:
            raise DataError(f"{path}: column {col!r} not in header {header}")
    if covariates is None:
        covariates = [h for h in header if h not in roles]

    def num(col):
        try:
            return np.array([float(r[col]) for r in rows])
        except (TypeError, ValueError) as exc:
            raise DataError(f"{path}: column {col!r} has missing or non-numeric values") from exc

    if len(rows) < min_rows:
        raise DataError(f"{path}: {len(rows)} rows, need at least {min_rows}")
    X = np.column_stack([num(c) for c in covariates]) if covariates else np.zeros((len(rows), 0))
    return Dataset(X, tuple(covariates), num(treatment), num(outcome),
                   num(pre_outcome) if pre_outcome else None)


@dataclass(frozen=True)
class AnalysisChoice:
    estimator: Estimator = Estimator.OLS
    covariates: tuple = ()
    functional_form: Form = Form.LINEAR
    trimming: bool = False
    outcome_scale: Scale = Scale.RAW
    trim_bounds: tuple = TRIM_BOUNDS

    def __post_init__(self):
        object.__setattr__(self, "estimator", Estimator(self.estimator))
        object.__setattr__(self, "functional_form", Form(self.functional_form))
        object.__setattr__(self, "outcome_scale", Scale(self.outcome_scale))
        object.__setattr__(self, "covariates", tuple(self.covariates))
        object.__setattr__(self, "trimming", bool(self.trimming))
        lo, hi = self.trim_bounds
        if not 0 <= lo < hi <= 1:
            raise SpecError(f"bad trimming bounds {self.trim_bounds}")

    def label(self) -> str:
        return (f"{self.estimator.value}/{'+'.join(self.covariates) or 'none'}/"
                f"{self.functional_form.value}/trim={'on' if self.trimming else 'off'}/"
                f"{self.outcome_scale.value}")


FIELDS = ("estimator", "covariates", "functional_form", "trimming", "outcome_scale")


@dataclass(frozen=True)
class AxisBinding:
    """What one axis sets on one AnalysisChoice field for bit 0 and bit 1.

    For ``covariates`` the values are column lists that are unioned with the
    base covariates and the other covariate axes, so "omit X1" is
    ``AxisBinding("covariates", off=("X1",), on=())``.
    """

    field: str
    off: object
    on: object

    def __post_init__(self):
        if self.field not in FIELDS:
            raise SpecError(f"unknown AnalysisChoice field {self.field!r}; expected one of {FIELDS}")
        if self.field == "covariates":
            object.__setattr__(self, "off", tuple(self.off or ()))
            object.__setattr__(self, "on", tuple(self.on or ()))


@dataclass(frozen=True)
class Bindings:
    """Base analysis plus one binding per axis name."""

    base: AnalysisChoice
    axes: Mapping = field(default_factory=dict)

    def __post_init__(self):
        seen = {}
        for name, b in self.axes.items():
            if b.field != "covariates":
                if b.field in seen:
                    raise SpecError(f"axes {seen[b.field]!r} and {name!r} both set {b.field}")
                seen[b.field] = name

    def check(self, space: SpecSpace) -> None:
        missing = [n for n in space.names if n not in self.axes]
        if missing:
            raise SpecError(f"no binding for axes {missing}")


def bind_config(space: SpecSpace, bindings: Bindings, c) -> AnalysisChoice:
    bindings.check(space)
    c = space.check_config(c)
    values = {f: getattr(bindings.base, f) for f in FIELDS}
    cov = list(bindings.base.covariates)
    for name, bit in zip(space.names, c):
        b = bindings.axes[name]
        v = b.on if bit else b.off
        if b.field == "covariates":
            cov.extend(x for x in v if x not in cov)
        else:
            values[b.field] = v
    values["covariates"] = tuple(cov)
    return AnalysisChoice(**values, trim_bounds=bindings.base.trim_bounds)


# -- design construction -----------------------------------------------------

def covariate_design(d: Dataset, covariates: Sequence[str], form: Form) -> tuple:
    """Standardized covariate design (no intercept) and its column labels.

    NONLINEAR adds squares of continuous (more than two distinct values)
    covariates and all pairwise products. Centering and scaling leave the
    spanned column space, hence the treatment coefficient and fitted
    propensities, unchanged; they only help conditioning.
    """
    cols, names = [], []
    raw = {}
    for name in covariates:
        x = d.column(name)
        sd = x.std()
        z = (x - x.mean()) / sd if sd > 0 else x - x.mean()
        raw[name] = (z, len(np.unique(x)) > 2)
        cols.append(z)
        names.append(name)
    if Form(form) is Form.NONLINEAR:
        for name in covariates:
            z, continuous = raw[name]
            if continuous:
                cols.append(z * z)
                names.append(f"{name}^2")
        for a, b in combinations(covariates, 2):
            cols.append(raw[a][0] * raw[b][0])
            names.append(f"{a}*{b}")
    X = np.column_stack(cols) if cols else np.zeros((d.n, 0))
    return X, tuple(names)


def _transform(y: np.ndarray, scale: Scale) -> np.ndarray:
    if Scale(scale) is Scale.LOG1P:
        if np.any(y <= -1):
            raise DataError("LOG1P outcome scale needs all outcomes > -1")
        return np.log1p(y)
    return y


# -- batched weighted least squares / logistic regression ------------------

def _select_columns(Z: np.ndarray, keep_first: int) -> list:
    """Greedy rank-revealing column selection in the given column order."""
    norms = np.linalg.norm(Z, axis=0)
    chosen: list = []
    Q = np.zeros((Z.shape[0], 0))
    for j in range(Z.shape[1]):
        if norms[j] == 0:
            continue
        v = Z[:, j] - Q @ (Q.T @ Z[:, j])
        r = np.linalg.norm(v)
        if r > 1e-9 * norms[j]:
            chosen.append(j)
            Q = np.column_stack([Q, v / r])
    return chosen


def _wls_batch(Z: np.ndarray, y: np.ndarray, w: np.ndarray, target: int, names=None):
    """Weighted least squares coefficient ``target`` for each batch row.

    Z: (B, m, p) or (m, p); y, w: (B, m). Returns (coef (B,), ok (B,),
    dropped labels from the first batch row). Rank-deficient batch rows are
    refit on a greedily selected column subset (intercept and target first);
    a row fails when the target column itself is not identifiable.
    """
    B = w.shape[0]
    shared = Z.ndim == 2
    Zw = (Z if shared else Z) * w[..., None]
    if shared:
        G = np.einsum("bmj,mk->bjk", Zw, Z) if B > 1 else (Zw[0].T @ Z)[None]
        h = np.einsum("bmj,bm->bj", Zw, y)
    else:
        G = np.matmul(np.swapaxes(Zw, 1, 2), Z)
        h = np.einsum("bmj,bm->bj", Zw, y)
    diag = np.einsum("bjj->bj", G)
    scale = np.sqrt(np.where(diag > 0, diag, 1.0))
    Gs = G / scale[:, :, None] / scale[:, None, :]
    ev = np.linalg.eigvalsh(Gs)
    good = (diag > 0).all(axis=1) & (ev[:, 0] > _RANK_TOL * np.maximum(ev[:, -1], 1e-300))
    coef = np.full(B, np.nan)
    if good.any():
        sol = np.linalg.solve(Gs[good], (h[good] / scale[good])[..., None])[..., 0] / scale[good]
        coef[good] = sol[:, target]
    dropped: tuple = ()
    for b in np.flatnonzero(~good):
        Zb = Z if shared else Z[b]
        sw = np.sqrt(w[b])
        order = [0, target] + [j for j in range(Zb.shape[1]) if j not in (0, target)]
        chosen = sorted(order[i] for i in _select_columns((Zb * sw[:, None])[:, order], 2))
        if b == 0 and names is not None:
            dropped = tuple(names[j] for j in range(Zb.shape[1]) if j not in chosen)
        if target not in chosen:
            continue
        sol, *_ = np.linalg.lstsq(Zb[:, chosen] * sw[:, None], y[b] * sw, rcond=None)
        coef[b] = sol[chosen.index(target)]
    return coef, np.isfinite(coef), dropped


@dataclass(frozen=True)
class PropensityFit:
    probs: np.ndarray  # clipped, shape (B, n)
    raw: np.ndarray  # before clipping
    converged: np.ndarray
    separated: np.ndarray


def _logistic_batch(X: np.ndarray, A: np.ndarray, w: np.ndarray) -> PropensityFit:
    """IRLS logistic MLE of A on [1, X], one fit per weight row."""
    B, n = w.shape
    Z = np.column_stack([np.ones(n), X])
    p = Z.shape[1]
    frac = (w * A).sum(1) / w.sum(1)
    beta = np.zeros((B, p))
    with np.errstate(divide="ignore"):
        beta[:, 0] = np.log(frac / (1 - frac))
    beta[~np.isfinite(beta)] = 0.0
    active = np.ones(B, bool)
    converged = np.zeros(B, bool)
    for _ in range(IRLS_MAX_ITER):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        eta = np.clip(beta[idx] @ Z.T, -35, 35)
        mu = 1.0 / (1.0 + np.exp(-eta))
        wa = w[idx]
        grad = (wa * (A[idx] - mu)) @ Z
        Zw = Z[None] * (wa * mu * (1 - mu))[..., None]
        H = np.matmul(np.swapaxes(Zw, 1, 2), Z)
        step = np.matmul(np.linalg.pinv(H, rcond=1e-12, hermitian=True), grad[..., None])[..., 0]
        beta[idx] += step
        done = np.abs(step).max(axis=1) < IRLS_TOL
        converged[idx[done]] = True
        active[idx[done]] = False
    eta = beta @ Z.T
    raw = 1.0 / (1.0 + np.exp(-np.clip(eta, -700, 700)))
    in_sample = w > 0
    extreme = ((raw < 1e-8) | (raw > 1 - 1e-8)) & in_sample
    separated = ~converged | extreme.any(axis=1)
    return PropensityFit(np.clip(raw, *PROPENSITY_CLIP), raw, converged, separated)


def fit_propensity(d: Dataset, covariates: Sequence[str], functional_form=Form.LINEAR,
                   weights=None) -> PropensityFit:
    """Logistic propensity model by IRLS; probabilities clipped to [0.02, 0.98].

    Convergence is declared when the largest coefficient change drops below
    1e-8, capped at 100 iterations. Perfect separation is flagged (not
    raised); the clipped probabilities at the final iterate are returned.
    """
    X, _ = covariate_design(d, covariates, functional_form)
    w = np.ones((1, d.n)) if weights is None else np.atleast_2d(np.asarray(weights, float))
    if not (0 < d.n_treated < d.n):
        raise EstimationError("propensity model needs at least one treated and one control row")
    A = np.broadcast_to(d.treatment.astype(float), w.shape)
    fit = _logistic_batch(X, A, w)
    if fit.separated[0]:
        log.warning("propensity model: perfect or quasi-separation detected")
    if weights is None:
        return PropensityFit(fit.probs[0], fit.raw[0], fit.converged[0], fit.separated[0])
    return fit


def trim_overlap(d: Dataset, propensities, bounds=TRIM_BOUNDS) -> Dataset:
    """Keep rows whose propensity lies in the closed interval ``bounds``."""
    p = np.asarray(propensities, float)
    if p.shape != (d.n,):
        raise DataError(f"need {d.n} propensities, got shape {p.shape}")
    keep = (p >= bounds[0]) & (p <= bounds[1])
    A = d.treatment[keep]
    if A.sum() == 0 or A.sum() == len(A):
        raise EstimationError(f"trimming to {bounds} leaves an empty treatment arm")
    return d.subset(np.flatnonzero(keep))


# -- effect estimation -------------------------------------------------------

@dataclass(frozen=True)
class EffectBatch:
    estimates: np.ndarray  # (B,), nan where the fit failed
    ok: np.ndarray
    n_used: np.ndarray  # effective (weighted) row count after trimming
    dropped: tuple = ()


def effect_batch(d: Dataset, a: AnalysisChoice, weights=None, treatment=None,
                 outcome=None, pre_outcome=None, propensities=None) -> EffectBatch:
    """Treatment-effect estimates for a batch of weightings of ``d``.

    ``weights`` is (B, n) (bootstrap counts; default one row of ones).
    ``treatment``/``outcome`` override the dataset columns and may be (n,)
    or (B, n). ``propensities`` (B, n) reuses an earlier propensity fit for
    the same covariates, treatment and weights. Rows whose fit is not
    identifiable come back as nan.
    """
    n = d.n
    W = np.ones((1, n)) if weights is None else np.atleast_2d(np.asarray(weights, float))
    B = W.shape[0]
    A = np.broadcast_to(np.asarray(d.treatment if treatment is None else treatment, float), (B, n))
    Y = np.broadcast_to(_transform(np.asarray(d.outcome if outcome is None else outcome, float),
                                   a.outcome_scale), (B, n))
    is_did = a.estimator in (Estimator.DID_FIRST_DIFF, Estimator.DID_LONG)
    if is_did:
        pre = d.pre_outcome if pre_outcome is None else pre_outcome
        if pre is None:
            raise EstimationError(f"{a.estimator.value} needs a pre-period outcome column")
        Y0 = np.broadcast_to(_transform(np.asarray(pre, float), a.outcome_scale), (B, n))
    X, xnames = covariate_design(d, a.covariates, a.functional_form)

    ok = np.ones(B, bool)
    probs = None
    if a.trimming or a.estimator is Estimator.IPW:
        probs = (_logistic_batch(X, A, W).probs if propensities is None
                 else np.broadcast_to(np.asarray(propensities, float), (B, n)))
    if a.trimming:
        lo, hi = a.trim_bounds
        W = W * ((probs >= lo) & (probs <= hi))
    n1 = (W * A).sum(1)
    n0 = (W * (1 - A)).sum(1)
    ok &= (n1 > 0) & (n0 > 0)
    est = np.full(B, np.nan)
    dropped: tuple = ()
    if ok.any():
        idx = np.flatnonzero(ok)
        Wb, Ab, Yb = W[idx], A[idx], Y[idx]
        ones = np.ones(n)
        if a.estimator is Estimator.IPW:
            pb = probs[idx]
            w1 = Wb * Ab / pb
            w0 = Wb * (1 - Ab) / (1 - pb)
            est[idx] = (w1 * Yb).sum(1) / w1.sum(1) - (w0 * Yb).sum(1) / w0.sum(1)
        elif a.estimator is Estimator.DID_LONG:
            Y0b = Y0[idx]
            m = len(idx)
            post = np.concatenate([np.zeros(n), np.ones(n)])
            Xs = np.vstack([X, X])
            As = np.concatenate([Ab, Ab], axis=1)
            Z = np.concatenate([
                np.broadcast_to(np.concatenate([ones, ones]), (m, 2 * n))[..., None],
                (As * post)[..., None], As[..., None],
                np.broadcast_to(post, (m, 2 * n))[..., None],
                np.broadcast_to(Xs, (m,) + Xs.shape),
            ], axis=2)
            names = ("intercept", "treated:post", "treated", "post") + xnames
            coef, good, dropped = _wls_batch(Z, np.concatenate([Y0b, Yb], 1),
                                             np.concatenate([Wb, Wb], 1), 1, names)
            est[idx] = coef
        elif X.shape[1] == 0:
            # intercept + treatment only: the coefficient is a difference of means
            target = Yb - Y0[idx] if a.estimator is Estimator.DID_FIRST_DIFF else Yb
            w1, w0 = Wb * Ab, Wb * (1 - Ab)
            est[idx] = (w1 * target).sum(1) / w1.sum(1) - (w0 * target).sum(1) / w0.sum(1)
        else:
            target = Yb - Y0[idx] if a.estimator is Estimator.DID_FIRST_DIFF else Yb
            m = len(idx)
            Z = np.concatenate([
                np.ones((m, n, 1)), Ab[..., None], np.broadcast_to(X, (m,) + X.shape),
            ], axis=2)
            names = ("intercept", "treatment") + xnames
            coef, good, dropped = _wls_batch(Z, target, Wb, 1, names)
            est[idx] = coef
    ok &= np.isfinite(est)
    return EffectBatch(est, ok, W.sum(1), dropped)


@dataclass(frozen=True)
class EffectFit:
    estimate: float
    n_used: float
    dropped_columns: tuple


def fit_effect(d: Dataset, a: AnalysisChoice) -> EffectFit:
    """Full-sample estimate with the columns dropped for rank deficiency."""
    missing = [c for c in a.covariates if c not in d.covariate_names]
    if missing:
        raise DataError(f"covariates {missing} not in dataset")
    res = effect_batch(d, a)
    if not res.ok[0]:
        raise EstimationError(f"effect not identifiable under {a.label()}")
    if res.dropped:
        log.warning("dropped collinear design columns %s under %s", res.dropped, a.label())
    return EffectFit(float(res.estimates[0]), float(res.n_used[0]), res.dropped)


def estimate_effect(d: Dataset, a: AnalysisChoice) -> float:
    """Point estimate of the treatment effect under analysis choice ``a``.

    OLS: coefficient on treatment from least squares of the (possibly
    log1p-transformed) outcome on intercept, treatment and the covariate
    design. IPW: Hajek difference of inverse-propensity weighted means.
    DID_FIRST_DIFF: OLS of post minus pre outcome on the same design.
    DID_LONG: pooled two-period OLS, coefficient on treated x post.
    Trimming, when on, drops rows with propensity outside ``a.trim_bounds``
    before any of these.
    """
    return fit_effect(d, a).estimate
