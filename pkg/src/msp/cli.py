"""Command-line front end: ``msp audit|solve|calibrate|fragility|curve|simulate``.

Every command reads one YAML file, writes JSON reports and CSV tables to
``--out`` and exits with 0 (ok), 2 (config), 3 (data), 4 (estimation) or
5 (internal assertion). All randomness flows from the configured seed.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from . import __version__
from .bootstrap import QUANTILE_RULE, CIMethod, draw_resamples, evaluate_grid, rethreshold
from .calibration import OBSERVATIONAL_DISCLAIMER, calibrate, scale_subgrid_msps
from .estimation import (FIELDS, AnalysisChoice, AxisBinding, Bindings, DataError, Dataset,
                         EstimationError, bind_config, read_dataset_csv)
from .fragility import fi_adversarial, fi_random_median
from .rng import subseed
from .solver import (AdditiveSurface, PreconditionError, SurfaceError, diagnostics, fit_additive,
                     greedy_variable, solve)
from .specspace import (Axis, EvaluatedGrid, SpecError, SpecSpace, bits_str, compute_msp,
                        msp_alpha_curve, read_grid_csv, weighted_msp, write_grid_csv)
from .tables import write_json, write_rows

log = logging.getLogger("msp")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_ESTIMATION, EXIT_INTERNAL = 0, 2, 3, 4, 5
DEFAULT_ALPHAS = (0.005, 0.01, 0.02, 0.05, 0.10, 0.15, 0.20, 0.30, 0.40, 0.50)
SMOKE = {"R": 20, "B": 50, "P": 50}


class ConfigError(ValueError):
    pass


# -- config parsing ------------------------------------------------------------

def load_yaml(path) -> dict:
    try:
        with open(path) as fh:
            cfg = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"config {path} must be a mapping at top level")
    return cfg


def _require(cfg: dict, key: str, where: str = "config"):
    if key not in cfg:
        raise ConfigError(f"{where}: missing required key {key!r}")
    return cfg[key]


@dataclass
class AuditConfig:
    path: Path
    data_path: Path
    treatment: str
    outcome: str
    pre_outcome: str | None
    space: SpecSpace
    bindings: Bindings
    method: CIMethod
    B: int
    seed: int
    weights: dict | None = None
    alphas: tuple = DEFAULT_ALPHAS
    randomized: bool = False
    calibration: dict = field(default_factory=dict)
    fragility: dict = field(default_factory=dict)
    axis_specs: list = field(default_factory=list)

    @property
    def covariates(self) -> list:
        cols = list(self.bindings.base.covariates)
        for b in self.bindings.axes.values():
            if b.field == "covariates":
                cols += [c for c in (*b.off, *b.on) if c not in cols]
        return cols


def _choice_kwargs(raw: dict, where: str) -> dict:
    unknown = set(raw) - set(FIELDS) - {"trim_bounds"}
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    out = dict(raw)
    if "covariates" in out:
        out["covariates"] = tuple(out["covariates"] or ())
    if "trim_bounds" in out:
        out["trim_bounds"] = tuple(out["trim_bounds"])
    return out


def parse_audit_config(cfg: dict, path, seed_override: int | None = None) -> AuditConfig:
    """Validate an audit config into a space, bindings and run settings."""
    path = Path(path)
    ds = _require(cfg, "dataset")
    seed = seed_override if seed_override is not None else cfg.get("seed")
    if seed is None:
        raise ConfigError("a seed is required (config key 'seed' or --seed)")
    try:
        base = AnalysisChoice(**_choice_kwargs(cfg.get("baseline", {}), "baseline"))
        axes, bind, specs = [], {}, []
        for i, ax in enumerate(_require(cfg, "axes")):
            where = f"axes[{i}]"
            # YAML 1.1 reads bare on/off keys as booleans
            ax = {{True: "on", False: "off"}.get(k, k): v for k, v in ax.items()}
            name = str(_require(ax, "name", where))
            fld = _require(ax, "field", where)
            off, on = ax.get("off"), _require(ax, "on", where)
            if off is None:
                off = () if fld == "covariates" else getattr(base, fld)
            axes.append(Axis(name, str(ax.get("baseline_label", _label(off))),
                             str(ax.get("perturbed_label", _label(on)))))
            bind[name] = AxisBinding(fld, off, on)
            specs.append({"name": name, "field": fld, "off": _label(off), "on": _label(on)})
        admissible = cfg.get("admissible")
        space = SpecSpace(tuple(axes), None if admissible is None else
                          frozenset(tuple(int(b) for b in str(c)) for c in admissible))
        bindings = Bindings(base, bind)
        # resolve every config once so bad field values surface as config errors
        for c in space.configs():
            bind_config(space, bindings, c)
        ci = cfg.get("ci", {})
        method = CIMethod(ci.get("method", "PERCENTILE"), float(ci.get("alpha", 0.05)))
    except (SpecError, ValueError, TypeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{path}: {exc}") from exc
    B = int(cfg.get("B", 200))
    if B < 10:
        raise ConfigError(f"B must be at least 10, got {B}")
    weights = cfg.get("weights")
    if weights is not None:
        missing = [n for n in space.names if n not in weights]
        if missing:
            raise ConfigError(f"weights missing for axes {missing}")
    data_path = Path(_require(ds, "path", "dataset"))
    if not data_path.is_absolute():
        data_path = path.parent / data_path
    return AuditConfig(
        path=path, data_path=data_path, treatment=_require(ds, "treatment", "dataset"),
        outcome=_require(ds, "outcome", "dataset"), pre_outcome=ds.get("pre_outcome"),
        space=space, bindings=bindings, method=method, B=B, seed=int(seed), weights=weights,
        alphas=tuple(float(a) for a in cfg.get("alphas", DEFAULT_ALPHAS)),
        randomized=bool(cfg.get("randomized", False)),
        calibration=dict(cfg.get("calibration", {})), fragility=dict(cfg.get("fragility", {})),
        axis_specs=specs,
    )


def _label(v) -> str:
    if isinstance(v, (list, tuple)):
        return "+".join(map(str, v)) or "none"
    return str(getattr(v, "value", v))


def load_dataset(ac: AuditConfig) -> Dataset:
    """Check column roles against the header (config error), then load (data error)."""
    try:
        with open(ac.data_path, newline="") as fh:
            header = next(csv.reader(fh), [])
    except OSError as exc:
        raise DataError(f"cannot read dataset {ac.data_path}: {exc}") from exc
    needed = [ac.treatment, ac.outcome] + ([ac.pre_outcome] if ac.pre_outcome else []) + ac.covariates
    for col in needed:
        if col not in header:
            raise ConfigError(f"unknown column {col!r}: not in {ac.data_path.name} header")
    return read_dataset_csv(ac.data_path, ac.treatment, ac.outcome, ac.covariates, ac.pre_outcome)


def provenance(command: str, ac: AuditConfig | None = None, **extra) -> dict:
    out = {"tool": "msp", "version": __version__, "command": command}
    if ac is not None:
        out.update({
            "config": ac.path.name,
            "config_sha256": hashlib.sha256(ac.path.read_bytes()).hexdigest(),
            "seed": ac.seed, "B": ac.B, "ci_method": ac.method.kind.value,
            "alpha": ac.method.alpha, "quantile_rule": QUANTILE_RULE,
            "trim_bounds": list(ac.bindings.base.trim_bounds),
        })
    out.update(extra)
    return out


# -- audit ---------------------------------------------------------------------

def _scale_axes(ac: AuditConfig) -> list:
    return [n for n, b in ac.bindings.axes.items() if b.field == "outcome_scale"]


def _grid_rows(ac: AuditConfig, grid: EvaluatedGrid) -> list:
    rows = []
    for c in grid.configs():
        rec = grid[c]
        rows.append({
            "config_bits": bits_str(c), "flips": ac.space.describe(c),
            "analysis": bind_config(ac.space, ac.bindings, c).label(),
            "estimate": rec.estimate, "ci_lower": rec.ci_lower, "ci_upper": rec.ci_upper,
            "null_compatible": rec.contains_zero, "n_failed": rec.n_failed,
        })
    return rows


def run_audit(ac: AuditConfig, d: Dataset, out: Path) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    U = draw_resamples(d.n, ac.B, ac.seed)
    grid = evaluate_grid(d, ac.space, ac.bindings, U, ac.method, keep_draws=True)
    res = compute_msp(grid)
    rows = _grid_rows(ac, grid)
    write_grid_csv(grid, out / "grid.csv", out / "draws.csv")
    write_rows(out / "curve.csv", sorted(rows, key=lambda r: (r["estimate"], r["config_bits"])))
    report = {
        "n": d.n, "n_treated": d.n_treated, "K": ac.space.K, "n_configs": len(rows),
        "axes": ac.axis_specs,
        "msp": {
            "value": res.value, "feasible_count": res.feasible_count,
            "witness": None if res.witness is None else bits_str(res.witness),
            "narrative": ("no admissible configuration has a CI containing zero" if res.witness is None
                          else "flip: " + ac.space.describe(res.witness)),
        },
        "baseline": rows[0] if rows[0]["config_bits"] == bits_str(ac.space.baseline) else None,
    }
    if ac.weights is not None:
        w = [float(ac.weights[n]) for n in ac.space.names]
        value, witness = weighted_msp(grid, w)
        report["weighted_msp"] = {"weights": dict(zip(ac.space.names, w)), "value": value,
                                  "witness": None if witness is None else bits_str(witness)}
    if ac.space.admissible is None and len(rows) > ac.space.K:
        try:
            surf, r2, mae = fit_additive(grid)
            diag = diagnostics(surf, r2, mae)
            try:
                pred = greedy_variable(surf).msp.value
            except PreconditionError as exc:
                pred = f"n/a ({exc})"
            report["diagnostics"] = {"additive_r2": r2, "additive_mae": mae, "rho": diag.rho,
                                     "width_cv": diag.width_cv, "greedy_prediction_on_fit": pred}
        except (SpecError, SurfaceError) as exc:
            report["diagnostics"] = {"error": str(exc)}
    if _scale_axes(ac):
        report["scale_subgrids"] = {k: v.value for k, v in scale_subgrid_msps(grid, ac.bindings).items()}
        report["warning"] = ("space pools raw and transformed outcome scales; read the scale-specific "
                             "subgrid MSPs alongside the pooled value")
    flagged = {r["config_bits"]: r["n_failed"] for r in rows if r["n_failed"] > 0.1 * ac.B}
    if flagged:
        report["flagged_configs"] = flagged
    report["provenance"] = provenance("audit", ac)
    write_json(out / "report.json", report)
    return report


def cmd_audit(args) -> int:
    ac = parse_audit_config(load_yaml(args.config), args.config, args.seed)
    d = load_dataset(ac)
    rep = run_audit(ac, d, Path(args.out))
    print(f"MSP = {_fmt(rep['msp']['value'])}; {rep['msp']['narrative']}")
    return EXIT_OK


# -- solve ---------------------------------------------------------------------

def parse_surface(cfg: dict) -> AdditiveSurface:
    try:
        gamma = {}
        for t in cfg.get("gamma", []) or []:
            k, j, v = t
            gamma[(int(k), int(j))] = v
        return AdditiveSurface(_require(cfg, "tau0", "surface"), _require(cfg, "c0", "surface"),
                               tuple(_require(cfg, "delta", "surface")),
                               tuple(cfg.get("delta_c", ()) or ()), gamma)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad surface: {exc}") from exc


def cmd_solve(args) -> int:
    s = parse_surface(load_yaml(args.config))
    try:
        reports = solve(s, args.method, args.cross_check)
    except (SurfaceError, PreconditionError) as exc:
        raise ConfigError(str(exc)) from exc
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    diag = diagnostics(s)
    body = {
        "K": s.K, "exact_arithmetic": s.exact,
        "results": [{"method": r.method.value, "msp": r.msp.value,
                     "witness": None if r.msp.witness is None else bits_str(r.msp.witness),
                     "greedy_feasible": r.greedy_feasible, "nodes_explored": r.nodes_explored}
                    for r in reports],
        "diagnostics": {"rho": diag.rho, "width_cv": diag.width_cv},
        "provenance": provenance("solve", config=Path(args.config).name,
                                 method=args.method, cross_check=args.cross_check),
    }
    write_json(Path(args.out) / "solve.json", body)
    for r in reports:
        print(f"{r.method.value}: MSP = {_fmt(r.msp.value)}"
              + (f" (witness {bits_str(r.msp.witness)})" if r.msp.witness is not None else "")
              + f" [{r.wall_time * 1e3:.3f} ms]")
    return EXIT_OK


# -- calibrate / fragility / curve ---------------------------------------------

def cmd_calibrate(args) -> int:
    ac = parse_audit_config(load_yaml(args.config), args.config, args.seed)
    d = load_dataset(ac)
    P = int(ac.calibration.get("P", SMOKE["P"] if args.smoke else 200))
    B = int(ac.calibration.get("B", 50))
    rep = calibrate(d, ac.space, ac.bindings, P=P, B=B, seed=ac.seed, method=ac.method,
                    randomized=ac.randomized, workers=args.workers)
    out = Path(args.out)
    body = {**rep.table_row(),
            "observed_witness": None if rep.observed_result.witness is None
            else bits_str(rep.observed_result.witness),
            "scale_subgrids": {k: v.value for k, v in rep.scale_subgrids.items()},
            "randomized": rep.randomized,
            "provenance": provenance("calibrate", ac, B=B, P=P)}
    if rep.disclaimer:
        body["disclaimer"] = rep.disclaimer
    write_json(out / "calibration.json", body)
    write_rows(out / "permutations.csv", [{"j": j, "msp": v} for j, v in enumerate(rep.permuted)])
    if rep.disclaimer:
        print(OBSERVATIONAL_DISCLAIMER)
    print(f"observed MSP = {_fmt(rep.observed)}; p = {rep.p_hat:.4f} over P = {P}")
    return EXIT_OK


def cmd_fragility(args) -> int:
    ac = parse_audit_config(load_yaml(args.config), args.config, args.seed)
    d = load_dataset(ac)
    fcfg = ac.fragility
    bits = tuple(int(b) for b in str(fcfg.get("config_bits", bits_str(ac.space.baseline))))
    choice = bind_config(ac.space, ac.bindings, bits)
    B_fi = int(fcfg.get("B", SMOKE["B"] if args.smoke else 500))
    n_orders = int(fcfg.get("n_orders", 10 if args.smoke else 50))
    U = draw_resamples(d.n, B_fi, subseed(ac.seed, "fragility"))
    adv = fi_adversarial(d, choice, U, ac.method)
    rnd = fi_random_median(d, choice, U, ac.method, n_orders, subseed(ac.seed, "fragility-orders"))
    grid = evaluate_grid(d, ac.space, ac.bindings, draw_resamples(d.n, ac.B, ac.seed), ac.method,
                         keep_draws=False)
    msp = compute_msp(grid)
    body = {
        "analysis": choice.label(), "n_treated": d.n_treated,
        "fi_adversarial": {"value": adv.fi_value, "fraction": adv.fraction_perturbed,
                           "zeroed_values": list(adv.zeroed_values)},
        "fi_random_median": {"value": rnd.fi_value, "fraction": rnd.fraction_perturbed,
                             "n_orders": n_orders, "counts": list(rnd.counts)},
        "msp": {"value": msp.value, "feasible_count": msp.feasible_count,
                "witness": None if msp.witness is None else bits_str(msp.witness)},
        "tie_rule": "equal outcomes are zeroed in increasing row order",
        "provenance": provenance("fragility", ac, B_fragility=B_fi),
    }
    write_json(Path(args.out) / "fragility.json", body)
    print(f"FI adversarial = {_fmt(adv.fi_value)}, FI random median = {_fmt(rnd.fi_value)}, "
          f"MSP = {_fmt(msp.value)}")
    return EXIT_OK


def cmd_curve(args) -> int:
    cfg = load_yaml(args.config) if args.config else {}
    if args.grid:
        if cfg.get("axes"):
            ac = parse_audit_config(cfg, args.config, args.seed if args.seed is not None else 0)
            space, method, alphas = ac.space, ac.method, ac.alphas
        else:
            space, method = None, CIMethod(cfg.get("ci", {}).get("method", "PERCENTILE"))
            alphas = tuple(float(a) for a in cfg.get("alphas", DEFAULT_ALPHAS))
        try:
            grid = read_grid_csv(args.grid, space, args.draws)
        except (OSError, SpecError, ValueError) as exc:
            raise DataError(f"cannot load stored grid: {exc}") from exc
        prov = provenance("curve", grid=Path(args.grid).name, ci_method=method.kind.value,
                          quantile_rule=QUANTILE_RULE)
    else:
        if not args.config:
            raise ConfigError("curve needs --config, or --grid with --draws")
        ac = parse_audit_config(cfg, args.config, args.seed)
        d = load_dataset(ac)
        grid = evaluate_grid(d, ac.space, ac.bindings, draw_resamples(d.n, ac.B, ac.seed),
                             ac.method, keep_draws=True)
        method, alphas, prov = ac.method, ac.alphas, provenance("curve", ac)
    try:
        curve = msp_alpha_curve(grid, alphas, rethreshold(method.kind))
    except SpecError as exc:
        raise ConfigError(str(exc)) from exc
    rows = [{"alpha": a, "level": 1 - a, "msp": v, "feasible_count": n} for a, v, n in curve]
    out = Path(args.out)
    write_rows(out / "alpha_curve.csv", rows)
    write_json(out / "alpha_curve.json", {"curve": rows, "provenance": prov})
    for r in rows:
        print(f"alpha={r['alpha']:<6g} MSP={_fmt(r['msp'])} feasible={r['feasible_count']}")
    return EXIT_OK


# -- simulate --------------------------------------------------------------------

BLOCKS = ("power", "compare", "decide", "sca", "flip", "k10", "refine", "fit")


def _sim_params(args) -> dict:
    p = {"R": None, "n": 800, "B": 100, "P": 300, "taus": (0.0, 0.3, 0.7, 1.5), "tail_bonus": 15.0}
    if args.config:
        p.update(load_yaml(args.config))
    if args.smoke:
        p.update({k: v for k, v in SMOKE.items()})
    p["seed"] = args.seed if args.seed is not None else int(p.get("seed", 0))
    return p


def run_block(block: str, p: dict, out: Path, workers: int = 1) -> dict:
    """Run one named simulation block and write its CSVs; returns the summary."""
    from . import simulation as sim

    seed, R, n, B = p["seed"], p["R"], int(p["n"]), int(p["B"])
    taus = tuple(float(t) for t in p["taus"])
    if block in ("power", "compare", "decide"):
        R = R or (120 if block == "power" else 200)
        study = sim.run_power_study if block == "power" else sim.run_comparison
        reps, summary = study(taus, R, n, B, seed, workers)
        write_rows(out / f"{block}_replicates.csv", [r.row() for r in reps])
        write_rows(out / f"{block}_summary.csv", summary)
        if block == "decide":
            m = sim.decision_metrics(reps)
            write_rows(out / "decide_auc.csv", [{"score": k, "auc": v} for k, v in m["auc"].items()])
            write_rows(out / "decide_fpr.csv", m["fpr_table"])
            write_rows(out / "roc_points.csv", m["roc_points"])
            summary = {"summary": summary, "auc": m["auc"], "fpr": m["fpr_table"]}
        return {"summary": summary}
    if block == "sca":
        rows, summary = sim.run_sca_study(taus, R or 80, n, B, int(p["P"]), seed, workers=workers)
        write_rows(out / "sca_replicates.csv", rows)
        write_rows(out / "sca_summary.csv", summary)
        return {"summary": summary}
    if block == "flip":
        res = sim.flip_experiment(R or 120, n, B, B, seed, float(p["tail_bonus"]), workers)
        reps = [r.row() for rr, _ in res.values() for r in rr]
        summary = [{"regime": k, **s} for k, (_, s) in res.items()]
        write_rows(out / "flip_replicates.csv", reps)
        write_rows(out / "flip_summary.csv", summary)
        return {"summary": summary}
    if block == "k10":
        rows, summary, timings = sim.k10_experiment(R=R or 80, seed=seed)
        write_rows(out / "k10_replicates.csv", rows)
        write_rows(out / "k10_summary.csv", summary)
        write_rows(out / "k10_timings.csv", timings)
        return {"summary": summary, "timings": timings}
    if block == "refine":
        rows, summary = sim.refinement_check(R or 120, n, B, seed=seed, workers=workers)
        write_rows(out / "refine_replicates.csv", rows)
        write_rows(out / "refine_summary.csv", [summary])
        return {"summary": summary}
    if block == "fit":
        rows, summary = sim.additive_fit_study(R or 120, n, B, seed=seed, workers=workers)
        write_rows(out / "fit_replicates.csv", rows)
        write_rows(out / "fit_summary.csv", summary)
        return {"summary": summary}
    raise ConfigError(f"unknown block {block!r}; choose from {BLOCKS}")


def cmd_simulate(args) -> int:
    p = _sim_params(args)
    out = Path(args.out)
    for block in args.block:
        try:
            res = run_block(block, p, out, args.workers)
        except (ConfigError, DataError, EstimationError, AssertionError) as exc:
            raise type(exc)(f"simulate block {block}: {exc}") from exc
        prov = provenance("simulate", block=block, seed=p["seed"], smoke=bool(args.smoke),
                          params={k: v for k, v in p.items() if k != "seed"},
                          quantile_rule=QUANTILE_RULE)
        write_json(out / f"{block}.json", {**res, "provenance": prov})
        print(f"[{block}] done -> {out}")
    return EXIT_OK


# -- entry point ---------------------------------------------------------------

def _fmt(v) -> str:
    return "inf" if v == float("inf") else f"{v:g}" if isinstance(v, float) else str(v)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="msp", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"msp {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="YAML config file")
        p.add_argument("--out", default="msp-out", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--smoke", action="store_true", help="reduced replicate counts")
        p.add_argument("-v", "--verbose", action="store_true")
        return p

    common(sub.add_parser("audit", help="evaluate a space and report MSP")).set_defaults(fn=cmd_audit)
    sp = common(sub.add_parser("solve", help="MSP on an analytic surface"))
    sp.add_argument("--method", default="auto", choices=("auto", "enum", "greedy", "greedy_vw", "bnb"))
    sp.add_argument("--cross-check", action="store_true", help="run all applicable methods")
    sp.set_defaults(fn=cmd_solve)
    common(sub.add_parser("calibrate", help="permutation calibration")).set_defaults(fn=cmd_calibrate)
    common(sub.add_parser("fragility", help="fragility index vs MSP")).set_defaults(fn=cmd_fragility)
    cp = common(sub.add_parser("curve", help="MSP-alpha curve"), config_required=False)
    cp.add_argument("--grid", help="stored grid CSV")
    cp.add_argument("--draws", help="stored draws CSV for --grid")
    cp.set_defaults(fn=cmd_curve)
    mp = common(sub.add_parser("simulate", help="synthetic experiment blocks"), config_required=False)
    mp.add_argument("--block", nargs="+", required=True, choices=BLOCKS)
    mp.set_defaults(fn=cmd_simulate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except EstimationError as exc:
        print(f"estimation error: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION
    except (SpecError, SurfaceError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AssertionError as exc:
        print(f"internal assertion failed: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
