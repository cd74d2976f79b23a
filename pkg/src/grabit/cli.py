"""Command-line interface: ``grabit {train,predict,simulate,evaluate,compare,explain}``.

Exit codes: 0 success, 2 usage, 3 unreadable input, 4 data/schema problem,
5 response outside the censoring bounds, 6 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy import special

from . import boosting, interpret, report, simulation
from .boosting import BoostedEnsemble, fit_boosted, load_model, save_model
from .data import DataError, Dataset, SchemaError, log_transform, read_csv, write_csv
from .evaluation import (SingleClassError, TemporalCvConfig, delong_test, temporal_cv)
from .linear import LinearModel, fit_linear_tobit, fit_logit
from .losses import (BernoulliLogitLoss, BoundsViolationError, CensoringBounds, InvalidSigmaError,
                     TobitLoss, snap_to_bounds)
from .sigma import SigmaSearchConfig, select_sigma

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_DATA, EXIT_BOUNDS, EXIT_NUMERIC = 0, 2, 3, 4, 5, 6
MODEL_KINDS = ("grabit", "tobit", "logit", "boosted-logit")


class UsageError(Exception):
    pass


def _bound(text: str) -> float:
    v = float(text)
    if math.isnan(v):
        raise argparse.ArgumentTypeError("bound cannot be NaN")
    return v


def _csv_list(text: str):
    return [s.strip() for s in text.split(",") if s.strip()]


# ---------------------------------------------------------------------------
# model specifications ("grabit:upper=60,lower=0,sigma=grid")


@dataclass
class ModelSpec:
    kind: str
    lower: float = -math.inf
    upper: float = math.inf
    sigma: str | float = 1.0          # float or "grid"
    trees: int = 100
    shrinkage: float = 0.1
    depth: int = 3
    min_leaf: int = 1
    label: str = ""

    @property
    def bounds(self) -> CensoringBounds:
        return CensoringBounds(self.lower, self.upper)


_SPEC_KEYS = {"lower": float, "upper": float, "trees": int, "shrinkage": float, "depth": int,
              "min_leaf": int}


def parse_model_spec(text: str) -> ModelSpec:
    """``kind[:key=value[,key=value...]]`` with kind in grabit, tobit, logit, boosted-logit, constant.

    Keys: lower, upper, sigma (number or ``grid``), trees, shrinkage, depth, min_leaf.
    """
    kind, _, rest = text.strip().partition(":")
    kind = kind.strip()
    if kind not in MODEL_KINDS + ("constant",):
        raise UsageError(f"unknown model kind {kind!r} in spec {text!r}")
    spec = ModelSpec(kind, label=text.strip())
    for item in _csv_list(rest):
        key, eq, val = item.partition("=")
        key, val = key.strip(), val.strip()
        if not eq:
            raise UsageError(f"expected key=value in spec {text!r}, got {item!r}")
        try:
            if key == "sigma":
                spec.sigma = "grid" if val == "grid" else float(val)
            elif key in _SPEC_KEYS:
                setattr(spec, key, _SPEC_KEYS[key](val))
            else:
                raise UsageError(f"unknown key {key!r} in spec {text!r}")
        except ValueError:
            raise UsageError(f"bad value {val!r} for {key!r} in spec {text!r}") from None
    if kind == "tobit" and math.isinf(spec.lower) and math.isinf(spec.upper):
        raise UsageError("tobit needs at least one finite bound")
    return spec


def _binary_target(y, spec: ModelSpec, threshold=None) -> np.ndarray:
    """0/1 labels: ``y >= threshold`` if given, the response itself when binary, else ``y >= upper``."""
    if threshold is not None:
        return (y >= threshold).astype(float)
    if np.all((y == 0) | (y == 1)):
        return y.astype(float)
    if math.isfinite(spec.upper):
        return (y >= spec.upper).astype(float)
    raise SchemaError("binary models need a 0/1 target or a finite --upper to define events")


def fit_spec(spec: ModelSpec, data: Dataset, search: SigmaSearchConfig | None = None, event_threshold=None):
    """Fit the model a spec describes; returns (model, info dict)."""
    info = {}
    if spec.kind in ("grabit", "tobit"):
        y, moved = snap_to_bounds(data.y, spec.bounds)
        info["snapped"] = moved
        data = Dataset(data.X, y, feature_names=data.feature_names)
    if spec.kind == "grabit":
        sigma = spec.sigma
        if sigma == "grid":
            cfg = boosting.grabit_config(spec.lower, spec.upper, 1.0, spec.trees, spec.shrinkage, spec.depth,
                                         spec.min_leaf)
            sigma, trace = select_sigma(data, cfg, search or SigmaSearchConfig())
            info["sigma_trace"] = trace
        cfg = boosting.grabit_config(spec.lower, spec.upper, sigma, spec.trees, spec.shrinkage, spec.depth,
                                     spec.min_leaf)
        model = fit_boosted(data, cfg)
    elif spec.kind == "boosted-logit":
        cfg = boosting.bernoulli_config(spec.trees, spec.shrinkage, spec.depth, spec.min_leaf)
        model = fit_boosted(Dataset(data.X, _binary_target(data.y, spec, event_threshold)), cfg)
    elif spec.kind == "logit":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            model = fit_logit(Dataset(data.X, _binary_target(data.y, spec, event_threshold)))
    elif spec.kind == "tobit":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            model = fit_linear_tobit(data, spec.bounds)
    elif spec.kind == "constant":
        model = None
    else:  # pragma: no cover - parse_model_spec guards this
        raise UsageError(spec.kind)
    return model, info


def event_scores(model, X) -> np.ndarray:
    """Event probability for any supported model (zeros for the constant model)."""
    X = np.asarray(X, dtype=float)
    if model is None:
        return np.zeros(X.shape[0])
    if isinstance(model, LinearModel):
        return model.predict_proba(X)
    if isinstance(model.loss, TobitLoss):
        return boosting.predict_default_prob(model, X)
    if isinstance(model.loss, BernoulliLogitLoss):
        return special.expit(model.predict(X))
    raise SchemaError("model has no event-probability mapping")


def _train_loss(model, data: Dataset, spec: ModelSpec):
    if isinstance(model, BoostedEnsemble):
        return model.train_loss[-1]
    F = model.predict(data.X)
    if model.kind == "logit":
        c = _binary_target(data.y, spec)
        return float(np.sum(np.logaddexp(0.0, np.where(c == 1, -F, F))))
    from .losses import tobit_loss

    y, _ = snap_to_bounds(data.y, spec.bounds)
    return float(np.sum(tobit_loss(y, F, model.sigma, spec.bounds)))


# ---------------------------------------------------------------------------
# commands


def _load_data(args, target=None, time_col=None):
    data = read_csv(args.data, target=target, time_col=time_col)
    cols = _csv_list(getattr(args, "log_transform", None) or "")
    if cols:
        data = log_transform(data, cols)
    return data


def _require_complete(data: Dataset):
    if np.isnan(data.X).any():
        bad = [data.feature_names[j] for j in np.flatnonzero(np.isnan(data.X).any(axis=0))]
        raise SchemaError(f"missing feature values in column(s) {', '.join(bad)}; impute before training")


def _stem(path):
    root, ext = os.path.splitext(path)
    return root if ext else path


def cmd_train(args):
    if args.sigma is not None and args.sigma_search:
        raise UsageError("--sigma and --sigma-search are mutually exclusive")
    if args.model in ("grabit", "tobit") and math.isinf(args.lower) and math.isinf(args.upper):
        raise UsageError(f"--model {args.model} needs --lower and/or --upper")
    data = _load_data(args, target=args.target, time_col=args.time_col)
    _require_complete(data)
    spec = ModelSpec(args.model, args.lower, args.upper,
                     "grid" if args.sigma_search else (1.0 if args.sigma is None else args.sigma),
                     args.trees, args.shrinkage, args.depth, args.min_leaf)
    search = SigmaSearchConfig(grid=tuple(args.sigma_grid), refine=not args.no_refine, seed=args.seed) \
        if args.sigma_grid else SigmaSearchConfig(refine=not args.no_refine, seed=args.seed)
    model, info = fit_spec(spec, data, search)
    save_model(model, args.out)
    stem = _stem(args.out)
    sigma = model.loss.sigma if isinstance(model, BoostedEnsemble) and isinstance(model.loss, TobitLoss) \
        else getattr(model, "sigma", None)
    rep = {
        "model": args.model,
        "n_rows": data.n,
        "n_features": data.p,
        "features": data.feature_names,
        "final_training_loss": _train_loss(model, data, spec),
        "sigma": sigma,
        "n_trees": len(model.trees) if isinstance(model, BoostedEnsemble) else 0,
        "snapped_to_bounds": info.get("snapped", 0),
        "log_transformed": _csv_list(args.log_transform or ""),
    }
    if isinstance(model, LinearModel):
        rep["converged"] = model.converged
    with open(stem + ".report.json", "w") as fh:
        json.dump(rep, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if "sigma_trace" in info:
        t = info["sigma_trace"]
        write_csv(stem + ".sigma.csv", ["sigma", "profile_loglik", "source"], t.rows())
    return EXIT_OK


def cmd_predict(args):
    model = load_model(args.model)
    data = read_csv(args.data, target=args.target, time_col=args.time_col)
    n_feat = model.n_features
    if data.p != n_feat:
        raise SchemaError(f"model expects {n_feat} features, data has {data.p}")
    _require_complete(data)
    header = ["row"]
    cols = []
    if args.output in ("latent", "both"):
        header.append("latent")
        cols.append(model.predict(data.X) if data.n else np.empty(0))
    if args.output in ("prob", "both"):
        header.append("prob")
        cols.append(event_scores(model, data.X) if data.n else np.empty(0))
    write_csv(args.out, header, ([i] + [c[i] for c in cols] for i in range(data.n)))
    return EXIT_OK


def _grid(name):
    return simulation.REDUCED_GRID if name == "reduced" else simulation.TuningGrid()


def cmd_simulate(args):
    if (args.scenario is None) == (args.preset is None):
        raise UsageError("give exactly one of --scenario and --preset")
    try:
        scenario = simulation.read_scenario(args.scenario) if args.scenario else simulation.get_preset(args.preset)
    except KeyError as e:
        raise UsageError(str(e.args[0])) from None
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.replications is not None:
        overrides["replications"] = args.replications
    if overrides:
        scenario = replace(scenario, **overrides)
    models = [m.replace("-", "_") for m in _csv_list(args.models)]
    os.makedirs(args.outdir, exist_ok=True)
    result = simulation.run_study(scenario, models, _grid(args.grid), workers=args.workers)
    out = args.outdir
    with open(os.path.join(out, "scenario.txt"), "w") as fh:
        fh.write(simulation.format_scenario(scenario))
    write_csv(os.path.join(out, "auroc_summary.csv"), ["model", "mean", "q2.5", "q97.5", "n_used"],
              [(m, report.fmt(a), report.fmt(lo), report.fmt(hi), n) for m, a, lo, hi, n in result.summary_rows()])
    rows = []
    for r in result.replications:
        if r.degenerate:
            rows.append((r.replication, "", "", r.degenerate))
        for m in models:
            if m in r.aurocs:
                rows.append((r.replication, m, r.aurocs[m], json.dumps(r.params[m], sort_keys=True)))
    write_csv(os.path.join(out, "replications.csv"), ["replication", "model", "auroc", "params"], rows)
    for m, band in result.bands.items():
        report.write_band_csv(os.path.join(out, f"roc_{m}.csv"), band)
    title = f"{args.preset or os.path.basename(args.scenario)}: {len(result.used)} replications"
    if result.n_degenerate:
        title += f" ({result.n_degenerate} degenerate excluded)"
    report.write_svg(os.path.join(out, "roc.svg"), report.roc_band_svg(result.bands, title))
    return EXIT_OK


def _event_labels(data: Dataset, specs, threshold):
    y = data.y
    if threshold is not None:
        return (y >= threshold).astype(float)
    if np.all((y == 0) | (y == 1)):
        return y.astype(float)
    for s in specs:
        if math.isfinite(s.upper):
            return (y >= s.upper).astype(float)
    raise SchemaError("cannot define events: target is not 0/1 and no --event-threshold or upper bound given")


def _safe_label(text: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in text)


def cmd_evaluate(args):
    specs = [parse_model_spec(s) for s in args.models]
    data = read_csv(args.data, target=args.target, time_col=args.time_col)
    labels = _event_labels(data, specs, args.event_threshold)
    cfg = TemporalCvConfig(args.min_train, args.maturity_days)
    os.makedirs(args.outdir, exist_ok=True)
    results = {}
    for spec in specs:
        def factory(train, spec=spec):
            model, _ = fit_spec(spec, train, event_threshold=args.event_threshold)
            return lambda X: event_scores(model, X)

        res = temporal_cv(data, factory, cfg, labels=labels)
        if res.empty:
            raise DataError(f"temporal cross-validation scored no rows: {res.message}")
        if res.roc is None:
            raise SingleClassError(res.message)
        results[spec.label] = res
    first = next(iter(results.values()))
    curves = {k: r.roc for k, r in results.items()}
    write_csv(os.path.join(args.outdir, "auroc.csv"), ["model", "auroc", "n_scored"],
              [(k, report.fmt(r.roc.auroc), len(r.rows)) for k, r in results.items()])
    for i, (k, r) in enumerate(results.items()):
        report.write_curve_csv(os.path.join(args.outdir, f"roc_{i + 1}_{_safe_label(k)}.csv"), r.roc)
    header = ["row", "time", "label"] + list(results)
    write_csv(os.path.join(args.outdir, "scores.csv"), header,
              ([int(first.rows[i]), data.timestamps[first.rows[i]], first.labels[i]]
               + [r.scores[i] for r in results.values()] for i in range(len(first.rows))))
    keys = list(results)
    rows = []
    for i in range(len(keys)):
        for j in range(i + 1, len(keys)):
            d = delong_test(results[keys[i]].scores, results[keys[j]].scores, first.labels)
            rows.append((keys[i], keys[j], d.auroc_a, d.auroc_b, d.p_value))
    write_csv(os.path.join(args.outdir, "delong.csv"), ["model_a", "model_b", "auroc_a", "auroc_b", "p_value"], rows)
    report.write_svg(os.path.join(args.outdir, "roc.svg"),
                     report.roc_curves_svg(curves, f"temporal cross-validation ({len(first.rows)} rows)"))
    return EXIT_OK


def _read_column(path, preferred):
    import csv

    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SchemaError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if preferred in header:
        j = header.index(preferred)
    elif len(header) == 1:
        j = 0
    else:
        raise SchemaError(f"{path}: expected a column named {preferred!r} or a single column")
    try:
        return np.array([float(r[j]) for r in rows[1:] if r], dtype=float)
    except (ValueError, IndexError):
        raise SchemaError(f"{path}: non-numeric or missing value in column {header[j]!r}") from None


def cmd_compare(args):
    a = _read_column(args.scores_a, args.score_column)
    b = _read_column(args.scores_b, args.score_column)
    y = _read_column(args.labels, args.label_column)
    if not (len(a) == len(b) == len(y)):
        raise SchemaError("score and label files differ in length")
    d = delong_test(a, b, y)
    header = ["model_a", "model_b", "auroc_a", "auroc_b", "p_value"]
    row = [args.name_a, args.name_b, d.auroc_a, d.auroc_b, d.p_value]
    if args.out:
        write_csv(args.out, header, [row])
    print(",".join(header))
    print(",".join(str(report_value(v)) for v in row))
    return EXIT_OK


def report_value(v):
    return repr(float(v)) if isinstance(v, (float, np.floating)) else v


def _resolve_var(data: Dataset, text: str) -> int:
    try:
        return data.column(int(text)) if text.strip().lstrip("-").isdigit() else data.column(text.strip())
    except KeyError as e:
        raise SchemaError(str(e.args[0])) from None


def cmd_explain(args):
    model = load_model(args.model)
    data = read_csv(args.data, target=args.target, time_col=args.time_col)
    if data.p != model.n_features:
        raise SchemaError(f"model expects {model.n_features} features, data has {data.p}")
    modes = int(args.importance) + (args.pd is not None) + (args.local is not None)
    if modes != 1:
        raise UsageError("choose exactly one of --importance, --pd, --local")
    os.makedirs(args.outdir, exist_ok=True)
    out = args.outdir
    names = data.feature_names
    if args.importance:
        if not isinstance(model, BoostedEnsemble):
            raise SchemaError("variable importance needs a boosted model")
        rep = interpret.variable_importance(model, data.p, names)
        write_csv(os.path.join(out, "importance.csv"), ["variable", "score"], rep.ranked())
        s = report.Series("importance", np.arange(1, data.p + 1), rep.scores)
        report.write_svg(os.path.join(out, "importance.svg"),
                         report.line_plot_svg([s], "variable importance", "variable index", "importance"))
        return EXIT_OK
    if args.pd is not None:
        _require_complete(data)
        vars_ = [_resolve_var(data, v) for v in _csv_list(args.pd)]
        if len(vars_) not in (1, 2):
            raise UsageError("--pd takes one or two variables")
        pd = interpret.partial_dependence(model, data, vars_, args.grid_size)
        if len(vars_) == 1:
            write_csv(os.path.join(out, "pd.csv"), [names[vars_[0]], "value"], zip(pd.grid[0], pd.values))
            s = report.Series(names[vars_[0]], pd.grid[0], pd.values)
            report.write_svg(os.path.join(out, "pd.svg"), report.line_plot_svg(
                [s], f"partial dependence on {names[vars_[0]]}", names[vars_[0]], "F"))
        else:
            g1, g2 = pd.grid
            write_csv(os.path.join(out, "pd2d.csv"), [names[vars_[0]], names[vars_[1]], "value"],
                      ((a, b, pd.values[i, k]) for i, a in enumerate(g1) for k, b in enumerate(g2)))
        return EXIT_OK
    # local explanations
    _require_complete(data)
    text = args.local.strip()
    if text.lstrip("-").isdigit():
        row = int(text)
        if not 0 <= row < data.n:
            raise SchemaError(f"row {row} out of range (data has {data.n} rows)")
        x_prime = data.X[row]
    else:
        try:
            x_prime = np.array([float(v) for v in _csv_list(text)])
        except ValueError:
            raise SchemaError(f"--local must be a row index or a comma-separated vector, got {text!r}") from None
        if len(x_prime) != data.p:
            raise SchemaError(f"--local vector has {len(x_prime)} values, model expects {data.p}")
    summary = interpret.DataSummary.from_data(data)
    delta = args.delta
    if args.interval == "iv" and not (delta is not None and delta > 0):
        raise UsageError("--interval iv needs a positive --delta")
    if args.var is not None:
        v = _resolve_var(data, args.var)
        interval = interpret.local_interval(args.interval, x_prime, v, summary, delta)
        lp = interpret.local_partial_dependence(model, x_prime, v, interval, args.grid_size)
        write_csv(os.path.join(out, "local_pd.csv"), [names[v], "value"], zip(lp.grid, lp.values))
        marker = report.Series(f"x' (F = {lp.prediction:.4g})", np.array([lp.x_value]), np.array([lp.prediction]))
        s = report.Series(names[v], lp.grid, lp.values)
        report.write_svg(os.path.join(out, "local_pd.svg"), report.line_plot_svg(
            [s, marker], f"local partial dependence on {names[v]}", names[v], "F"))
    else:
        scores = interpret.local_importance(model, x_prime, summary, args.interval, args.winsorize,
                                            args.grid_size, delta)
        order = np.argsort(-scores, kind="stable")
        write_csv(os.path.join(out, "local_importance.csv"), ["variable", "score"],
                  [(names[j], scores[j]) for j in order])
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="grabit", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="fit a model and write it as JSON")
    t.add_argument("--data", required=True)
    t.add_argument("--target", required=True)
    t.add_argument("--time-col", help="column to exclude from the features")
    t.add_argument("--model", choices=MODEL_KINDS, default="grabit")
    t.add_argument("--lower", type=_bound, default=-math.inf)
    t.add_argument("--upper", type=_bound, default=math.inf)
    t.add_argument("--sigma", type=float)
    t.add_argument("--sigma-search", action="store_true", help="profile-likelihood search over the grid")
    t.add_argument("--sigma-grid", type=lambda s: [float(v) for v in _csv_list(s)])
    t.add_argument("--no-refine", action="store_true", help="skip golden-section refinement")
    t.add_argument("--trees", type=int, default=100)
    t.add_argument("--shrinkage", type=float, default=0.1)
    t.add_argument("--depth", type=int, default=3)
    t.add_argument("--min-leaf", type=int, default=1)
    t.add_argument("--log-transform", help="comma-separated feature columns to log-transform")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_train)

    q = sub.add_parser("predict", help="score a CSV with a saved model")
    q.add_argument("--model", required=True)
    q.add_argument("--data", required=True)
    q.add_argument("--target", help="column to exclude from the features")
    q.add_argument("--time-col", help="column to exclude from the features")
    q.add_argument("--output", choices=("latent", "prob", "both"), default="both")
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_predict)

    s = sub.add_parser("simulate", help="run the simulation study")
    s.add_argument("--scenario")
    s.add_argument("--preset")
    s.add_argument("--models", default=",".join(simulation.MODELS))
    s.add_argument("--replications", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--grid", choices=("reduced", "full"), default="reduced")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--outdir", required=True)
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("evaluate", help="temporal cross-validation of model specs")
    e.add_argument("--data", required=True)
    e.add_argument("--target", required=True)
    e.add_argument("--time-col", required=True)
    e.add_argument("--models", nargs="+", required=True, help='specs like "grabit:upper=60,sigma=grid"')
    e.add_argument("--min-train", type=int, default=100)
    e.add_argument("--maturity-days", type=float, default=61.0)
    e.add_argument("--event-threshold", type=float, help="events are target >= this value")
    e.add_argument("--outdir", required=True)
    e.set_defaults(func=cmd_evaluate)

    c = sub.add_parser("compare", help="DeLong test for two score files")
    c.add_argument("--scores-a", required=True)
    c.add_argument("--scores-b", required=True)
    c.add_argument("--labels", required=True)
    c.add_argument("--score-column", default="score")
    c.add_argument("--label-column", default="label")
    c.add_argument("--name-a", default="a")
    c.add_argument("--name-b", default="b")
    c.add_argument("--out")
    c.set_defaults(func=cmd_compare)

    x = sub.add_parser("explain", help="importance and dependence plots")
    x.add_argument("--model", required=True)
    x.add_argument("--data", required=True)
    x.add_argument("--target", help="column to exclude from the features")
    x.add_argument("--time-col", help="column to exclude from the features")
    x.add_argument("--importance", action="store_true")
    x.add_argument("--pd", help="variable or var1,var2")
    x.add_argument("--local", help="row index or comma-separated feature vector")
    x.add_argument("--var", help="variable for the local dependence curve (omit for local importance)")
    x.add_argument("--interval", choices=interpret.STRATEGIES, default="i")
    x.add_argument("--delta", type=float, help="half-width for interval strategy iv")
    x.add_argument("--winsorize", action="store_true")
    x.add_argument("--grid-size", type=int, default=50)
    x.add_argument("--outdir", required=True)
    x.set_defaults(func=cmd_explain)
    return p


def _attach_negative_values(argv):
    """Rewrite ``--opt -inf`` as ``--opt=-inf``; argparse would take ``-inf`` for a flag."""
    out = []
    for a in argv:
        if out and out[-1].startswith("--") and "=" not in out[-1] and a.lower() in ("-inf", "-infinity"):
            out[-1] = f"{out[-1]}={a}"
        else:
            out.append(a)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = _attach_negative_values(list(sys.argv[1:] if argv is None else argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as e:
        print(f"grabit: usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, IsADirectoryError, PermissionError) as e:
        print(f"grabit: cannot read {e.filename}: {e.strerror}", file=sys.stderr)
        return EXIT_IO
    except BoundsViolationError as e:
        print(f"grabit: response outside the censoring bounds: {e}", file=sys.stderr)
        return EXIT_BOUNDS
    except (InvalidSigmaError, FloatingPointError, np.linalg.LinAlgError) as e:
        print(f"grabit: numerical error: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, SingleClassError, json.JSONDecodeError, UnicodeDecodeError) as e:
        print(f"grabit: data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as e:
        print(f"grabit: invalid input: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
