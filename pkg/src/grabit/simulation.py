"""Synthetic class-imbalance data with auxiliary responses, and the replication study.

Data follow

    Y* = F(X) + eps,            eps ~ N(0, sigma_eps^2),  X_k iid Unif(-1, 1)
    C  = 1{Y* >= y_u}
    Y_a = C*y_u + (1 - C)*(F(X) + eps_a),  eps_a ~ N(mu_a, sigma_a^2)

or, for the independent variant, ``Y_a = C*y_u + (1 - C)*eps_a``.  Auxiliary
draws that would land at or above ``y_u`` for a C = 0 row are redrawn so that
the Tobit observation rule holds exactly.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .boosting import bernoulli_config, fit_boosted, grabit_config, predict_default_prob
from .data import Dataset
from .evaluation import SingleClassError, aggregate_roc, auroc, roc_auroc
from .linear import fit_linear_tobit, fit_logit
from .losses import CensoringBounds

DECISION_FUNCTIONS = ("interaction", "linear", "cosine")
AUX_KINDS = ("gaussian", "independent")
ROLES = {"train": 0, "valid": 1, "test": 2}
MODELS = ("grabit", "boosted_logit", "logit", "tobit")
MAX_REDRAWS = 1000


def f_interaction(X) -> np.ndarray:
    """0.3 * sum_{k<=5} (x_k)_+  +  sum over pairs k<j<=4 with k<=3 of (x_k x_j)_+."""
    X = np.asarray(X, dtype=float)
    out = 0.3 * np.maximum(X[:, :5], 0.0).sum(axis=1)
    for k in range(3):
        for j in range(k + 1, 4):
            out += np.maximum(X[:, k] * X[:, j], 0.0)
    return out


def f_linear(X) -> np.ndarray:
    return 0.25 * np.asarray(X, dtype=float)[:, :50].sum(axis=1)


def f_cosine(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)[:, :20]
    return 2.0 * np.cos(4.0 * math.pi * np.sqrt(np.sum(X * X, axis=1)))


_FUNCS = {"interaction": (f_interaction, 30), "linear": (f_linear, 50), "cosine": (f_cosine, 20)}


def decision_fn_eval(kind: str, X) -> np.ndarray:
    """Evaluate a decision function on rows of ``X`` (a single vector is one row)."""
    fn, p = _FUNCS[kind]
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != p:
        raise ValueError(f"decision function {kind!r} needs {p} variables, got {X.shape[1]}")
    out = fn(X)
    return float(out[0]) if single else out


@dataclass(frozen=True)
class SimulationScenario:
    decision_fn: str = "interaction"
    aux: str = "gaussian"
    p: int = 30
    sigma_eps: float = 0.7
    y_u: float = 2.84
    mu_a: float = -5.0
    sigma_a: float = 0.98
    n_train: int = 500
    n_valid: int = 500
    n_test: int = 500
    replications: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.decision_fn not in _FUNCS:
            raise ValueError(f"unknown decision function {self.decision_fn!r}")
        if self.aux not in AUX_KINDS:
            raise ValueError(f"unknown auxiliary kind {self.aux!r}")
        if self.p != _FUNCS[self.decision_fn][1]:
            raise ValueError(f"{self.decision_fn} needs p = {_FUNCS[self.decision_fn][1]}")
        if not (self.sigma_eps > 0 and self.sigma_a > 0):
            raise ValueError("sigma_eps and sigma_a must be positive")
        for name in ("n_train", "n_valid", "n_test", "replications"):
            if int(getattr(self, name)) != getattr(self, name) or getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer")

    @property
    def bounds(self) -> CensoringBounds:
        return CensoringBounds(-math.inf, self.y_u)


_CORR = dict(decision_fn="interaction", p=30, sigma_eps=0.7, y_u=2.84)

# Constants for the linear and cosine designs come from scripts/calibrate_presets.py
# (y_u: 95% quantile of Y*, sigma_eps: sd(F), sigma_a: correlation 0.5 on C = 0 rows,
# mu_a: largest integer keeping 10^7 auxiliary draws below y_u).
LINEAR_CONSTANTS = dict(sigma_eps=1.021, y_u=2.3759, sigma_a=1.6829, mu_a=-9.0)
COSINE_CONSTANTS = dict(sigma_eps=1.4146, y_u=3.2619, sigma_a=2.4187, mu_a=-11.0)

PRESETS = {
    "corr0.75": SimulationScenario(**_CORR, mu_a=-4.0, sigma_a=0.5),
    "corr0.5": SimulationScenario(**_CORR, mu_a=-5.0, sigma_a=0.98),
    "corr0.25": SimulationScenario(**_CORR, mu_a=-9.0, sigma_a=2.2),
    "corr0": SimulationScenario(**_CORR, aux="independent", mu_a=-4.0, sigma_a=1.0),
    "linear": SimulationScenario(decision_fn="linear", p=50, **LINEAR_CONSTANTS),
    "cosine": SimulationScenario(decision_fn="cosine", p=20, n_train=10000, n_valid=10000,
                                 n_test=10000, **COSINE_CONSTANTS),
}
for _n in (100, 200, 500, 2000, 10000):
    PRESETS[f"n{_n}"] = replace(PRESETS["corr0.5"], n_train=_n, n_valid=_n, n_test=_n)
for _rate, _yu in ((1, 3.89), (2, 3.44), (10, 2.38), (20, 1.89)):
    PRESETS[f"imb{_rate}"] = replace(PRESETS["corr0.5"], y_u=_yu)
PRESETS["nonlinear"] = PRESETS["cosine"]


def get_preset(name: str) -> SimulationScenario:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; known: {', '.join(sorted(PRESETS))}") from None


def substream(seed: int, replication: int, role: int) -> np.random.Generator:
    """PCG64 generator keyed by (seed, replication, role) through SeedSequence spawn keys."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(replication, role))))


def draw(scenario: SimulationScenario, n: int, rng: np.random.Generator, redraw: bool = True):
    """Draw ``n`` rows; returns (X, F, C, Y_a, n_redrawn)."""
    s = scenario
    X = rng.uniform(-1.0, 1.0, size=(n, s.p))
    F = _FUNCS[s.decision_fn][0](X)
    ystar = F + rng.normal(0.0, s.sigma_eps, size=n)
    C = ystar >= s.y_u
    base = F if s.aux == "gaussian" else np.zeros(n)
    ya = base + rng.normal(s.mu_a, s.sigma_a, size=n)
    bad = ~C & (ya >= s.y_u)
    n_bad = int(bad.sum())
    if redraw:
        for _ in range(MAX_REDRAWS):
            if not bad.any():
                break
            ya[bad] = base[bad] + rng.normal(s.mu_a, s.sigma_a, size=int(bad.sum()))
            bad = ~C & (ya >= s.y_u)
        else:
            raise RuntimeError("auxiliary redraws did not settle below y_u")
    ya[C] = s.y_u
    return X, F, C.astype(float), ya, n_bad


def simulate(scenario: SimulationScenario, replication: int = 0):
    """Train, validation and test datasets of one replication.

    ``y`` holds the auxiliary response, ``labels`` the class C and ``latent`` F(X).
    """
    out = []
    for role, n in (("train", scenario.n_train), ("valid", scenario.n_valid), ("test", scenario.n_test)):
        X, F, C, ya, n_bad = draw(scenario, n, substream(scenario.seed, replication, ROLES[role]))
        out.append(Dataset(X, ya, labels=C, latent=F, meta={"role": role, "redrawn": n_bad}))
    return tuple(out)


# ---------------------------------------------------------------------------
# study runner


@dataclass(frozen=True)
class TuningGrid:
    n_trees: tuple = (10, 100, 1000)
    shrinkage: tuple = (0.1, 0.01, 0.001)
    depth: tuple = (3, 5, 10)
    sigma: tuple = (0.01, 0.1, 1.0, 10.0, 100.0)


REDUCED_GRID = TuningGrid(n_trees=(100, 1000), shrinkage=(0.1, 0.01), depth=(3, 5))


@dataclass
class ReplicationResult:
    replication: int
    aurocs: dict = field(default_factory=dict)          # model -> test AUROC
    curves: dict = field(default_factory=dict)          # model -> RocCurve
    params: dict = field(default_factory=dict)          # model -> chosen tuning parameters
    degenerate: str = ""                                # reason when excluded


@dataclass
class StudyResult:
    scenario: SimulationScenario
    models: tuple
    replications: list
    bands: dict                                         # model -> RocBand

    @property
    def n_degenerate(self) -> int:
        return sum(1 for r in self.replications if r.degenerate)

    @property
    def used(self) -> list:
        return [r for r in self.replications if not r.degenerate]

    def mean_auroc(self, model: str) -> float:
        return self.bands[model].mean_auroc

    def summary_rows(self):
        """(model, mean, q2.5, q97.5, n_used) per model."""
        return [(m, b.mean_auroc, b.auroc_ci[0], b.auroc_ci[1], b.n_curves) for m, b in self.bands.items()]


def _staged_tune(train, valid, make_config, grid: TuningGrid, score, extra=((),)):
    """Best (auroc, params, model, M) over a boosting grid using staged validation scores.

    One ensemble with max(M) trees is fitted per (extra, shrinkage, depth); the
    grid values of M are read off its stages.  Earlier grid entries win ties.
    """
    m_grid = sorted(grid.n_trees)
    best = None
    for ex in extra:
        for nu in grid.shrinkage:
            for depth in grid.depth:
                model = fit_boosted(train, make_config(*ex, n_trees=m_grid[-1], shrinkage=nu, max_depth=depth))
                want = set(m_grid)
                for m, F in enumerate(model.staged_predict(valid.X)):
                    if m in want:
                        a = auroc(score(model, F), valid.labels)
                        if best is None or a > best[0]:
                            params = dict(zip(("sigma",), ex)) | {"n_trees": m, "shrinkage": nu, "depth": depth}
                            best = (a, params, model, m)
    return best


def _grabit_score(model, F):
    sigma = model.loss.sigma
    from scipy.special import ndtr

    return ndtr((F - model.loss.bounds.upper) / sigma)


def _run_replication(scenario: SimulationScenario, models, grid: TuningGrid, rep: int) -> ReplicationResult:
    train, valid, test = simulate(scenario, rep)
    res = ReplicationResult(rep)
    for name, d in (("train", train), ("validation", valid), ("test", test)):
        if d.labels.min() == d.labels.max():
            res.degenerate = f"single-class {name} split"
            return res
    y_u = scenario.y_u
    for m in models:
        if m == "grabit":
            def make(sigma, n_trees, shrinkage, max_depth):
                return grabit_config(-math.inf, y_u, sigma, n_trees, shrinkage, max_depth)

            _, params, model, M = _staged_tune(train, valid, make, grid, _grabit_score,
                                               extra=[(s,) for s in grid.sigma])
            scores = predict_default_prob(model.truncate(M), test.X)
        elif m == "boosted_logit":
            ctrain = Dataset(train.X, train.labels)

            def make(n_trees, shrinkage, max_depth):
                return bernoulli_config(n_trees, shrinkage, max_depth)

            _, params, model, M = _staged_tune(ctrain, valid, make, grid, lambda _m, F: F)
            scores = model.predict(test.X, n_trees=M)
        elif m == "logit":
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                model = fit_logit(Dataset(train.X, train.labels))
            params = {"converged": model.converged}
            scores = model.predict(test.X)
        elif m == "tobit":
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                model = fit_linear_tobit(train, scenario.bounds)
            params = {"converged": model.converged, "sigma": model.sigma}
            scores = model.predict_proba(test.X)
        else:
            raise ValueError(f"unknown model {m!r}; choose from {MODELS}")
        curve = roc_auroc(scores, test.labels)
        res.curves[m] = curve
        res.aurocs[m] = curve.auroc
        res.params[m] = params
    return res


def _run_replication_star(args):
    return _run_replication(*args)


def run_study(scenario: SimulationScenario, models=MODELS, grid: TuningGrid = REDUCED_GRID,
              replications: int | None = None, workers: int = 1, progress=None) -> StudyResult:
    """Simulate, tune on validation AUROC, score the test split, and aggregate ROC curves.

    Tuning is redone in every replication.  Replications whose train,
    validation or test split has a single class are excluded and counted.
    Results are ordered by replication index whatever the worker count.
    """
    models = tuple(models)
    for m in models:
        if m not in MODELS:
            raise ValueError(f"unknown model {m!r}; choose from {MODELS}")
    reps = scenario.replications if replications is None else replications
    jobs = [(scenario, models, grid, r) for r in range(reps)]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(workers) as ex:
            results = list(ex.map(_run_replication_star, jobs))
    else:
        results = []
        for job in jobs:
            results.append(_run_replication_star(job))
            if progress is not None:
                progress(results[-1])
    used = [r for r in results if not r.degenerate]
    if not used:
        raise SingleClassError("every replication was degenerate")
    bands = {m: aggregate_roc([r.curves[m] for r in used]) for m in models}
    return StudyResult(scenario, models, results, bands)


# ---------------------------------------------------------------------------
# scenario files


def _coerce(name: str, text: str):
    types = {f.name: f.type for f in fields(SimulationScenario)}
    if name not in types:
        raise KeyError(f"unknown scenario key {name!r}")
    kind = types[name]
    if kind in ("int", int):
        return int(text)
    if kind in ("float", float):
        return float(text)
    return text


def parse_scenario(text: str) -> SimulationScenario:
    """Parse ``key = value`` lines; ``preset`` (if given) supplies defaults, other keys override."""
    values = {}
    preset = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        if key == "preset":
            preset = val
        else:
            values[key] = _coerce(key, val)
    base = get_preset(preset) if preset is not None else SimulationScenario()
    return replace(base, **values)


def read_scenario(path) -> SimulationScenario:
    with open(path) as fh:
        return parse_scenario(fh.read())


def format_scenario(scenario: SimulationScenario) -> str:
    return "".join(f"{k} = {v}\n" for k, v in asdict(scenario).items())
