"""Choosing the Tobit scale sigma by profile likelihood or by validation AUROC."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize

from .boosting import BoostConfig, fit_boosted, predict_default_prob
from .data import Dataset
from .evaluation import SingleClassError, auroc
from .losses import TobitLoss

DEFAULT_GRID = (0.01, 0.1, 1.0, 10.0, 100.0)


@dataclass(frozen=True)
class SigmaSearchConfig:
    """Grid of candidate sigmas (any order; sorted internally) and validation protocol.

    ``refine`` runs golden-section search on log(sigma) inside the grid bracket
    around the best grid point.  For cross-validation either pass a validation
    set to ``select_sigma_cv`` or set ``cv_folds``.
    """

    grid: tuple = DEFAULT_GRID
    refine: bool = True
    refine_xtol: float = 1e-4
    refine_maxiter: int = 60
    cv_folds: int = 5
    seed: int = 0

    def __post_init__(self):
        g = tuple(float(s) for s in self.grid)
        if not g:
            raise ValueError("sigma grid is empty")
        if any(not (s > 0 and math.isfinite(s)) for s in g):
            raise ValueError("sigma grid values must be positive and finite")
        if len(set(g)) != len(g):
            raise ValueError("sigma grid has duplicate values")
        object.__setattr__(self, "grid", g)
        if self.cv_folds < 2:
            raise ValueError("cv_folds must be at least 2")

    @property
    def sorted_grid(self) -> tuple:
        return tuple(sorted(self.grid))


@dataclass
class SigmaTrace:
    sigma: list = field(default_factory=list)
    value: list = field(default_factory=list)
    source: list = field(default_factory=list)   # "grid" or "refine"

    def add(self, sigma, value, source):
        self.sigma.append(float(sigma))
        self.value.append(float(value))
        self.source.append(source)

    def rows(self):
        return list(zip(self.sigma, self.value, self.source))


def _with_sigma(config: BoostConfig, sigma: float) -> BoostConfig:
    loss = config.loss
    if not isinstance(loss, TobitLoss):
        raise TypeError("sigma selection needs a Tobit-loss boosting configuration")
    return replace(config, loss=TobitLoss(loss.bounds, sigma, loss.hessian_floor))


def profile_loglik(sigma: float, data: Dataset, config: BoostConfig) -> float:
    """Negative total training loss of the ensemble fitted with sigma held fixed."""
    model = fit_boosted(data, _with_sigma(config, sigma))
    return -model.train_loss[-1]


def _best_index(values) -> int | None:
    """First index of the maximum among finite values (ties resolve to the lower sigma)."""
    best = None
    for i, v in enumerate(values):
        if math.isfinite(v) and (best is None or v > values[best]):
            best = i
    return best


def select_sigma(data: Dataset, config: BoostConfig, search: SigmaSearchConfig = SigmaSearchConfig(),
                 loglik=None):
    """Maximize the profile likelihood over the log-sigma grid, then optionally refine.

    Returns ``(sigma_hat, trace)``.  ``loglik`` overrides the profile function
    (signature ``loglik(sigma) -> float``), mainly for testing.
    """
    if loglik is None:
        def loglik(s):
            return profile_loglik(s, data, config)

    grid = search.sorted_grid
    trace = SigmaTrace()
    seen = {}
    values = []
    for s in grid:
        v = float(loglik(s))
        seen[math.log(s)] = v
        values.append(v)
        trace.add(s, v, "grid")
    k = _best_index(values)
    if k is None:
        raise ValueError("profile likelihood is non-finite at every grid point")
    best_sigma, best_value = grid[k], values[k]
    if not search.refine or k == 0 or k == len(grid) - 1:
        return best_sigma, trace
    lo, hi = values[k - 1], values[k + 1]
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < best_value and hi < best_value):
        return best_sigma, trace

    def neg(phi):
        if phi not in seen:
            s = math.exp(phi)
            seen[phi] = float(loglik(s))
            trace.add(s, seen[phi], "refine")
        v = seen[phi]
        return -v if math.isfinite(v) else math.inf

    phis = [math.log(grid[k - 1]), math.log(grid[k]), math.log(grid[k + 1])]
    optimize.minimize_scalar(neg, bracket=tuple(phis), method="golden",
                             options={"xtol": search.refine_xtol, "maxiter": search.refine_maxiter})
    # keep the best evaluation; never worse than the grid maximum
    for s, v, src in trace.rows():
        if src == "refine" and math.isfinite(v) and v > best_value:
            best_sigma, best_value = s, v
    return best_sigma, trace


def _default_labels(data: Dataset, config: BoostConfig) -> np.ndarray:
    if data.labels is not None:
        return data.labels
    return (data.y >= config.loss.bounds.upper).astype(float)


def select_sigma_cv(data: Dataset, config: BoostConfig, search: SigmaSearchConfig = SigmaSearchConfig(),
                    validation: Dataset | None = None):
    """Grid sigma maximizing validation AUROC of default probabilities.

    With ``validation`` the model is fitted on ``data`` and scored there;
    otherwise ``search.cv_folds`` seeded folds are used and AUROCs averaged.
    Labels come from ``labels`` when present, else from ``y >= upper``.
    Returns ``(sigma_hat, trace)``; ties resolve to the lower sigma.
    """
    grid = search.sorted_grid
    if validation is not None:
        splits = [(data, validation)]
    else:
        rng = np.random.default_rng(search.seed)
        perm = rng.permutation(data.n)
        folds = np.array_split(perm, search.cv_folds)
        splits = []
        for i, fold in enumerate(folds):
            rest = np.concatenate([f for j, f in enumerate(folds) if j != i])
            splits.append((data.subset(np.sort(rest)), data.subset(np.sort(fold))))
    for _, valid in splits:
        lab = _default_labels(valid, config)
        if lab.min() == lab.max():
            raise SingleClassError("a validation set contains a single class")
    trace = SigmaTrace()
    values = []
    for s in grid:
        cfg = _with_sigma(config, s)
        aucs = []
        for train, valid in splits:
            model = fit_boosted(train, cfg)
            aucs.append(auroc(predict_default_prob(model, valid.X), _default_labels(valid, config)))
        v = float(np.mean(aucs))
        values.append(v)
        trace.add(s, v, "grid")
    k = _best_index(values)
    if k is None:
        raise ValueError("validation AUROC is undefined at every grid point")
    return grid[k], trace
