"""Variable importance, partial dependence, and local explanations for fitted models.

Anything with a ``predict(X)`` method works for the dependence plots; variable
importance needs a boosted ensemble because it reads the recorded split gains.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tree import LEAF

WINSOR_QUANTILES = (0.025, 0.975)
STRATEGIES = ("i", "ii", "iii", "iv")


class DegenerateIntervalError(ValueError):
    pass


@dataclass(frozen=True)
class ImportanceReport:
    scores: np.ndarray        # indexed by variable
    order: np.ndarray         # variable indices, most important first
    names: list

    def ranked(self):
        return [(self.names[j], float(self.scores[j])) for j in self.order]


def variable_importance(model, p: int | None = None, names=None) -> ImportanceReport:
    """Mean over trees of the summed split gains per splitting variable."""
    p = model.n_features if p is None else p
    total = np.zeros(p)
    for t in model.trees:
        inner = t.feature != LEAF
        total += np.bincount(t.feature[inner], weights=t.gain[inner], minlength=p)[:p]
    scores = total / len(model.trees) if model.trees else total
    order = np.argsort(-scores, kind="stable")
    names = list(names) if names is not None else [f"x{j + 1}" for j in range(p)]
    return ImportanceReport(scores, order, names)


@dataclass(frozen=True)
class PartialDependence:
    variables: tuple
    grid: tuple               # one array per variable
    values: np.ndarray        # shape (g,) or (g1, g2)


def _matrix(data) -> np.ndarray:
    X = np.asarray(getattr(data, "X", data), dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("partial dependence needs a non-empty 2-d feature matrix")
    return X


def partial_dependence(model, data, variables, grid_size: int = 50) -> PartialDependence:
    """Average prediction over all rows with the chosen variables overridden by grid values.

    Each grid spans the observed [min, max] of its variable.
    """
    X = _matrix(data)
    variables = tuple(int(v) for v in np.atleast_1d(variables))
    if len(variables) not in (1, 2):
        raise ValueError("partial dependence takes one or two variables")
    grids = tuple(np.linspace(X[:, v].min(), X[:, v].max(), grid_size) for v in variables)
    Xw = X.copy()
    if len(variables) == 1:
        (v,), (g,) = variables, grids
        values = np.empty(len(g))
        for i, val in enumerate(g):
            Xw[:, v] = val
            values[i] = model.predict(Xw).mean()
    else:
        (v1, v2), (g1, g2) = variables, grids
        values = np.empty((len(g1), len(g2)))
        for i, a in enumerate(g1):
            Xw[:, v1] = a
            for k, b in enumerate(g2):
                Xw[:, v2] = b
                values[i, k] = model.predict(Xw).mean()
    return PartialDependence(variables, grids, values)


@dataclass(frozen=True)
class DataSummary:
    """Per-variable training summaries used to set local intervals."""

    minimum: np.ndarray
    maximum: np.ndarray
    q_low: np.ndarray
    q_high: np.ndarray
    sd: np.ndarray

    @classmethod
    def from_data(cls, data) -> "DataSummary":
        X = _matrix(data)
        lo, hi = WINSOR_QUANTILES
        return cls(np.nanmin(X, axis=0), np.nanmax(X, axis=0), np.nanquantile(X, lo, axis=0),
                   np.nanquantile(X, hi, axis=0), np.nanstd(X, axis=0, ddof=1) if len(X) > 1
                   else np.zeros(X.shape[1]))


def local_interval(strategy: str, x_prime, var: int, summary: DataSummary, delta=None):
    """Interval borders for sweeping ``var`` around ``x_prime``.

    (i) data min/max, (ii) 2.5%/97.5% quantiles, (iii) x'_s +/- sd, (iv) x'_s +/- delta.
    """
    xs = float(x_prime[var])
    if strategy == "i":
        return float(summary.minimum[var]), float(summary.maximum[var])
    if strategy == "ii":
        return float(summary.q_low[var]), float(summary.q_high[var])
    if strategy == "iii":
        sd = float(summary.sd[var])
        return xs - sd, xs + sd
    if strategy == "iv":
        d = float(np.broadcast_to(delta, np.shape(x_prime))[var]) if delta is not None else 0.0
        if not d > 0:
            raise ValueError("strategy iv needs a positive delta")
        return xs - d, xs + d
    raise ValueError(f"unknown interval strategy {strategy!r}; choose one of {STRATEGIES}")


@dataclass(frozen=True)
class LocalDependence:
    variable: int
    grid: np.ndarray
    values: np.ndarray
    x_value: float
    prediction: float       # model output at x'


def local_partial_dependence(model, x_prime, var: int, interval, grid_size: int = 100) -> LocalDependence:
    """Sweep one variable over ``interval`` holding the others at ``x_prime``.

    The grid always contains ``x_prime[var]`` itself, so the curve passes
    through the model's prediction at ``x_prime`` exactly.
    """
    x_prime = np.asarray(x_prime, dtype=float)
    lo, hi = map(float, interval)
    if not hi > lo:
        raise DegenerateIntervalError(f"interval [{lo}, {hi}] for variable {var} has no width")
    xs = float(x_prime[var])
    grid = np.union1d(np.linspace(lo, hi, grid_size), [xs])
    rows = np.tile(x_prime, (len(grid), 1))
    rows[:, var] = grid
    values = model.predict(rows)
    pred = float(model.predict(x_prime[None, :])[0])
    return LocalDependence(var, grid, values, xs, pred)


def local_importance(model, x_prime, summary: DataSummary, strategy: str = "i", winsorize: bool = False,
                     grid_size: int = 100, delta=None) -> np.ndarray:
    """Per-variable spread of the local dependence curve.

    The spread is max - min, or the 97.5% minus 2.5% quantile when ``winsorize``.
    """
    x_prime = np.asarray(x_prime, dtype=float)
    out = np.zeros(len(x_prime))
    for s in range(len(x_prime)):
        lo, hi = local_interval(strategy, x_prime, s, summary, delta)
        if not hi > lo:
            continue  # a constant training column carries no local effect
        v = local_partial_dependence(model, x_prime, s, (lo, hi), grid_size).values
        if winsorize:
            q_lo, q_hi = np.quantile(v, WINSOR_QUANTILES)
            out[s] = q_hi - q_lo
        else:
            out[s] = v.max() - v.min()
    return out
