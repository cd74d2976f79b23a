"""ROC/AUROC, the DeLong test, ROC aggregation and temporal cross-validation."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .data import Dataset

GRID_POINTS = 100
BAND_QUANTILES = (0.025, 0.975)
VARIANCE_FLOOR = 1e-300


class SingleClassError(ValueError):
    """Raised when a statistic needs both classes but only one is present."""


def _binary_labels(labels) -> np.ndarray:
    y = np.asarray(labels, dtype=float)
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0/1")
    return y.astype(bool)


def _check_both_classes(pos: np.ndarray):
    if pos.all() or not pos.any():
        raise SingleClassError("both classes must be present")


@dataclass(frozen=True)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray  # score level at which each point is reached; +inf for (0, 0)
    auroc: float

    @property
    def points(self):
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))


def roc_auroc(scores, labels) -> RocCurve:
    """Empirical ROC curve from a descending threshold sweep.

    Tied scores form a single (possibly diagonal) step.  The AUROC is the
    Mann-Whitney statistic with ties counted one half, computed from integer
    counts so that it is exact up to the final division.
    """
    s = np.asarray(scores, dtype=float)
    pos = _binary_labels(labels)
    if s.shape != pos.shape:
        raise ValueError("scores and labels differ in length")
    if np.any(np.isnan(s)):
        raise ValueError("scores contain NaN")
    _check_both_classes(pos)
    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    p_sorted = pos[order]
    # last index of every distinct score level
    ends = np.flatnonzero(np.diff(s_sorted) != 0)
    ends = np.append(ends, len(s) - 1)
    tp = np.cumsum(p_sorted)[ends]
    fp = (ends + 1) - tp
    n1 = int(tp[-1])
    n0 = int(fp[-1])
    tp_step = np.diff(tp, prepend=0)
    fp_step = np.diff(fp, prepend=0)
    # negatives strictly below each level, counted from the bottom
    neg_below = n0 - fp
    u2 = int(np.sum(tp_step.astype(np.int64) * (2 * neg_below + fp_step).astype(np.int64)))
    auroc = u2 / (2.0 * n1 * n0)
    fpr = np.concatenate([[0.0], fp / n0])
    tpr = np.concatenate([[0.0], tp / n1])
    thresholds = np.concatenate([[math.inf], s_sorted[ends]])
    return RocCurve(fpr, tpr, thresholds, auroc)


def auroc(scores, labels) -> float:
    return roc_auroc(scores, labels).auroc


def _midranks(x: np.ndarray) -> np.ndarray:
    return stats.rankdata(x, method="average")


def delong_components(scores, labels):
    """DeLong structural components of one score vector.

    Returns ``(auroc, v10, v01)`` where ``v10[i]`` is the fraction of negatives
    beaten by positive ``i`` and ``v01[j]`` the fraction of positives beating
    negative ``j`` (ties count one half).
    """
    s = np.asarray(scores, dtype=float)
    pos = _binary_labels(labels)
    _check_both_classes(pos)
    x, y = s[pos], s[~pos]
    m, n = len(x), len(y)
    r_all = _midranks(np.concatenate([x, y]))
    r_x = _midranks(x)
    r_y = _midranks(y)
    v10 = (r_all[:m] - r_x) / n
    v01 = 1.0 - (r_all[m:] - r_y) / m
    return float(v10.mean()), v10, v01


@dataclass(frozen=True)
class DelongResult:
    auroc_a: float
    auroc_b: float
    difference: float
    variance: float
    z: float
    p_value: float


def delong_test(scores_a, scores_b, labels) -> DelongResult:
    """Two-sided DeLong test of equal AUROC for paired scores on one sample."""
    a = np.asarray(scores_a, dtype=float)
    b = np.asarray(scores_b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("paired score vectors differ in length")
    auc_a, v10a, v01a = delong_components(a, labels)
    auc_b, v10b, v01b = delong_components(b, labels)
    m, n = len(v10a), len(v01a)
    s10 = np.cov(np.vstack([v10a, v10b])) if m > 1 else np.zeros((2, 2))
    s01 = np.cov(np.vstack([v01a, v01b])) if n > 1 else np.zeros((2, 2))
    contrast = np.array([1.0, -1.0])
    var = float(contrast @ s10 @ contrast / m + contrast @ s01 @ contrast / n)
    diff = auc_a - auc_b
    z = diff / math.sqrt(max(var, VARIANCE_FLOOR))
    p = float(min(1.0, 2.0 * stats.norm.sf(abs(z))))
    return DelongResult(auc_a, auc_b, diff, var, z, p)


@dataclass(frozen=True)
class RocBand:
    grid: np.ndarray
    mean_tpr: np.ndarray
    lower_tpr: np.ndarray
    upper_tpr: np.ndarray
    mean_auroc: float
    auroc_ci: tuple
    n_curves: int


def interpolate_roc(curve: RocCurve, grid) -> np.ndarray:
    """Linear interpolation of TPR onto ``grid``; at a repeated FPR the largest TPR is used."""
    fpr = np.concatenate([[0.0], curve.fpr, [1.0]])
    tpr = np.concatenate([[0.0], curve.tpr, [1.0]])
    ufpr, inv = np.unique(fpr, return_inverse=True)
    utpr = np.full(len(ufpr), -np.inf)
    np.maximum.at(utpr, inv, tpr)
    return np.interp(grid, ufpr, utpr)


def aggregate_roc(curves, grid_points: int = GRID_POINTS) -> RocBand:
    curves = list(curves)
    if not curves:
        raise ValueError("no ROC curves to aggregate")
    grid = np.linspace(0.0, 1.0, grid_points)
    T = np.vstack([interpolate_roc(c, grid) for c in curves])
    lo_q, hi_q = BAND_QUANTILES
    mean = T.mean(axis=0)
    lower = np.clip(np.quantile(T, lo_q, axis=0), 0.0, 1.0)
    upper = np.clip(np.quantile(T, hi_q, axis=0), 0.0, 1.0)
    aucs = np.array([c.auroc for c in curves])
    ci = (float(np.quantile(aucs, lo_q)), float(np.quantile(aucs, hi_q)))
    return RocBand(grid, mean, lower, upper, float(aucs.mean()), ci, len(curves))


# ---------------------------------------------------------------------------
# temporal cross-validation


@dataclass(frozen=True)
class TemporalCvConfig:
    min_train_size: int = 100
    maturity_lag: float = 61.0

    def __post_init__(self):
        if int(self.min_train_size) != self.min_train_size or self.min_train_size < 1:
            raise ValueError("min_train_size must be a positive integer")
        if not self.maturity_lag >= 0:
            raise ValueError("maturity_lag must be nonnegative")


@dataclass
class TemporalCvResult:
    rows: np.ndarray          # indices of scored rows, in time order
    scores: np.ndarray
    labels: np.ndarray
    roc: RocCurve | None      # None when empty or single-class
    empty: bool
    message: str = ""


def lower_median(values: np.ndarray) -> float:
    v = np.sort(values[~np.isnan(values)])
    if v.size == 0:
        return math.nan
    return float(v[(v.size - 1) // 2])


def impute_median(X: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Replace NaNs column-wise by the lower median of ``reference`` (0 when it has none)."""
    if not np.isnan(X).any():
        return X
    X = X.copy()
    for j in np.flatnonzero(np.isnan(X).any(axis=0)):
        med = lower_median(reference[:, j])
        X[np.isnan(X[:, j]), j] = 0.0 if math.isnan(med) else med
    return X


def temporal_cv(data: Dataset, model_factory, config: TemporalCvConfig = TemporalCvConfig(),
                labels=None) -> TemporalCvResult:
    """Score every row with a model trained on mature past rows only.

    A past row j is mature for row i when ``t_j < t_i`` and ``t_j + lag <= t_i``.
    ``model_factory(train)`` must return a callable mapping a feature matrix to
    scores.  Missing predictors are imputed by the lower median of all rows
    strictly earlier than the scored row.  Rows sharing a timestamp share one fit.
    """
    if data.timestamps is None:
        raise ValueError("temporal cross-validation needs timestamps")
    if labels is None:
        labels = data.labels if data.labels is not None else data.y
    labels = np.asarray(labels, dtype=float)
    t = data.timestamps
    order = np.argsort(t, kind="stable")
    t_sorted = t[order]
    rows, scores = [], []
    for ts in np.unique(t_sorted):
        current = order[t_sorted == ts]
        n_past = int(np.searchsorted(t_sorted, ts, side="left"))
        n_mature = int(np.searchsorted(t_sorted, ts - config.maturity_lag, side="right"))
        n_mature = min(n_mature, n_past)
        if n_mature < config.min_train_size:
            continue
        past = order[:n_past]
        train_idx = order[:n_mature]
        ref = data.X[past]
        train = data.subset(train_idx)
        train.X = impute_median(train.X, ref)
        scorer = model_factory(train)
        s = np.asarray(scorer(impute_median(data.X[current], ref)), dtype=float)
        rows.append(current)
        scores.append(s)
    if not rows:
        return TemporalCvResult(np.empty(0, int), np.empty(0), np.empty(0), None, True,
                                f"no row has {config.min_train_size} mature past rows")
    rows = np.concatenate(rows)
    scores = np.concatenate(scores)
    lab = labels[rows]
    try:
        roc = roc_auroc(scores, lab)
        msg = ""
    except SingleClassError:
        roc, msg = None, "scored rows contain a single class"
    return TemporalCvResult(rows, scores, lab, roc, False, msg)
