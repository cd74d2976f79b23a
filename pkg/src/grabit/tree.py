"""Depth-limited least-squares regression trees (exact greedy CART).

Trees are stored as flat node arrays so that fitting and prediction can run
inside numba kernels.  A node is a leaf iff ``feature[node] == -1``; rows go
left iff ``x[feature] <= threshold``.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from numba import njit

LEAF = -1


@dataclass(frozen=True)
class TreeConfig:
    max_depth: int = 3
    min_samples_leaf: int = 1

    def __post_init__(self):
        # depth 0 (a single leaf) is allowed on purpose: it is the natural
        # "intercept only" base learner used in several checks
        if int(self.max_depth) != self.max_depth or self.max_depth < 0:
            raise ValueError("max_depth must be a non-negative integer")
        if int(self.min_samples_leaf) != self.min_samples_leaf or self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be a positive integer")


@dataclass(frozen=True, eq=False)
class RegressionTree:
    feature: np.ndarray      # int32, LEAF for terminal nodes
    threshold: np.ndarray    # float64
    left: np.ndarray         # int32 child ids
    right: np.ndarray
    value: np.ndarray        # leaf values (mean target after fitting)
    gain: np.ndarray         # SSE reduction achieved by each split, 0 at leaves
    n_samples: np.ndarray    # training rows reaching each node
    leaf_of_row: np.ndarray | None = None  # training row -> leaf id, dropped on save

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def is_leaf(self) -> np.ndarray:
        return self.feature == LEAF

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.is_leaf))

    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=int)
        for node in range(self.n_nodes):
            if self.feature[node] != LEAF:
                depth[self.left[node]] = depth[node] + 1
                depth[self.right[node]] = depth[node] + 1
        return int(depth.max())

    def apply(self, X) -> np.ndarray:
        X = _as_matrix(X)
        return _apply(X, self.feature, self.threshold, self.left, self.right)

    def predict(self, X) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "gain": self.gain.tolist(),
            "n_samples": self.n_samples.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RegressionTree":
        return cls(
            feature=np.asarray(d["feature"], dtype=np.int32),
            threshold=np.asarray(d["threshold"], dtype=np.float64),
            left=np.asarray(d["left"], dtype=np.int32),
            right=np.asarray(d["right"], dtype=np.int32),
            value=np.asarray(d["value"], dtype=np.float64),
            gain=np.asarray(d["gain"], dtype=np.float64),
            n_samples=np.asarray(d["n_samples"], dtype=np.int64),
        )


def _as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2:
        raise ValueError("features must be a 2-d array")
    return np.ascontiguousarray(X)


class SortedFeatures:
    """Per-feature stable sort order (p, n), the sorted values, and scratch space.

    Built once per feature matrix and reused by every tree fitted on it, which
    is what makes long boosting runs cheap.  Not safe to share between threads.
    """

    def __init__(self, X):
        X = _as_matrix(X)
        self.shape = X.shape
        self.index = np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T.astype(np.int32))
        self.values = np.ascontiguousarray(np.take_along_axis(X.T, self.index, axis=1))
        self._work = np.empty_like(self.index)
        self._xs = np.empty_like(self.values)

    def scratch(self):
        np.copyto(self._work, self.index)
        np.copyto(self._xs, self.values)
        return self._work, self._xs


def presort(X) -> SortedFeatures:
    return SortedFeatures(X)


def fit_least_squares(X, targets, config: TreeConfig = TreeConfig(), sorted_index=None,
                      check: bool = True) -> RegressionTree:
    """Grow a tree greedily, each split maximizing the SSE reduction.

    Candidate thresholds are midpoints between consecutive distinct values.
    Ties go to the lowest feature index, then the lowest threshold.
    ``check=False`` skips the finiteness scan of X (the boosting loop checks once).
    """
    X = _as_matrix(X)
    g = np.ascontiguousarray(targets, dtype=np.float64)
    n, p = X.shape
    if n == 0:
        raise ValueError("cannot fit a tree on an empty dataset")
    if g.shape != (n,):
        raise ValueError(f"targets must have length {n}, got shape {g.shape}")
    if not np.all(np.isfinite(g)):
        raise ValueError("targets contain non-finite values")
    if check and not np.all(np.isfinite(X)):
        raise ValueError("features contain non-finite values; impute before fitting")
    if sorted_index is None:
        sorted_index = presort(X)
    elif sorted_index.shape != (n, p):
        raise ValueError("sorted_index does not match the feature matrix")
    work, xs = sorted_index.scratch()
    out = _grow(X, g, work, xs, int(config.max_depth), int(config.min_samples_leaf))
    feature, threshold, left, right, value, gain, n_samples, leaf_of_row, n_nodes = out
    return RegressionTree(
        feature=feature[:n_nodes].copy(),
        threshold=threshold[:n_nodes].copy(),
        left=left[:n_nodes].copy(),
        right=right[:n_nodes].copy(),
        value=value[:n_nodes].copy(),
        gain=gain[:n_nodes].copy(),
        n_samples=n_samples[:n_nodes].copy(),
        leaf_of_row=leaf_of_row,
    )


def newton_update_leaves(tree: RegressionTree, grad, hess) -> RegressionTree:
    """Replace every leaf value by ``-sum(grad) / sum(hess)`` over its training rows."""
    if tree.leaf_of_row is None:
        raise ValueError("tree carries no training partition (was it loaded from disk?)")
    grad = np.asarray(grad, dtype=np.float64)
    hess = np.asarray(hess, dtype=np.float64)
    n = len(tree.leaf_of_row)
    if grad.shape != (n,) or hess.shape != (n,):
        raise ValueError(f"grad and hess must have length {n}")
    G = np.bincount(tree.leaf_of_row, weights=grad, minlength=tree.n_nodes)
    H = np.bincount(tree.leaf_of_row, weights=hess, minlength=tree.n_nodes)
    value = tree.value.copy()
    leaves = tree.is_leaf & (tree.n_samples > 0)
    value[leaves] = -G[leaves] / H[leaves]
    return replace(tree, value=value)


def predict_tree(tree: RegressionTree, x) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("x must be a single feature vector")
    _check_width(tree, x.shape[0])
    return float(tree.predict(x[None, :])[0])


def _check_width(tree: RegressionTree, p: int):
    used = tree.feature[tree.feature != LEAF]
    if used.size and used.max() >= p:
        raise ValueError(f"tree splits on feature {used.max()} but input has {p} columns")


# ---------------------------------------------------------------------------
# numba kernels


@njit(cache=True)
def _grow(X, g, work, xs, max_depth, min_leaf):
    # work / xs hold the per-feature sort order and are partitioned in place
    n, p = X.shape
    cap = 2 ** (max_depth + 1) - 1
    if cap > 2 * n - 1:
        cap = 2 * n - 1
    feature = np.full(cap, -1, dtype=np.int32)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int32)
    right = np.full(cap, -1, dtype=np.int32)
    value = np.zeros(cap)
    gain = np.zeros(cap)
    n_samples = np.zeros(cap, dtype=np.int64)
    leaf_of_row = np.zeros(n, dtype=np.int32)

    buf = np.empty(n, dtype=np.int32)
    vbuf = np.empty(n)
    goes_left = np.zeros(n, dtype=np.int32)

    stack_node = np.empty(cap, dtype=np.int64)
    stack_start = np.empty(cap, dtype=np.int64)
    stack_end = np.empty(cap, dtype=np.int64)
    stack_depth = np.empty(cap, dtype=np.int64)
    stack_node[0] = 0
    stack_start[0] = 0
    stack_end[0] = n
    stack_depth[0] = 0
    top = 1
    n_nodes = 1

    while top > 0:
        top -= 1
        node = stack_node[top]
        start = stack_start[top]
        end = stack_end[top]
        depth = stack_depth[top]
        m = end - start
        n_samples[node] = m

        total = 0.0
        for k in range(start, end):
            total += g[work[0, k]]
        mean = total / m
        sse = 0.0
        raw = 0.0
        for k in range(start, end):
            v = g[work[0, k]]
            d = v - mean
            sse += d * d
            raw += v * v
        value[node] = mean

        best_gain = 0.0
        best_num = 0.0
        best_den = 1.0
        best_f = -1
        best_k = -1
        # an (almost) constant node cannot be split meaningfully
        if depth < max_depth and m >= 2 * min_leaf and sse > 1e-20 * raw:
            fm = float(m)
            lo = start + min_leaf - 1
            hi = end - min_leaf
            for f in range(p):
                sl = 0.0
                for k in range(start, lo):
                    sl += g[work[f, k]] - mean
                for k in range(lo, hi):
                    sl += g[work[f, k]] - mean
                    nl = float(k - start + 1)
                    den = nl * (fm - nl)
                    num = sl * sl * fm
                    # cross-multiplied so exact ties stay ties (lowest feature, then threshold, wins)
                    if num * best_den > best_num * den and xs[f, k] < xs[f, k + 1]:
                        best_num = num
                        best_den = den
                        best_f = f
                        best_k = k
            best_gain = best_num / best_den

        if best_f >= 0 and best_gain > 1e-12 * sse:
            lo_x = xs[best_f, best_k]
            hi_x = xs[best_f, best_k + 1]
            thr = 0.5 * (lo_x + hi_x)
            if not (thr < hi_x):
                thr = lo_x
            feature[node] = best_f
            threshold[node] = thr
            gain[node] = best_gain
            lid = n_nodes
            rid = n_nodes + 1
            n_nodes += 2
            left[node] = lid
            right[node] = rid
            for k in range(start, end):
                r = work[0, k]
                goes_left[r] = 1 if X[r, best_f] <= thr else 0
            n_left = best_k - start + 1
            if depth + 1 >= max_depth:
                # children are terminal: no need to partition the sort orders
                tl = 0.0
                tr = 0.0
                for k in range(start, end):
                    r = work[0, k]
                    if goes_left[r]:
                        tl += g[r]
                        leaf_of_row[r] = lid
                    else:
                        tr += g[r]
                        leaf_of_row[r] = rid
                n_samples[lid] = n_left
                n_samples[rid] = m - n_left
                value[lid] = tl / n_left
                value[rid] = tr / (m - n_left)
                continue
            for f in range(p):
                a = start
                b = 0
                # branchless stable partition; goes_left is unpredictable
                for k in range(start, end):
                    r = work[f, k]
                    v = xs[f, k]
                    work[f, a] = r
                    xs[f, a] = v
                    buf[b] = r
                    vbuf[b] = v
                    gl = goes_left[r]
                    a += gl
                    b += 1 - gl
                for k in range(b):
                    work[f, a + k] = buf[k]
                    xs[f, a + k] = vbuf[k]
            # right pushed first so the left subtree is processed first
            stack_node[top] = rid
            stack_start[top] = start + n_left
            stack_end[top] = end
            stack_depth[top] = depth + 1
            top += 1
            stack_node[top] = lid
            stack_start[top] = start
            stack_end[top] = start + n_left
            stack_depth[top] = depth + 1
            top += 1
        else:
            for k in range(start, end):
                leaf_of_row[work[0, k]] = node

    return feature, threshold, left, right, value, gain, n_samples, leaf_of_row, n_nodes


@njit(cache=True)
def _apply(X, feature, threshold, left, right):
    n = X.shape[0]
    out = np.empty(n, dtype=np.int32)
    for i in range(n):
        node = 0
        while feature[node] != -1:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = node
    return out


@njit(cache=True)
def _accumulate(X, feature, threshold, left, right, value, scale, out):
    """out[i] += scale * tree(x_i), in place."""
    n = X.shape[0]
    for i in range(n):
        node = 0
        while feature[node] != -1:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] += scale * value[node]
