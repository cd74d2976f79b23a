"""Gradient tree boosting with Newton leaf values (Grabit, boosted logit, L2 boost)."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from . import tree as _tree
from .data import Dataset
from .losses import BernoulliLogitLoss, CensoringBounds, SquaredLoss, TobitLoss, loss_from_dict
from .tree import RegressionTree, TreeConfig, fit_least_squares, newton_update_leaves

FORMAT_VERSION = 1


@dataclass(frozen=True)
class BoostConfig:
    n_trees: int = 100
    shrinkage: float = 0.1
    tree: TreeConfig = TreeConfig()
    loss: object = field(default_factory=SquaredLoss)

    def __post_init__(self):
        if int(self.n_trees) != self.n_trees or self.n_trees < 1:
            raise ValueError("n_trees must be a positive integer")
        if not 0.0 < self.shrinkage <= 1.0:
            raise ValueError("shrinkage must lie in (0, 1]")


def grabit_config(lower=-math.inf, upper=math.inf, sigma=1.0, n_trees=100, shrinkage=0.1,
                  max_depth=3, min_samples_leaf=1) -> BoostConfig:
    return BoostConfig(n_trees, shrinkage, TreeConfig(max_depth, min_samples_leaf),
                       TobitLoss(CensoringBounds(lower, upper), sigma))


@dataclass(eq=False)
class BoostedEnsemble:
    """``F(x) = f0 + nu*tree_1(x) + ... + nu*tree_M(x)``, accumulated left to right.

    Prediction adds each tree's scaled contribution in sequence, exactly as the
    training loop updates its fitted values, so in-sample predictions match the
    training-time fit bit for bit.
    """

    f0: float
    trees: list
    config: BoostConfig
    n_features: int
    train_loss: list = field(default_factory=list)

    @property
    def loss(self):
        return self.config.loss

    @property
    def nu(self) -> float:
        return self.config.shrinkage

    def _check(self, X):
        X = _tree._as_matrix(X)
        if X.shape[1] != self.n_features:
            raise ValueError(f"model expects {self.n_features} features, got {X.shape[1]}")
        return X

    def predict(self, X, n_trees: int | None = None) -> np.ndarray:
        X = self._check(X)
        out = np.full(X.shape[0], self.f0)
        for t in self.trees[: len(self.trees) if n_trees is None else n_trees]:
            _tree._accumulate(X, t.feature, t.threshold, t.left, t.right, t.value, self.nu, out)
        return out

    def staged_predict(self, X):
        """Yield predictions after 0, 1, ..., M trees."""
        X = self._check(X)
        out = np.full(X.shape[0], self.f0)
        yield out.copy()
        for t in self.trees:
            _tree._accumulate(X, t.feature, t.threshold, t.left, t.right, t.value, self.nu, out)
            yield out.copy()

    def truncate(self, n_trees: int) -> "BoostedEnsemble":
        cfg = BoostConfig(max(n_trees, 1), self.config.shrinkage, self.config.tree, self.config.loss)
        return BoostedEnsemble(self.f0, list(self.trees[:n_trees]), cfg, self.n_features,
                               self.train_loss[: n_trees + 1])

    def to_dict(self) -> dict:
        loss = self.loss
        return {
            "format_version": FORMAT_VERSION,
            "kind": "boosted",
            "loss": loss.to_dict(),
            "bounds": loss.bounds.to_dict() if isinstance(loss, TobitLoss) else None,
            "sigma": loss.sigma if isinstance(loss, TobitLoss) else None,
            "f0": self.f0,
            "nu": self.nu,
            "n_trees": len(self.trees),
            "n_features": self.n_features,
            "tree_config": {"max_depth": self.config.tree.max_depth,
                            "min_samples_leaf": self.config.tree.min_samples_leaf},
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BoostedEnsemble":
        if d.get("format_version") != FORMAT_VERSION or d.get("kind") != "boosted":
            raise ValueError("not a boosted-ensemble document of a supported version")
        tc = d["tree_config"]
        cfg = BoostConfig(max(d["n_trees"], 1), d["nu"], TreeConfig(tc["max_depth"], tc["min_samples_leaf"]),
                          loss_from_dict(d["loss"]))
        trees = [RegressionTree.from_dict(t) for t in d["trees"]]
        return cls(d["f0"], trees, cfg, d["n_features"])


def fit_boosted(data: Dataset, config: BoostConfig) -> BoostedEnsemble:
    """Run the boosting loop for exactly ``config.n_trees`` stages.

    Each stage fits a least-squares tree to the negative gradient and then
    replaces its leaf values with one Newton step ``-sum(g) / sum(h)``.
    """
    X = _tree._as_matrix(data.X)
    y = np.asarray(data.y, dtype=float)
    if X.shape[0] == 0:
        raise ValueError("cannot boost on an empty dataset")
    loss = config.loss
    loss.validate(y)
    f0 = loss.init_score(y)
    F = np.full(X.shape[0], f0)
    nu = config.shrinkage
    bound = loss.bind(y)
    sorted_features = _tree.presort(X)
    trees = []
    train_loss = [float(np.sum(bound.loss(F)))]
    for _ in range(config.n_trees):
        g, h = bound.grad_hess(F)
        t = fit_least_squares(X, -g, config.tree, sorted_features, check=False)
        t = newton_update_leaves(t, g, h)
        F += nu * t.value[t.leaf_of_row]
        trees.append(RegressionTree(t.feature, t.threshold, t.left, t.right, t.value, t.gain, t.n_samples))
        train_loss.append(float(np.sum(bound.loss(F))))
    return BoostedEnsemble(f0, trees, config, X.shape[1], train_loss)


def predict_latent(model: BoostedEnsemble, X) -> np.ndarray:
    return model.predict(X)


def predict_default_prob(model, X) -> np.ndarray:
    """``P(Y* >= upper) = 1 - Phi((upper - F(x)) / sigma)`` for Tobit-type models."""
    loss = getattr(model, "loss", None)
    if not isinstance(loss, TobitLoss):
        raise TypeError("default probabilities need a model fitted with the Tobit loss")
    upper = loss.bounds.upper
    if not math.isfinite(upper):
        raise ValueError("default probabilities need a finite upper bound")
    return special.ndtr((model.predict(X) - upper) / loss.sigma)


def staged_predictions(model: BoostedEnsemble, X):
    return model.staged_predict(X)


def save_model(model, path):
    with open(path, "w") as fh:
        json.dump(model.to_dict(), fh, indent=None, separators=(",", ":"))
        fh.write("\n")


def load_model(path):
    with open(path) as fh:
        d = json.load(fh)
    kind = d.get("kind")
    if kind == "boosted":
        return BoostedEnsemble.from_dict(d)
    if kind == "linear":
        from .linear import LinearModel

        return LinearModel.from_dict(d)
    raise ValueError(f"unknown model kind {kind!r}")


def bernoulli_config(n_trees=100, shrinkage=0.1, max_depth=3, min_samples_leaf=1) -> BoostConfig:
    return BoostConfig(n_trees, shrinkage, TreeConfig(max_depth, min_samples_leaf), BernoulliLogitLoss())
