"""Linear baselines: logistic regression and the linear Tobit model."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from .boosting import FORMAT_VERSION
from .data import Dataset
from .losses import (CensoringBounds, CensorStatus, censor_status, inverse_mills,
                     log_upper_tail, LOG_2PI, _check_sigma)

MAX_ITER = 100
GRAD_TOL = 1e-8


class SeparationWarning(UserWarning):
    pass


class ConvergenceWarning(UserWarning):
    pass


@dataclass
class LinearModel:
    intercept: float
    coef: np.ndarray
    kind: str                      # "logit" or "tobit"
    sigma: float | None = None
    bounds: CensoringBounds | None = None
    converged: bool = True
    n_iter: int = 0
    message: str = ""

    def __post_init__(self):
        self.coef = np.asarray(self.coef, dtype=float)

    @property
    def n_features(self) -> int:
        return len(self.coef)

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise ValueError(f"model expects {self.n_features} features, got {X.shape[1]}")
        return self.intercept + X @ self.coef

    def predict_proba(self, X) -> np.ndarray:
        """Event probability: logistic for Logit, ``1 - Phi((upper - F)/sigma)`` for Tobit."""
        F = self.predict(X)
        if self.kind == "logit":
            return special.expit(F)
        if self.bounds is None or not math.isfinite(self.bounds.upper):
            raise ValueError("default probabilities need a finite upper bound")
        return special.ndtr((F - self.bounds.upper) / self.sigma)

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "kind": "linear",
            "model": self.kind,
            "intercept": float(self.intercept),
            "coef": self.coef.tolist(),
            "sigma": self.sigma,
            "bounds": None if self.bounds is None else self.bounds.to_dict(),
            "converged": self.converged,
            "n_iter": self.n_iter,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LinearModel":
        if d.get("format_version") != FORMAT_VERSION or d.get("kind") != "linear":
            raise ValueError("not a linear-model document of a supported version")
        bounds = None if d.get("bounds") is None else CensoringBounds.from_dict(d["bounds"])
        return cls(d["intercept"], np.asarray(d["coef"], dtype=float), d["model"], d.get("sigma"),
                   bounds, d.get("converged", True), d.get("n_iter", 0))


def predict_linear(model: LinearModel, X) -> np.ndarray:
    return model.predict(X)


def _standardize(X):
    X = np.asarray(X, dtype=float)
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    sd[sd == 0] = 1.0
    return (X - mu) / sd, mu, sd


def _unscale(b0, w, mu, sd):
    coef = w / sd
    return float(b0 - np.dot(coef, mu)), coef


# ---------------------------------------------------------------------------
# logistic regression


def _logit_nll(Z1, c, theta):
    f = Z1 @ theta
    return float(np.sum(np.logaddexp(0.0, np.where(c == 1.0, -f, f))))


def fit_logit(data: Dataset, max_iter: int = MAX_ITER, tol: float = GRAD_TOL) -> LinearModel:
    """Maximum-likelihood logistic regression by Newton steps with step halving.

    ``data.labels`` is used when present, otherwise ``data.y``; either must be 0/1.
    """
    c = np.asarray(data.labels if data.labels is not None else data.y, dtype=float)
    if not np.all((c == 0) | (c == 1)):
        raise ValueError("logistic regression needs a 0/1 response")
    if c.min() == c.max():
        raise ValueError("logistic regression needs both classes present")
    Z, mu, sd = _standardize(data.X)
    Z1 = np.column_stack([np.ones(len(c)), Z])
    theta = np.zeros(Z1.shape[1])
    pbar = c.mean()
    theta[0] = math.log(pbar / (1 - pbar))
    nll = _logit_nll(Z1, c, theta)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        p = special.expit(Z1 @ theta)
        grad = Z1.T @ (c - p)
        if np.max(np.abs(grad)) < tol:
            converged = True
            it -= 1
            break
        W = p * (1 - p)
        H = Z1.T @ (Z1 * W[:, None])
        step = np.linalg.lstsq(H, grad, rcond=None)[0]
        alpha = 1.0
        while True:
            cand = theta + alpha * step
            cand_nll = _logit_nll(Z1, c, cand)
            if cand_nll <= nll or alpha < 1e-10:
                break
            alpha *= 0.5
        if cand_nll > nll:
            break
        theta, nll = cand, cand_nll
    else:
        p = special.expit(Z1 @ theta)
        converged = np.max(np.abs(Z1.T @ (c - p))) < tol
    message = "converged" if converged else "iteration cap reached"
    f = Z1 @ theta
    # the gradient vanishes geometrically along a separating direction, so a
    # small gradient is not evidence of a finite optimum: check the signs
    if np.all(np.where(c == 1, f > 0, f < 0)):
        converged = False
        message = "perfect separation: likelihood has no finite maximizer"
        warnings.warn(message, SeparationWarning, stacklevel=2)
    elif not converged:
        warnings.warn(f"logistic regression did not converge ({message})", ConvergenceWarning,
                      stacklevel=2)
    b0, coef = _unscale(theta[0], theta[1:], mu, sd)
    return LinearModel(b0, coef, "logit", converged=bool(converged), n_iter=it, message=message)


# ---------------------------------------------------------------------------
# linear Tobit


def _tobit_objective(theta, Z1, y, lo, up, mid, bounds):
    """Mean Tobit NLL and its gradient in (intercept, w, log sigma)."""
    beta = theta[:-1]
    phi = theta[-1]
    sigma = math.exp(phi)
    F = Z1 @ beta
    nll = 0.0
    dF = np.zeros(len(y))
    dphi = 0.0
    if mid.any():
        r = (y[mid] - F[mid]) / sigma
        nll += float(np.sum(0.5 * r * r)) + mid.sum() * (phi + 0.5 * LOG_2PI)
        dF[mid] = -r / sigma
        dphi += float(np.sum(1.0 - r * r))
    for mask, sign, bound in ((lo, 1.0, bounds.lower), (up, -1.0, bounds.upper)):
        if mask.any():
            # tail distance t; loss = -log Q(t)
            t = sign * (F[mask] - bound) / sigma
            nll += float(-np.sum(log_upper_tail(t)))
            m = inverse_mills(t)
            dF[mask] = sign * m / sigma
            # dt/dphi = -t
            dphi += float(np.sum(-m * t))
    n = len(y)
    return nll / n, np.append(Z1.T @ dF, dphi) / n


def fit_linear_tobit(data: Dataset, bounds: CensoringBounds, max_iter: int = MAX_ITER,
                     tol: float = GRAD_TOL, require_interior: bool = True) -> LinearModel:
    """Maximum-likelihood linear Tobit via BFGS over (intercept, beta, log sigma).

    Without interior observations sigma is not identified; this raises unless
    ``require_interior=False``, in which case the optimizer runs and the result
    is flagged as not converged.
    """
    y = np.asarray(data.y, dtype=float)
    status = censor_status(y, bounds)
    lo = status == CensorStatus.LOWER
    up = status == CensorStatus.UPPER
    mid = status == CensorStatus.INTERIOR
    if not mid.any() and require_interior:
        raise ValueError("linear Tobit needs at least one uncensored observation")
    Z, mu, sd = _standardize(data.X)
    Z1 = np.column_stack([np.ones(len(y)), Z])
    theta0 = np.zeros(Z1.shape[1] + 1)
    theta0[0] = y.mean()
    spread = y[mid].std() if mid.sum() > 1 else y.std()
    theta0[-1] = math.log(spread) if spread > 0 else 0.0

    res = optimize.minimize(_tobit_objective, theta0, args=(Z1, y, lo, up, mid, bounds), jac=True,
                            method="BFGS", options={"gtol": tol, "norm": np.inf, "maxiter": max_iter})
    theta = res.x
    gnorm = float(np.max(np.abs(res.jac)))
    converged = gnorm < tol
    message = "converged" if converged else str(res.message)
    if not mid.any():
        converged = False
        message = "no interior observations: likelihood has no finite maximizer"
    if not converged:
        warnings.warn(f"linear Tobit did not converge: {message}", ConvergenceWarning, stacklevel=2)
    b0, coef = _unscale(theta[0], theta[1:-1], mu, sd)
    return LinearModel(b0, coef, "tobit", sigma=_check_sigma(math.exp(theta[-1])), bounds=bounds,
                       converged=bool(converged), n_iter=int(res.nit), message=message)


def tobit_nll(model_or_params, data: Dataset, bounds: CensoringBounds | None = None) -> float:
    """Total Tobit negative log-likelihood of a fitted model (or (intercept, coef, sigma))."""
    if isinstance(model_or_params, LinearModel):
        intercept, coef, sigma = model_or_params.intercept, model_or_params.coef, model_or_params.sigma
        bounds = bounds or model_or_params.bounds
    else:
        intercept, coef, sigma = model_or_params
    from .losses import tobit_loss

    F = intercept + np.asarray(data.X, dtype=float) @ np.asarray(coef, dtype=float)
    return float(np.sum(tobit_loss(data.y, F, sigma, bounds)))
