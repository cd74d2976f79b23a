"""Tobit, Bernoulli-logit and squared losses with first and second derivatives.

All censored-branch quantities are written in terms of the distance ``t``
into the Gaussian tail: ``t = (upper - f) / sigma`` for upper-censored rows
and ``t = (f - lower) / sigma`` for lower-censored rows.  Both branches then
share the same stable building blocks::

    loss = -log Q(t)                    Q = 1 - Phi
    |dL/df| = M(t) / sigma              M(t) = phi(t) / Q(t)
    d2L/df2 = M(t) (M(t) - t) / sigma^2

with the sign of the gradient depending on the side.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

LOG_2PI = math.log(2.0 * math.pi)
SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
HESSIAN_FLOOR = 1e-12
SNAP_RTOL = 1e-9

# beyond this tail distance the curvature factor switches to its asymptotic series
_TAIL_SWITCH = 8.0
_N_SERIES = 30


class InvalidSigmaError(ValueError):
    pass


class BoundsViolationError(ValueError):
    pass


class CensorStatus(enum.IntEnum):
    LOWER = 0
    INTERIOR = 1
    UPPER = 2


@dataclass(frozen=True)
class CensoringBounds:
    """Observation window ``[lower, upper]``; either side may be infinite."""

    lower: float = -math.inf
    upper: float = math.inf

    def __post_init__(self):
        lo, up = float(self.lower), float(self.upper)
        if math.isnan(lo) or math.isnan(up):
            raise ValueError("censoring bounds must not be NaN")
        if not lo < up:
            raise ValueError(f"lower bound {lo} must be strictly below upper bound {up}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", up)

    @property
    def censoring_active(self) -> bool:
        return math.isfinite(self.lower) or math.isfinite(self.upper)

    def to_dict(self) -> dict:
        # JSON has no infinities; an open side is stored as null
        return {
            "lower": self.lower if math.isfinite(self.lower) else None,
            "upper": self.upper if math.isfinite(self.upper) else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CensoringBounds":
        lo = d.get("lower")
        up = d.get("upper")
        return cls(-math.inf if lo is None else lo, math.inf if up is None else up)


def _check_sigma(sigma):
    sigma = float(sigma)
    if not (sigma > 0.0 and math.isfinite(sigma)):
        raise InvalidSigmaError(f"sigma must be a positive finite number, got {sigma}")
    return sigma


def censor_status(y, bounds: CensoringBounds) -> np.ndarray:
    """Classify responses by exact equality with the bounds.

    Responses outside ``[lower, upper]`` raise :class:`BoundsViolationError`.
    """
    y = np.asarray(y, dtype=float)
    if np.any(np.isnan(y)):
        raise BoundsViolationError("response contains NaN")
    if np.any(y < bounds.lower) or np.any(y > bounds.upper):
        bad = int(np.sum((y < bounds.lower) | (y > bounds.upper)))
        raise BoundsViolationError(
            f"{bad} response value(s) outside [{bounds.lower}, {bounds.upper}]"
        )
    status = np.full(y.shape, CensorStatus.INTERIOR, dtype=np.int8)
    status[y == bounds.lower] = CensorStatus.LOWER
    status[y == bounds.upper] = CensorStatus.UPPER
    return status


def snap_to_bounds(y, bounds: CensoringBounds, rtol: float = SNAP_RTOL):
    """Snap responses lying within ``rtol * (upper - lower)`` of a finite bound onto it.

    With one open side the tolerance is taken relative to ``max(1, |bound|)``.
    Returns the snapped copy and the number of values moved.
    """
    y = np.array(y, dtype=float, copy=True)
    if math.isfinite(bounds.lower) and math.isfinite(bounds.upper):
        scale = bounds.upper - bounds.lower
        tol_lo = tol_up = rtol * scale
    else:
        tol_lo = rtol * max(1.0, abs(bounds.lower)) if math.isfinite(bounds.lower) else 0.0
        tol_up = rtol * max(1.0, abs(bounds.upper)) if math.isfinite(bounds.upper) else 0.0
    moved = 0
    if math.isfinite(bounds.lower):
        near = (np.abs(y - bounds.lower) <= tol_lo) & (y != bounds.lower)
        moved += int(near.sum())
        y[near] = bounds.lower
    if math.isfinite(bounds.upper):
        near = (np.abs(y - bounds.upper) <= tol_up) & (y != bounds.upper)
        moved += int(near.sum())
        y[near] = bounds.upper
    return y, moved


# ---------------------------------------------------------------------------
# Gaussian tail helpers


def log_upper_tail(t):
    """``log(1 - Phi(t))`` without underflow."""
    return special.log_ndtr(-np.asarray(t, dtype=float))


def inverse_mills(t):
    """``phi(t) / (1 - Phi(t))`` for any real t (erfcx keeps it finite in both tails)."""
    t = np.asarray(t, dtype=float)
    return SQRT_2_OVER_PI / special.erfcx(t / math.sqrt(2.0))


def tail_curvature(t, m=None):
    """``M(t)^2 (1 - t / M(t))``, the second derivative of ``-log Q(t)``.

    Written as ``M (M - t)`` up to the switch, which stays finite when Q -> 1
    (M underflows to 0 there).  Beyond it, ``M - t`` cancels badly and the
    factor ``1 - t/M`` is taken from its asymptotic series instead.
    """
    t = np.asarray(t, dtype=float)
    if m is None:
        m = inverse_mills(t)
    out = np.empty_like(t)
    direct = t <= _TAIL_SWITCH
    md = m[direct]
    out[direct] = md * (md - t[direct])
    ta = t[~direct]
    if ta.size:
        inv_t2 = 1.0 / (ta * ta)
        term = np.ones_like(ta)
        acc = np.zeros_like(ta)
        # 1 - t/M(t) = sum_{k>=1} (-1)^(k+1) (2k-1)!! / t^(2k)
        for k in range(1, _N_SERIES + 1):
            term = term * (2 * k - 1) * inv_t2
            acc += term if k % 2 == 1 else -term
        ma = m[~direct]
        out[~direct] = ma * ma * acc
    return out


def _tail_distance(y, f, sigma, bounds):
    y = np.asarray(y, dtype=float)
    f = np.asarray(f, dtype=float)
    status = censor_status(y, bounds)
    y, f, status = np.broadcast_arrays(y, f, status)
    t = np.zeros(y.shape)
    lo = status == CensorStatus.LOWER
    up = status == CensorStatus.UPPER
    t[lo] = (f[lo] - bounds.lower) / sigma
    t[up] = (bounds.upper - f[up]) / sigma
    return y, f, status, t, lo, up


def _scalar_or_array(out, *inputs):
    if all(np.ndim(a) == 0 for a in inputs):
        return float(out)
    return out


# ---------------------------------------------------------------------------
# Tobit


def tobit_density(y, f, sigma, bounds: CensoringBounds):
    """Mixed discrete/continuous Tobit density of ``y`` given latent mean ``f``."""
    sigma = _check_sigma(sigma)
    return _scalar_or_array(np.exp(-_tobit_loss(y, f, sigma, bounds)), y, f)


def tobit_loss(y, f, sigma, bounds: CensoringBounds):
    """Negative log Tobit likelihood, evaluated in log space."""
    sigma = _check_sigma(sigma)
    return _scalar_or_array(_tobit_loss(y, f, sigma, bounds), y, f)


def _tobit_loss(y, f, sigma, bounds):
    y, f, status, t, lo, up = _tail_distance(y, f, sigma, bounds)
    mid = ~(lo | up)
    out = np.empty(y.shape)
    r = (y[mid] - f[mid]) / sigma
    out[mid] = 0.5 * r * r + math.log(sigma) + 0.5 * LOG_2PI
    cens = lo | up
    out[cens] = -log_upper_tail(t[cens])
    return out


def tobit_gradient(y, f, sigma, bounds: CensoringBounds):
    """dL/df of the Tobit loss."""
    sigma = _check_sigma(sigma)
    return _scalar_or_array(_tobit_gradient(y, f, sigma, bounds), y, f)


def _tobit_gradient(y, f, sigma, bounds):
    y, f, status, t, lo, up = _tail_distance(y, f, sigma, bounds)
    out = np.empty(y.shape)
    mid = ~(lo | up)
    out[mid] = -(y[mid] - f[mid]) / (sigma * sigma)
    out[lo] = inverse_mills(t[lo]) / sigma
    out[up] = -inverse_mills(t[up]) / sigma
    return out


def tobit_hessian(y, f, sigma, bounds: CensoringBounds):
    """d2L/df2 of the Tobit loss (unfloored)."""
    sigma = _check_sigma(sigma)
    return _scalar_or_array(_tobit_hessian(y, f, sigma, bounds), y, f)


def _tobit_hessian(y, f, sigma, bounds):
    y, f, status, t, lo, up = _tail_distance(y, f, sigma, bounds)
    out = np.full(y.shape, 1.0 / (sigma * sigma))
    cens = lo | up
    tc = t[cens]
    m = inverse_mills(tc)
    out[cens] = tail_curvature(tc, m) / (sigma * sigma)
    return out


# ---------------------------------------------------------------------------
# Bernoulli logit and squared loss


def _check_binary(y):
    y = np.asarray(y, dtype=float)
    if not np.all((y == 0.0) | (y == 1.0)):
        raise ValueError("Bernoulli responses must be 0 or 1")
    return y


def bernoulli_logit_loss_grad_hess(y, f):
    """Return (loss, gradient, hessian) of the logistic negative log-likelihood.

    Each term is evaluated on the side where it does not saturate, so e.g.
    ``y=1, f=50`` yields values of order ``exp(-50)`` rather than zeros.
    """
    y = _check_binary(y)
    f = np.asarray(f, dtype=float)
    pos = y == 1.0
    loss = np.logaddexp(0.0, np.where(pos, -f, f))
    p = special.expit(f)
    q = special.expit(-f)
    grad = np.where(pos, -q, p)
    hess = p * q
    if np.ndim(y) == 0 and np.ndim(f) == 0:
        return float(loss), float(grad), float(hess)
    return loss, grad, hess


# ---------------------------------------------------------------------------
# loss family used by the boosting loop


class TobitLoss:
    name = "tobit"

    def __init__(self, bounds: CensoringBounds, sigma: float, hessian_floor: float = HESSIAN_FLOOR):
        self.bounds = bounds
        self.sigma = _check_sigma(sigma)
        if not hessian_floor > 0:
            raise ValueError("hessian_floor must be positive")
        self.hessian_floor = float(hessian_floor)

    def validate(self, y):
        censor_status(y, self.bounds)

    def init_score(self, y):
        return float(np.mean(y))

    def loss(self, y, f):
        return _tobit_loss(y, f, self.sigma, self.bounds)

    def gradient(self, y, f):
        return _tobit_gradient(y, f, self.sigma, self.bounds)

    def hessian(self, y, f):
        return np.maximum(_tobit_hessian(y, f, self.sigma, self.bounds), self.hessian_floor)

    def bind(self, y):
        return _BoundTobit(self, y)

    def to_dict(self):
        return {"name": self.name, "bounds": self.bounds.to_dict(), "sigma": self.sigma,
                "hessian_floor": self.hessian_floor}

    def __repr__(self):
        return f"TobitLoss(bounds={self.bounds}, sigma={self.sigma})"


class _BoundTobit:
    """Tobit loss with the censoring pattern of a fixed response vector precomputed."""

    def __init__(self, loss: TobitLoss, y):
        self.y = np.asarray(y, dtype=float)
        status = censor_status(self.y, loss.bounds)
        self.sigma = loss.sigma
        self.floor = loss.hessian_floor
        self.lo = np.flatnonzero(status == CensorStatus.LOWER)
        self.up = np.flatnonzero(status == CensorStatus.UPPER)
        self.mid = np.flatnonzero(status == CensorStatus.INTERIOR)
        self.lower = loss.bounds.lower
        self.upper = loss.bounds.upper
        self.y_mid = self.y[self.mid]

    def _t(self, F):
        return (F[self.lo] - self.lower) / self.sigma, (self.upper - F[self.up]) / self.sigma

    def loss(self, F):
        s = self.sigma
        out = np.empty(len(F))
        r = (self.y_mid - F[self.mid]) / s
        out[self.mid] = 0.5 * r * r + math.log(s) + 0.5 * LOG_2PI
        t_lo, t_up = self._t(F)
        out[self.lo] = -log_upper_tail(t_lo)
        out[self.up] = -log_upper_tail(t_up)
        return out

    def grad_hess(self, F):
        s = self.sigma
        g = np.empty(len(F))
        h = np.empty(len(F))
        g[self.mid] = -(self.y_mid - F[self.mid]) / (s * s)
        h[self.mid] = 1.0 / (s * s)
        t_lo, t_up = self._t(F)
        for idx, t, sign in ((self.lo, t_lo, 1.0), (self.up, t_up, -1.0)):
            if idx.size:
                m = inverse_mills(t)
                g[idx] = sign * m / s
                h[idx] = tail_curvature(t, m) / (s * s)
        np.maximum(h, self.floor, out=h)
        return g, h


class _BoundGeneric:
    def __init__(self, loss, y):
        self._loss = loss
        self.y = np.asarray(y, dtype=float)

    def loss(self, F):
        return self._loss.loss(self.y, F)

    def grad_hess(self, F):
        return self._loss.gradient(self.y, F), self._loss.hessian(self.y, F)


class BernoulliLogitLoss:
    name = "bernoulli_logit"
    hessian_floor = HESSIAN_FLOOR

    def validate(self, y):
        y = _check_binary(y)
        if y.size and (y.min() == y.max()):
            raise ValueError("Bernoulli boosting needs both classes in the training data")

    def init_score(self, y):
        p = float(np.mean(y))
        return math.log(p / (1.0 - p))

    def loss(self, y, f):
        return bernoulli_logit_loss_grad_hess(y, f)[0]

    def gradient(self, y, f):
        return bernoulli_logit_loss_grad_hess(y, f)[1]

    def hessian(self, y, f):
        return np.maximum(bernoulli_logit_loss_grad_hess(y, f)[2], self.hessian_floor)

    def bind(self, y):
        return _BoundGeneric(self, y)

    def to_dict(self):
        return {"name": self.name}

    def __repr__(self):
        return "BernoulliLogitLoss()"


class SquaredLoss:
    name = "squared"

    def validate(self, y):
        if not np.all(np.isfinite(np.asarray(y, dtype=float))):
            raise ValueError("responses must be finite")

    def init_score(self, y):
        return float(np.mean(y))

    def loss(self, y, f):
        r = np.asarray(y, dtype=float) - f
        return 0.5 * r * r

    def gradient(self, y, f):
        return np.asarray(f, dtype=float) - y

    def hessian(self, y, f):
        return np.ones(np.broadcast(np.asarray(y), np.asarray(f)).shape)

    def bind(self, y):
        return _BoundGeneric(self, y)

    def to_dict(self):
        return {"name": self.name}

    def __repr__(self):
        return "SquaredLoss()"


def loss_from_dict(d: dict):
    name = d["name"]
    if name == TobitLoss.name:
        return TobitLoss(CensoringBounds.from_dict(d["bounds"]), d["sigma"],
                         d.get("hessian_floor", HESSIAN_FLOOR))
    if name == BernoulliLogitLoss.name:
        return BernoulliLogitLoss()
    if name == SquaredLoss.name:
        return SquaredLoss()
    raise ValueError(f"unknown loss {name!r}")
