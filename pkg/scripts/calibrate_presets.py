"""Monte Carlo calibration of the linear and cosine simulation designs.

For each design:
  sigma_eps = sd(F)                                   (unit signal-to-noise)
  y_u       = 95% quantile of Y* = F + eps
  sigma_a   = sd(F | C=0) * sqrt(1/0.5^2 - 1)          (corr(Y_a, F | C=0) = 0.5)
  mu_a      = largest integer with every trial auxiliary draw below y_u

Usage: python3 scripts/calibrate_presets.py [--draws 10000000] [--seed 20240101]
"""
import argparse
import math

import numpy as np

from grabit.simulation import _FUNCS

CHUNK = 200_000


def chunks(total):
    while total > 0:
        k = min(CHUNK, total)
        yield k
        total -= k


def calibrate(kind, draws, seed, target_corr=0.5):
    fn, p = _FUNCS[kind]
    rng = np.random.default_rng([seed, p])
    F = np.concatenate([fn(rng.uniform(-1, 1, (k, p))) for k in chunks(min(draws, 2_000_000))])
    sigma_eps = float(F.std())
    ystar = F + rng.normal(0, sigma_eps, F.size)
    y_u = float(np.quantile(ystar, 0.95))
    F0 = F[ystar < y_u]
    sigma_a = float(F0.std() * math.sqrt(1 / target_corr**2 - 1))
    # largest value of F + sigma_a*z over C=0 rows of `draws` trials
    top = -math.inf
    for k in chunks(draws):
        Fk = fn(rng.uniform(-1, 1, (k, p)))
        c0 = Fk + rng.normal(0, sigma_eps, k) < y_u
        top = max(top, float(np.max(Fk[c0] + rng.normal(0, sigma_a, int(c0.sum())))))
    mu_a = math.ceil(y_u - top) - 1.0
    return dict(sigma_eps=round(sigma_eps, 4), y_u=round(y_u, 4), sigma_a=round(sigma_a, 4), mu_a=mu_a)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--draws", type=int, default=10_000_000)
    ap.add_argument("--seed", type=int, default=20240101)
    args = ap.parse_args()
    for kind in ("linear", "cosine"):
        print(kind, calibrate(kind, args.draws, args.seed))


if __name__ == "__main__":
    main()
