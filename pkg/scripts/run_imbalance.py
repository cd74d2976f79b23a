"""Imbalance sweep at correlation 0.5: minority rates 1%, 2%, 5%, 10% and 20%.

Small-minority presets can produce single-class splits; those replications are
excluded and counted in the printed line.

Usage: python3 scripts/run_imbalance.py [--replications 20] [--outdir runs/imbalance]
"""
from sweep import parser, plot_sweep, run_presets

RATES = {"imb1": 0.01, "imb2": 0.02, "corr0.5": 0.05, "imb10": 0.10, "imb20": 0.20}


def main():
    args = parser(__doc__.splitlines()[0], 20, "runs/imbalance").parse_args()
    results = run_presets(RATES, args)
    plot_sweep(results, [100 * r for r in RATES.values()], "minority %", f"{args.outdir}/auroc_vs_imbalance.svg")


if __name__ == "__main__":
    main()
