"""Correlation sweep: the four models at auxiliary correlations 0.75, 0.5, 0.25 and 0.

Usage: python3 scripts/run_correlation_study.py [--replications 20] [--outdir runs/correlation]
"""
from sweep import parser, plot_sweep, run_presets

PRESETS = {"corr0.75": 0.75, "corr0.5": 0.5, "corr0.25": 0.25, "corr0": 0.0}


def main():
    args = parser(__doc__.splitlines()[0], 20, "runs/correlation").parse_args()
    results = run_presets(PRESETS, args)
    plot_sweep(results, list(PRESETS.values()), "correlation", f"{args.outdir}/auroc_vs_correlation.svg")


if __name__ == "__main__":
    main()
