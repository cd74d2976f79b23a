"""Sample-size sweep at correlation 0.5: n in {100, 200, 500, 2000, 10000} for each split.

Usage: python3 scripts/run_sample_size.py [--replications 20] [--outdir runs/sample_size]
"""
from sweep import parser, plot_sweep, run_presets

SIZES = (100, 200, 500, 2000, 10000)


def main():
    args = parser(__doc__.splitlines()[0], 20, "runs/sample_size").parse_args()
    results = run_presets([f"n{n}" for n in SIZES], args)
    plot_sweep(results, SIZES, "n", f"{args.outdir}/auroc_vs_n.svg", logx=True)


if __name__ == "__main__":
    main()
