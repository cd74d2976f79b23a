"""Shared driver for the study scripts: run presets, collect mean AUROCs, plot a sweep."""
import argparse
import os
import time
from dataclasses import replace

import numpy as np

from grabit import report
from grabit.data import write_csv
from grabit.simulation import MODELS, REDUCED_GRID, TuningGrid, get_preset, run_study


def parser(description, default_reps, default_out):
    ap = argparse.ArgumentParser(description=description)
    ap.add_argument("--replications", type=int, default=default_reps)
    ap.add_argument("--grid", choices=("reduced", "full"), default="reduced")
    ap.add_argument("--workers", type=int, default=max(1, (os.cpu_count() or 1) - 1))
    ap.add_argument("--seed", type=int)
    ap.add_argument("--outdir", default=default_out)
    return ap


def run_presets(presets, args, replications=None):
    """Run each preset and write per-preset outputs; returns {preset: StudyResult}.

    ``replications`` optionally maps preset names to their own replication counts.
    """
    grid = REDUCED_GRID if args.grid == "reduced" else TuningGrid()
    os.makedirs(args.outdir, exist_ok=True)
    results = {}
    for name in presets:
        sc = get_preset(name)
        if args.seed is not None:
            sc = replace(sc, seed=args.seed)
        start = time.perf_counter()
        reps = (replications or {}).get(name, args.replications)
        res = run_study(sc, grid=grid, replications=reps, workers=args.workers)
        secs = time.perf_counter() - start
        results[name] = res
        out = os.path.join(args.outdir, name)
        os.makedirs(out, exist_ok=True)
        write_csv(os.path.join(out, "auroc_summary.csv"), ["model", "mean", "q2.5", "q97.5", "n_used"],
                  [(m, report.fmt(a), report.fmt(lo), report.fmt(hi), n) for m, a, lo, hi, n in res.summary_rows()])
        title = f"{name}: {len(res.used)} replications"
        report.write_svg(os.path.join(out, "roc.svg"), report.roc_band_svg(res.bands, title))
        means = "  ".join(f"{m} {res.mean_auroc(m):.4f}" for m in res.models)
        print(f"{name:>9}  {means}  ({res.n_degenerate} degenerate, {secs:.0f}s)", flush=True)
    write_csv(os.path.join(args.outdir, "summary.csv"), ["preset", *MODELS],
              [(name, *(report.fmt(r.mean_auroc(m)) for m in MODELS)) for name, r in results.items()])
    return results


def plot_sweep(results, xs, xlabel, path, logx=False):
    """Mean AUROC with 95% replication band against a swept design parameter."""
    x = np.log10(xs) if logx else np.asarray(xs, float)
    series = []
    for m in MODELS:
        bands = [r.bands[m] for r in results.values()]
        series.append(report.Series(m, x, np.array([b.mean_auroc for b in bands]),
                                    np.array([b.auroc_ci[0] for b in bands]),
                                    np.array([b.auroc_ci[1] for b in bands])))
    label = f"log10 {xlabel}" if logx else xlabel
    report.write_svg(path, report.line_plot_svg(series, "mean test AUROC", label, "AUROC"))
