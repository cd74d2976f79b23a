"""Deterministic CSV tables and self-contained SVG line plots."""
from __future__ import annotations

from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

from .data import write_csv

WIDTH, HEIGHT = 640, 480
MARGIN = dict(left=70, right=20, top=40, bottom=55)
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


def fmt(v: float) -> str:
    """Number format shared by CSV summaries and SVG legends."""
    return f"{v:.4f}"


@dataclass
class Series:
    label: str
    x: np.ndarray
    y: np.ndarray
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None


def _scale(lo, hi, a, b):
    span = hi - lo if hi > lo else 1.0
    return lambda v: a + (np.asarray(v, dtype=float) - lo) / span * (b - a)


def _path(xs, ys) -> str:
    return " ".join(f"{'M' if i == 0 else 'L'}{x:.2f},{y:.2f}" for i, (x, y) in enumerate(zip(xs, ys)))


def line_plot_svg(series, title="", xlabel="", ylabel="", xlim=None, ylim=None, diagonal=False) -> str:
    series = list(series)
    allx = np.concatenate([np.asarray(s.x, float) for s in series]) if series else np.zeros(1)
    ally = np.concatenate([np.asarray(v, float) for s in series
                           for v in (s.y, s.lower, s.upper) if v is not None]) if series else np.zeros(1)
    x0, x1 = xlim if xlim else (float(allx.min()), float(allx.max()))
    y0, y1 = ylim if ylim else (float(ally.min()), float(ally.max()))
    if y1 <= y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    if x1 <= x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    L, R, T, B = MARGIN["left"], WIDTH - MARGIN["right"], MARGIN["top"], HEIGHT - MARGIN["bottom"]
    sx, sy = _scale(x0, x1, L, R), _scale(y0, y1, B, T)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
           f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
           f'<rect x="{L}" y="{T}" width="{R - L}" height="{B - T}" fill="none" stroke="black"/>']
    for i in range(5):
        fx = x0 + (x1 - x0) * i / 4
        fy = y0 + (y1 - y0) * i / 4
        px, py = float(sx(fx)), float(sy(fy))
        out.append(f'<line x1="{px:.2f}" y1="{B}" x2="{px:.2f}" y2="{B + 5}" stroke="black"/>')
        out.append(f'<text x="{px:.2f}" y="{B + 18}" text-anchor="middle">{fx:.3g}</text>')
        out.append(f'<line x1="{L - 5}" y1="{py:.2f}" x2="{L}" y2="{py:.2f}" stroke="black"/>')
        out.append(f'<text x="{L - 8}" y="{py + 4:.2f}" text-anchor="end">{fy:.3g}</text>')
    out.append(f'<text x="{(L + R) / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{(T + B) / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {(T + B) / 2:.1f})">{escape(ylabel)}</text>')
    if diagonal:
        out.append(f'<line x1="{float(sx(x0)):.2f}" y1="{float(sy(y0)):.2f}" x2="{float(sx(x1)):.2f}" '
                   f'y2="{float(sy(y1)):.2f}" stroke="#999999" stroke-dasharray="4,4"/>')
    for i, s in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        xs = sx(s.x)
        if s.lower is not None and s.upper is not None:
            poly = list(zip(xs, sy(s.upper))) + list(zip(xs[::-1], sy(s.lower)[::-1]))
            pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in poly)
            out.append(f'<polygon points="{pts}" fill="{color}" fill-opacity="0.15" stroke="none"/>')
        out.append(f'<path d="{_path(xs, sy(s.y))}" fill="none" stroke="{color}" stroke-width="1.8"/>')
        ly = T + 18 + 18 * i
        out.append(f'<line x1="{R - 190}" y1="{ly - 4}" x2="{R - 170}" y2="{ly - 4}" stroke="{color}" '
                   f'stroke-width="3"/>')
        out.append(f'<text x="{R - 165}" y="{ly}">{escape(s.label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(path, text: str):
    with open(path, "w") as fh:
        fh.write(text)


def roc_legend(model: str, mean_auroc: float, ci=None) -> str:
    if ci is None:
        return f"{model} (AUROC {fmt(mean_auroc)})"
    return f"{model} (AUROC {fmt(mean_auroc)} [{fmt(ci[0])}, {fmt(ci[1])}])"


def roc_band_svg(bands: dict, title="") -> str:
    series = [Series(roc_legend(m, b.mean_auroc, b.auroc_ci), b.grid, b.mean_tpr, b.lower_tpr, b.upper_tpr)
              for m, b in bands.items()]
    return line_plot_svg(series, title, "false positive rate", "true positive rate", (0, 1), (0, 1), True)


def roc_curves_svg(curves: dict, title="") -> str:
    series = [Series(roc_legend(m, c.auroc), c.fpr, c.tpr) for m, c in curves.items()]
    return line_plot_svg(series, title, "false positive rate", "true positive rate", (0, 1), (0, 1), True)


def write_band_csv(path, band):
    write_csv(path, ["fpr", "tpr", "lower", "upper"],
              zip(band.grid, band.mean_tpr, band.lower_tpr, band.upper_tpr))


def write_curve_csv(path, curve):
    write_csv(path, ["fpr", "tpr"], zip(curve.fpr, curve.tpr))
