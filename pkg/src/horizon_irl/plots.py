"""Dependency-free SVG charts for sweep summaries."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

log = logging.getLogger(__name__)

WIDTH, HEIGHT = 480, 320
MARGIN = dict(left=56, right=16, top=28, bottom=44)
COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"]


@dataclass(frozen=True)
class Axis:
    """Affine map from data ``[lo, hi]`` to pixels ``[p0, p1]``."""

    lo: float
    hi: float
    p0: float
    p1: float

    @classmethod
    def fit(cls, values, p0, p1, pad=0.05):
        values = np.asarray([v for v in values if np.isfinite(v)], dtype=float)
        lo, hi = (0.0, 1.0) if values.size == 0 else (float(values.min()), float(values.max()))
        if hi == lo:
            lo, hi = lo - 0.5, hi + 0.5
        span = hi - lo
        return cls(lo - pad * span, hi + pad * span, p0, p1)

    def __call__(self, v):
        return self.p0 + (np.asarray(v, dtype=float) - self.lo) / (self.hi - self.lo) * (self.p1 - self.p0)


def _x_axis(values):
    return Axis.fit(values, MARGIN["left"], WIDTH - MARGIN["right"])


def _y_axis(values):
    return Axis.fit(values, HEIGHT - MARGIN["bottom"], MARGIN["top"])


def _pts(xs, ys):
    return " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys))


def _frame(title, xlabel, ylabel, xa: Axis, ya: Axis) -> list:
    x0, x1 = MARGIN["left"], WIDTH - MARGIN["right"]
    y0, y1 = HEIGHT - MARGIN["bottom"], MARGIN["top"]
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<text x="{WIDTH / 2:.1f}" y="16" text-anchor="middle" font-size="13">{escape(title)}</text>',
           f'<line class="axis" x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>',
           f'<line class="axis" x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>']
    for v in np.linspace(xa.lo, xa.hi, 5):
        out.append(f'<text x="{float(xa(v)):.2f}" y="{y0 + 14}" text-anchor="middle">{v:.3g}</text>')
    for v in np.linspace(ya.lo, ya.hi, 5):
        out.append(f'<text x="{x0 - 4}" y="{float(ya(v)) + 4:.2f}" text-anchor="end">{v:.3g}</text>')
    out.append(f'<text x="{(x0 + x1) / 2:.1f}" y="{HEIGHT - 8}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="14" y="{(y0 + y1) / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 14 {(y0 + y1) / 2:.1f})">{escape(ylabel)}</text>')
    return out


def _series(xs, ys, xa, ya, color, label=None, band=None) -> list:
    px, py = xa(xs), ya(ys)
    out = []
    if band is not None and len(xs) > 1:
        lo, hi = ya(np.asarray(ys) - band), ya(np.asarray(ys) + band)
        poly = _pts(np.concatenate([px, px[::-1]]), np.concatenate([hi, lo[::-1]]))
        out.append(f'<polygon class="band" points="{poly}" fill="{color}" fill-opacity="0.2" stroke="none"/>')
    if len(xs) > 1:
        out.append(f'<polyline class="series" points="{_pts(px, py)}" fill="none" stroke="{color}" '
                   f'stroke-width="1.5"/>')
    for x, y in zip(px, py):
        out.append(f'<circle class="marker" cx="{x:.2f}" cy="{y:.2f}" r="2.5" fill="{color}"/>')
    if label:
        out.append(f'<text class="label" x="{px[-1] + 4:.2f}" y="{py[-1]:.2f}" fill="{color}">{escape(label)}</text>')
    return out


def line_chart(series, title="", xlabel="", ylabel="", zero_line=False) -> str:
    """``series``: list of ``(label, xs, ys, band_or_None)``."""
    xs_all = np.concatenate([np.asarray(s[1], dtype=float) for s in series]) if series else np.zeros(0)
    ys_all = []
    for _, _, ys, band in series:
        ys = np.asarray(ys, dtype=float)
        ys_all.append(ys)
        if band is not None:
            ys_all += [ys - band, ys + band]
    ys_all = np.concatenate(ys_all) if ys_all else np.zeros(0)
    if zero_line:
        ys_all = np.append(ys_all, 0.0)
    xa, ya = _x_axis(xs_all), _y_axis(ys_all)
    out = _frame(title, xlabel, ylabel, xa, ya)
    if zero_line:
        y = float(ya(0.0))
        out.append(f'<line x1="{MARGIN["left"]}" y1="{y:.2f}" x2="{WIDTH - MARGIN["right"]}" y2="{y:.2f}" '
                   f'stroke="#888" stroke-dasharray="4 3"/>')
    for i, (label, xs, ys, band) in enumerate(series):
        out += _series(np.asarray(xs, dtype=float), np.asarray(ys, dtype=float), xa, ya,
                       COLORS[i % len(COLORS)], label, band)
    out.append("</svg>")
    return "\n".join(out) + "\n"


def scatter_chart(xs, ys, title="", xlabel="", ylabel="") -> str:
    xs, ys = np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)
    xa, ya = _x_axis(xs), _y_axis(np.append(ys, 0.0))
    out = _frame(title, xlabel, ylabel, xa, ya)
    y = float(ya(0.0))
    out.append(f'<line x1="{MARGIN["left"]}" y1="{y:.2f}" x2="{WIDTH - MARGIN["right"]}" y2="{y:.2f}" '
               f'stroke="#888" stroke-dasharray="4 3"/>')
    for x, yv in zip(xa(xs), ya(ys)):
        out.append(f'<circle class="marker" cx="{x:.2f}" cy="{yv:.2f}" r="3" fill="{COLORS[1]}" '
                   f'fill-opacity="0.7"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _slug(x) -> str:
    return format(float(x), "g").replace(".", "p")


def emit_plots(summary, out_dir, records=None, task=None) -> list:
    """Write the SVG set for a summary (rows from ``read_summary``).

    Per ``(task, percent)``: mean full-state error against the candidate with
    a one-std band. Per task: best candidate and its error against the data
    amount. With per-environment ``records``: the cross-validated minus
    oracle error per cell. Returns the written paths.
    """
    out_dir = Path(out_dir)
    rows = [r for r in summary if task is None or r["task"] == task]
    if not rows:
        log.warning("no summary rows to plot%s", f" for task {task!r}" if task else "")
        return []
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    by_task = {}
    for r in rows:
        by_task.setdefault((r["task"], r["learner"]), {}).setdefault(r["data_percent"], []).append(r)
    for (tk, learner), per_pct in sorted(by_task.items()):
        xlabel = "gamma_hat" if learner == "lp" else "horizon"
        best_c, best_e = [], []
        for pct, rs in sorted(per_pct.items()):
            rs = sorted(rs, key=lambda r: r["candidate"])
            xs = [r["candidate"] for r in rs]
            ys = [r["mean_full_errors"] for r in rs]
            sd = np.array([r["std_full_errors"] for r in rs])
            svg = line_chart([(f"{pct:g}%", xs, ys, sd)], f"{tk} ({learner}), {pct:g}% data", xlabel,
                             "state error count")
            path = out_dir / f"{tk}_{learner}_errors_{_slug(pct)}pct.svg"
            path.write_text(svg)
            written.append(path)
            i = int(np.argmin(ys))
            best_c.append(xs[i])
            best_e.append(ys[i])
        pcts = sorted(per_pct)
        svg_best = line_chart([(f"best {xlabel}", pcts, best_c, None)], f"{tk} ({learner}): best {xlabel}",
                              "data percent", xlabel)
        svg_err = line_chart([("min error", pcts, best_e, None)], f"{tk} ({learner}): error at best {xlabel}",
                             "data percent", "state error count")
        for name, svg in (("best_candidate", svg_best), ("best_error", svg_err)):
            path = out_dir / f"{tk}_{learner}_{name}.svg"
            path.write_text(svg)
            written.append(path)
        if records:
            from .experiments import cell_selections

            rs = [r for r in records if r.task == tk and r.learner == learner]
            if rs:
                cells = cell_selections(rs)
                svg = scatter_chart([c.data_percent for c in cells], [c.cv_error - c.oracle_error for c in cells],
                                    f"{tk} ({learner}): cross-validation minus oracle", "data percent",
                                    "error difference")
                path = out_dir / f"{tk}_{learner}_cv_vs_oracle.svg"
                path.write_text(svg)
                written.append(path)
    return written
