"""Figure renderers over the harness CSV tables.

Five figure kinds mirror the usual comparison plots for projection-method
experiments: per-run semilog convergence curves, per-algorithm gap boxplots
and histograms, gap-versus-error scatter, and the warm-start diagonal
scatter with its y = x reference line.  Rendering is a pure function of the
input tables; styles are fixed so identical inputs give identical images.
"""

import math
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .tables import (
    CHAIN_COLUMNS,
    FINALS_COLUMNS,
    TRACES_COLUMNS,
    Table,
    group_by,
    read_table,
)

__all__ = [
    "FIGURE_KINDS",
    "PlotSpec",
    "render",
    "fit_log_slope",
    "below_diagonal",
]

FIGURE_KINDS = ("convergence", "boxplot", "histogram", "scatter_gap_error",
                "scatter_diagonal")

_COLORS = plt.rcParams["axes.prop_cycle"].by_key()["color"]


@dataclass(frozen=True)
class PlotSpec:
    """One figure request: input tables, figure kind, output image path."""

    kind: str
    inputs: tuple
    out: str
    monitor: str = "monitor1"
    log_y: bool = True
    annotate_rate: bool = False

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; "
                             f"expected one of {FIGURE_KINDS}")
        object.__setattr__(self, "inputs", tuple(str(p) for p in self.inputs))


def fit_log_slope(n, values) -> float:
    """Least-squares slope of ln(values) against n over the positive entries.

    For a geometric series c * gamma**n the fitted slope is ln(gamma).
    """
    n = np.asarray(n, dtype=float)
    v = np.asarray(values, dtype=float)
    ok = np.isfinite(n) & np.isfinite(v) & (v > 0.0)
    if ok.sum() < 2:
        return math.nan
    slope, _ = np.polyfit(n[ok], np.log(v[ok]), 1)
    return float(slope)


def below_diagonal(cp_gaps, dr_gaps) -> np.ndarray:
    """Data-level classification of warm-start points against the diagonal."""
    cp = np.asarray(cp_gaps, dtype=float)
    dr = np.asarray(dr_gaps, dtype=float)
    return dr < cp


def render(spec: PlotSpec) -> str:
    """Render one figure and return the output path."""
    renderer = _RENDERERS[spec.kind]
    fig = renderer(spec)
    fig.savefig(spec.out, dpi=130)
    plt.close(fig)
    return spec.out


def _render_convergence(spec: PlotSpec):
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for path in spec.inputs:
        table = read_table(path, required=["run_id", "algo", "n", spec.monitor])
        groups = group_by(table, "run_id")
        ns = table.floats("n")
        ms = table.floats(spec.monitor)
        algos = table.column("algo")
        for color_i, (run_id, idx) in enumerate(sorted(groups.items())):
            xs = [ns[i] for i in idx]
            ys = [ms[i] for i in idx]
            pairs = [(x, y) for x, y in zip(xs, ys) if math.isfinite(y) and y > 0]
            if not pairs:
                continue
            xs, ys = zip(*pairs)
            label = f"{algos[idx[0]]} {run_id}"
            ax.plot(xs, ys, lw=1.0, color=_COLORS[color_i % len(_COLORS)], label=label)
            if spec.annotate_rate:
                slope = fit_log_slope(xs, ys)
                if math.isfinite(slope):
                    ax.annotate(f"rate {math.exp(slope):.3f}",
                                xy=(xs[-1], ys[-1]), fontsize=7)
    if spec.log_y:
        ax.set_yscale("log")
    ax.set_xlabel("iteration")
    ax.set_ylabel(spec.monitor)
    if ax.lines and len(ax.lines) <= 12:
        ax.legend(fontsize=7)
    ax.set_title("convergence")
    fig.tight_layout()
    return fig


def _finals_by_algo(spec: PlotSpec, value_col: str):
    labels, series = [], []
    for path in spec.inputs:
        table = read_table(path, required=["algo", value_col])
        values = table.floats(value_col)
        for algo, idx in sorted(group_by(table, "algo").items()):
            vals = [values[i] for i in idx if math.isfinite(values[i])]
            labels.append(algo)
            series.append(vals)
    return labels, series


def _render_boxplot(spec: PlotSpec):
    labels, series = _finals_by_algo(spec, "final_gap")
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    if any(series):
        ax.boxplot(series, tick_labels=labels, showmeans=True)
    if spec.log_y:
        ax.set_yscale("log")
    ax.set_ylabel("final gap")
    ax.set_title("gap variation per algorithm")
    fig.tight_layout()
    return fig


def _render_histogram(spec: PlotSpec):
    labels, series = _finals_by_algo(spec, "final_gap")
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    pooled = [v for vals in series for v in vals]
    if pooled:
        bins = np.histogram_bin_edges(pooled, bins=8)
        for i, (label, vals) in enumerate(zip(labels, series)):
            ax.hist(vals, bins=bins, alpha=0.55, label=label,
                    color=_COLORS[i % len(_COLORS)])
        ax.legend(fontsize=8)
    ax.set_xlabel("final gap")
    ax.set_ylabel("count")
    ax.set_title("gap histogram")
    fig.tight_layout()
    return fig


def _render_scatter_gap_error(spec: PlotSpec):
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    for path in spec.inputs:
        table = read_table(path, required=["algo", "final_gap", "final_error"])
        gaps = table.floats("final_gap")
        errors = table.floats("final_error")
        for i, (algo, idx) in enumerate(sorted(group_by(table, "algo").items())):
            xs = [gaps[j] for j in idx]
            ys = [errors[j] for j in idx]
            ax.scatter(xs, ys, s=18, label=algo, color=_COLORS[i % len(_COLORS)],
                       alpha=0.8)
    if spec.log_y:
        ax.set_xscale("log")
        ax.set_yscale("log")
    ax.set_xlabel("final gap")
    ax.set_ylabel("error vs ground truth")
    if ax.collections:
        ax.legend(fontsize=8)
    ax.set_title("gap vs reconstruction error")
    fig.tight_layout()
    return fig


def _render_scatter_diagonal(spec: PlotSpec):
    fig, ax = plt.subplots(figsize=(5.5, 5.5))
    cp_all, dr_all = [], []
    for path in spec.inputs:
        table = read_table(path, required=["cp_gap", "dr_gap"])
        cp_all.extend(table.floats("cp_gap"))
        dr_all.extend(table.floats("dr_gap"))
    ok = [(c, d) for c, d in zip(cp_all, dr_all)
          if math.isfinite(c) and math.isfinite(d)]
    if ok:
        cp, dr = map(np.array, zip(*ok))
        ax.scatter(cp, dr, s=20, color=_COLORS[0], zorder=3)
        lo = min(cp.min(), dr.min())
        hi = max(cp.max(), dr.max())
        pad = 0.05 * (hi - lo) if hi > lo else max(0.05 * hi, 1e-12)
        ax.plot([lo - pad, hi + pad], [lo - pad, hi + pad], color="red", lw=1.2,
                zorder=2)
    ax.set_xlabel("cyclic projections gap")
    ax.set_ylabel("warm-started product DR gap")
    ax.set_title("warm-start comparison")
    ax.set_aspect("equal", adjustable="box")
    fig.tight_layout()
    return fig


_RENDERERS = {
    "convergence": _render_convergence,
    "boxplot": _render_boxplot,
    "histogram": _render_histogram,
    "scatter_gap_error": _render_scatter_gap_error,
    "scatter_diagonal": _render_scatter_diagonal,
}
