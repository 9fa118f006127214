"""Histogram and recall/precision scatter figures for Monte Carlo summaries."""

from __future__ import annotations

import math
from collections import Counter
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from ldaselect.criteria import display_name  # noqa: E402


def _style(ax):
    ax.spines["top"].set_visible(False)
    ax.spines["right"].set_visible(False)
    ax.tick_params(labelsize=8)


def plot_histogram(ax, histogram: dict[int, int], k_true: int | None, title: str):
    ks = sorted(histogram)
    ax.bar(ks, [histogram[k] for k in ks], width=0.8, color="0.55", edgecolor="0.2", linewidth=0.5)
    if k_true is not None:
        ax.axvline(k_true, color="red", linewidth=1.2)
    ax.set_title(title, fontsize=9)
    ax.set_xlabel("selected number of topics", fontsize=8)
    ax.set_ylabel("replications", fontsize=8)
    _style(ax)


def histogram_figure(summary, path, fmt: str = "png"):
    """One panel per criterion, red line at the true number of topics."""
    names = list(summary.criteria)
    ncols = min(3, len(names))
    nrows = math.ceil(len(names) / ncols)
    fig, axes = plt.subplots(nrows, ncols, figsize=(3.2 * ncols, 2.6 * nrows), squeeze=False)
    for ax, name in zip(axes.flat, names):
        plot_histogram(ax, summary.criteria[name].histogram, summary.k_true, display_name(name))
    for ax in list(axes.flat)[len(names):]:
        ax.set_visible(False)
    fig.tight_layout()
    fig.savefig(Path(path).with_suffix("." + fmt))
    plt.close(fig)


def scatter_figure(points: dict[str, list[tuple[float, float]]], path, weighted: bool = False, fmt: str = "png"):
    """Recall against precision per criterion.

    Binary scores repeat often, so there marker area grows with the number of
    coinciding replications; weighted scores are plotted as plain points.
    """
    names = list(points)
    ncols = min(3, len(names))
    nrows = math.ceil(len(names) / ncols)
    fig, axes = plt.subplots(nrows, ncols, figsize=(3.0 * ncols, 3.0 * nrows), squeeze=False)
    for ax, name in zip(axes.flat, names):
        pts = points[name]
        if weighted:
            ax.scatter([p[0] for p in pts], [p[1] for p in pts], s=8, alpha=0.6)
        else:
            counts = Counter(pts)
            xy = list(counts)
            ax.scatter([p[0] for p in xy], [p[1] for p in xy], s=[12 * counts[p] for p in xy], alpha=0.6)
        ax.set_xlim(-0.02, 1.02)
        ax.set_ylim(-0.02, 1.02)
        ax.set_xlabel("recall", fontsize=8)
        ax.set_ylabel("precision", fontsize=8)
        ax.set_title(display_name(name), fontsize=9)
        _style(ax)
    for ax in list(axes.flat)[len(names):]:
        ax.set_visible(False)
    fig.tight_layout()
    fig.savefig(Path(path).with_suffix("." + fmt))
    plt.close(fig)
