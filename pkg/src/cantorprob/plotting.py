"""Matplotlib figures for report tables (headless, PNG)."""

from __future__ import annotations

from contextlib import contextmanager

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "figure.figsize": (5.0, 3.4),
    "figure.dpi": 120,
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.4,
    "lines.markersize": 4,
    "savefig.bbox": "tight",
    # fixed metadata keeps repeated renders byte-stable
    "svg.hashsalt": "cantorprob",
}


@contextmanager
def figure(path, title=None, xlabel=None, ylabel=None):
    """Yield an axis; on exit save to ``path`` and close the figure."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        try:
            yield ax
            if title:
                ax.set_title(title)
            if xlabel:
                ax.set_xlabel(xlabel)
            if ylabel:
                ax.set_ylabel(ylabel)
            if ax.get_legend_handles_labels()[0]:
                ax.legend(frameon=False)
            fig.savefig(path, metadata={"Software": None})
        finally:
            plt.close(fig)


def line_plot(path, xs, series: dict, title="", xlabel="", ylabel="", logy=False, steps=False):
    with figure(path, title, xlabel, ylabel) as ax:
        for name, ys in series.items():
            if steps:
                ax.step(xs, ys, where="post", label=name, marker="o")
            else:
                ax.plot(xs, ys, label=name, marker="o")
        if logy:
            ax.set_yscale("log", base=2)


def bar_plot(path, labels, values, title="", xlabel="", ylabel=""):
    with figure(path, title, xlabel, ylabel) as ax:
        ax.bar(range(len(values)), values, color="#4c72b0")
        ax.set_xticks(range(len(values)))
        ax.set_xticklabels(labels, rotation=60, ha="right", fontsize=6)
