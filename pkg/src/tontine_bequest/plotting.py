"""Minimal, reproducible SVG line charts."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

_RC = {
    "svg.hashsalt": "tontine-bequest",
    "svg.fonttype": "none",
    "figure.figsize": (6.4, 4.0),
    "axes.spines.top": False,
    "axes.spines.right": False,
}


def line_chart(path, x, series, xlabel, ylabel, title=None, logy=False, styles=None):
    """Write an SVG with one line per ``series`` entry (label -> y values).

    ``x`` is either shared or a dict keyed like ``series``. Output is stable
    across runs: no timestamp metadata and a fixed element-id salt.
    """
    styles = styles or {}
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        for label, y in series.items():
            xs = x[label] if isinstance(x, dict) else x
            ax.plot(xs, y, label=str(label), linewidth=1.2, linestyle=styles.get(label, "-"))
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        if logy:
            ax.set_yscale("log")
        if len(series) > 1:
            ax.legend(frameon=False, fontsize="small")
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return path
