"""
Standalone SVG line and scatter plots. Output bytes depend only on the plotted data.
"""

import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

from matplotlib import rc_context  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402

logger = logging.getLogger(__name__)

SVG_PARAMS = {"svg.hashsalt": "tmula", "svg.fonttype": "path", "path.simplify": False}


def _save(figure, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with rc_context(SVG_PARAMS):
        figure.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    logger.debug(f"Wrote plot {path}")
    return path


def line_plot(path, series, title="", xlabel="", ylabel="", logx=False, logy=False):
    """``series`` maps a label to (x values, y values)."""
    with rc_context(SVG_PARAMS):
        figure = Figure(figsize=(6, 4))
        axes = figure.subplots()
        for label, (x, y) in series.items():
            axes.plot(x, y, marker="o", markersize=3, label=label)
        if logx:
            axes.set_xscale("log")
        if logy:
            axes.set_yscale("log")
        axes.set_title(title)
        axes.set_xlabel(xlabel)
        axes.set_ylabel(ylabel)
        if series:
            axes.legend()
        figure.tight_layout()
    return _save(figure, path)


def scatter_plot(path, points, title="", xlabel="x_1", ylabel="x_2", grid=None):
    """Scatter of (n, 2) points, optionally over a filled contour of grid = (xs, ys, values)."""
    with rc_context(SVG_PARAMS):
        figure = Figure(figsize=(5, 5))
        axes = figure.subplots()
        if grid is not None:
            xs, ys, values = grid
            axes.contourf(xs, ys, values, levels=20)
        axes.scatter(points[:, 0], points[:, 1], s=2, color="black")
        axes.set_title(title)
        axes.set_xlabel(xlabel)
        axes.set_ylabel(ylabel)
        figure.tight_layout()
    return _save(figure, path)
