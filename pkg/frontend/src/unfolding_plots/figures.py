"""The five figure kinds, rendered from the documented CSV files.

Rendering is split in two: :func:`extract_series` turns a spec's input
files into the exact data series the figure will draw (pure, testable
against golden fixtures), and :func:`render` draws those series with a
non-interactive backend.  Axis content is derived solely from the inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from . import schemas

__all__ = ["FigureSpec", "KINDS", "extract_series", "render"]

KINDS = ("trace", "ess-box", "rank-scatter", "response-curve", "prior-hist")


@dataclass
class FigureSpec:
    kind: str
    input: str
    output: str
    input_b: str | None = None  # second ranks file for rank-scatter
    column: str = "total"  # trace column
    bins: int = 40  # prior-hist resolution
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "rank-scatter" and not self.input_b:
            raise ValueError("rank-scatter needs a second ranks file (input_b)")


def extract_series(spec: FigureSpec) -> dict:
    """The numeric series the figure plots, keyed by role."""
    if spec.kind == "trace":
        iters, values = schemas.load_trace(spec.input, spec.column)
        return {"x": iters, "y": values}
    if spec.kind == "ess-box":
        return {"values": schemas.load_ess(spec.input)}
    if spec.kind == "rank-scatter":
        ids_a, ranks_a = schemas.load_ranks(spec.input)
        ids_b, ranks_b = schemas.load_ranks(spec.input_b)
        if ids_a != ids_b:
            raise schemas.SchemaError(
                f"{spec.input_b}: legislator ids do not match {spec.input}"
            )
        return {"x": ranks_a, "y": ranks_b}
    if spec.kind == "response-curve":
        beta, mean, lower, upper = schemas.load_curve(spec.input)
        return {"x": beta, "mean": mean, "lower": lower, "upper": upper}
    # prior-hist
    theta = schemas.load_prior_theta(spec.input)
    edges = np.linspace(0.0, 1.0, spec.bins + 1)
    counts, _ = np.histogram(theta, bins=edges)
    return {"edges": edges, "counts": counts.astype(np.int64)}


def render(spec: FigureSpec) -> dict:
    """Render the figure to ``spec.output``; returns the plotted series."""
    series = extract_series(spec)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    try:
        if spec.kind == "trace":
            ax.plot(series["x"], series["y"], lw=0.8, color="#1f3b73")
            ax.set_xlabel(spec.xlabel or "iteration")
            ax.set_ylabel(spec.ylabel or spec.column)
        elif spec.kind == "ess-box":
            ax.boxplot(series["values"], widths=0.5)
            ax.set_ylabel(spec.ylabel or "effective sample size")
            ax.set_xticks([])
        elif spec.kind == "rank-scatter":
            lo = min(series["x"].min(), series["y"].min())
            hi = max(series["x"].max(), series["y"].max())
            ax.plot([lo, hi], [lo, hi], color="0.6", lw=0.8, zorder=1)
            ax.scatter(series["x"], series["y"], s=12, color="#1f3b73", zorder=2)
            ax.set_xlabel(spec.xlabel or "posterior mean rank (a)")
            ax.set_ylabel(spec.ylabel or "posterior mean rank (b)")
        elif spec.kind == "response-curve":
            ax.fill_between(series["x"], series["lower"], series["upper"], alpha=0.25, color="#1f3b73")
            ax.plot(series["x"], series["mean"], color="#1f3b73")
            ax.set_ylim(-0.02, 1.02)
            ax.set_xlabel(spec.xlabel or "position")
            ax.set_ylabel(spec.ylabel or "P(affirmative)")
        else:  # prior-hist
            widths = np.diff(series["edges"])
            ax.bar(series["edges"][:-1], series["counts"], width=widths, align="edge",
                   color="#1f3b73", edgecolor="white", linewidth=0.3)
            ax.set_xlabel(spec.xlabel or "P(affirmative)")
            ax.set_ylabel(spec.ylabel or "count")
        if spec.title:
            ax.set_title(spec.title)
        fig.tight_layout()
        fig.savefig(spec.output, dpi=150)
    finally:
        plt.close(fig)
    return series
