"""SVG figures: delta-line stem plots, field heatmaps and negativity curves.

Figures are built on bare :class:`matplotlib.figure.Figure` objects (no
pyplot state) and written with a fixed hash salt and no date stamp, so the
same data always produce the same bytes.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence

import matplotlib
import numpy as np
from matplotlib.colors import TwoSlopeNorm
from matplotlib.figure import Figure

POSITIVE = "#c0392b"
NEGATIVE = "#2c5aa0"
CMAP = "RdBu_r"  # white at the centre, red above, blue below
NEGATIVE_SCALE = 10.0

_RC = {
    "svg.hashsalt": "macrovis",
    "svg.fonttype": "path",
    "font.size": 9,
    "axes.labelsize": 10,
    "figure.dpi": 100,
}


def _save(fig: Figure, path) -> Path:
    path = Path(path)
    with matplotlib.rc_context(_RC):
        fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    return path


def _pretty(label: str) -> str:
    return "$" + label.replace("^st", "^{st}").replace("(1)", "^{(1)}") + "$" \
        if label.startswith("M_") else label


def stem3d(kernel, path, negative_scale: Optional[float] = NEGATIVE_SCALE,
           title: str = "") -> Path:
    """Vertical lines of height ``K(A', B')`` at each kernel point.

    With ``negative_scale`` the negative lines are drawn ``negative_scale``
    times taller and the legend says so.
    """
    if kernel.m != 2:
        raise ValueError("stem plots need a two-operator kernel")
    fig = Figure(figsize=(5.2, 4.4))
    ax = fig.add_subplot(projection="3d")
    xs, ys = np.meshgrid(kernel.axes[0], kernel.axes[1], indexing="ij")
    w = kernel.weights
    scale = negative_scale or 1.0
    for sign, color, name in ((1, POSITIVE, "K > 0"), (-1, NEGATIVE, "K < 0")):
        mask = (w * sign) > 0
        if not mask.any():
            continue
        hs = w[mask] * (scale if sign < 0 else 1.0)
        for x, y, h in zip(xs[mask], ys[mask], hs):
            ax.plot([x, x], [y, y], [0, h], color=color, linewidth=1.2)
        label = name if sign > 0 or scale == 1.0 else f"{name} (x{scale:g})"
        ax.plot([], [], color=color, label=label)
    ax.set_xlabel(_pretty(kernel.labels[0]))
    ax.set_ylabel(_pretty(kernel.labels[1]))
    ax.set_zlabel("weight")
    ax.legend(loc="upper left", fontsize=8, frameon=False)
    if title:
        ax.set_title(title)
    return _save(fig, path)


def heatmap(field, path, negative_scale: Optional[float] = None, title: str = "") -> Path:
    """Field on a diverging colour map pinned to white at 0."""
    if len(field.grids) != 2:
        raise ValueError("heatmaps need a two-operator field")
    vals = np.array(field.values, dtype=float)
    if negative_scale:
        vals = np.where(vals < 0, vals * negative_scale, vals)
    top = max(float(np.abs(vals).max()), 1e-300)
    fig = Figure(figsize=(5.0, 4.2))
    ax = fig.add_subplot()
    ga, gb = field.grids
    ha, hb = (ga[1] - ga[0]) / 2, (gb[1] - gb[0]) / 2
    # an embedded image keeps the file small; per-cell vector patches do not
    mesh = ax.imshow(vals.T, origin="lower", interpolation="nearest", cmap=CMAP,
                     norm=TwoSlopeNorm(vcenter=0.0, vmin=-top, vmax=top),
                     extent=(ga[0] - ha, ga[-1] + ha, gb[0] - hb, gb[-1] + hb))
    cb = fig.colorbar(mesh, ax=ax)
    cb.set_label("Xi" + (f" (negative x{negative_scale:g})" if negative_scale else ""))
    ax.set_xlabel(_pretty(field.labels[0]))
    ax.set_ylabel(_pretty(field.labels[1]))
    ax.set_title(title or f"W = {field.W:g}")
    fig.tight_layout()
    return _save(fig, path)


def curve(xs: Sequence[float], ys: Sequence[float], path, xlabel: str = "W",
          ylabel: str = "I", title: str = "", series: Optional[dict] = None) -> Path:
    """Line plot of one curve, or several when ``series`` maps name -> (xs, ys)."""
    fig = Figure(figsize=(4.8, 3.4))
    ax = fig.add_subplot()
    if series is None:
        series = {"": (xs, ys)}
    for name, (x, y) in series.items():
        ax.plot(x, y, marker="o", markersize=3, linewidth=1.2, label=name or None)
    ax.axhline(0.0, color="0.6", linewidth=0.8)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if len(series) > 1:
        ax.legend(frameon=False)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return _save(fig, path)
