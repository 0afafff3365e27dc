"""Matplotlib figure rendering for command artifacts.

Figures are rendered headless to PNG next to the delimited outputs. Styling
follows the conventions used throughout this problem area: elevation contours
from blue (low) to yellow (high), a green star for the start, a red star for
the goal, and path colors running green (small sigma) to red (large sigma).
Output bytes are deterministic: fixed figure geometry and a pinned Software
metadata tag.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.patches import Ellipse

_SAVE = {"dpi": 110, "metadata": {"Software": "trailplan"}}


def _new_axes(field, box=None):
    fig, ax = plt.subplots(figsize=(6.4, 5.2))
    a, b, c, d = box if box is not None else field.box
    xs = field.x_nodes()
    ys = field.y_nodes()
    ax.contourf(xs, ys, field.heights.T, levels=24, cmap="viridis")
    ax.contour(xs, ys, field.heights.T, levels=12, colors="k", linewidths=0.3, alpha=0.4)
    ax.set_xlim(a, b)
    ax.set_ylim(c, d)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_aspect("equal")
    return fig, ax


def _mark_endpoints(ax, x0, x_end):
    if x0 is not None:
        ax.plot(*x0, marker="*", color="lime", markersize=14, markeredgecolor="k", zorder=5)
    if x_end is not None:
        ax.plot(*x_end, marker="*", color="red", markersize=14, markeredgecolor="k", zorder=5)


def sigma_color(sigma: float, sigma_max: float):
    """Green for small sigma through red for large."""
    t = 0.0 if sigma_max <= 0 else min(max(sigma / sigma_max, 0.0), 1.0)
    return plt.get_cmap("RdYlGn_r")(0.1 + 0.8 * t)


def save_paths_figure(out, field, paths, x0=None, x_end=None, box=None,
                      ellipses=None, title=None):
    """Paths over terrain. ``paths`` is a list of (points, color, label, style);
    ``ellipses`` draws a one-standard-deviation envelope (centers, radii)."""
    fig, ax = _new_axes(field, box)
    if ellipses is not None:
        centers, radii = ellipses
        for (cx, cy), (rx, ry) in zip(centers, radii):
            if rx > 0 or ry > 0:
                ax.add_patch(Ellipse((cx, cy), 2 * rx, 2 * ry, facecolor="0.8",
                                     edgecolor="none", alpha=0.35, zorder=2))
    for points, color, label, style in paths:
        pts = np.asarray(points)
        ax.plot(pts[:, 0], pts[:, 1], style, color=color, label=label, lw=1.6, zorder=4)
    _mark_endpoints(ax, x0, x_end)
    if any(p[2] for p in paths):
        ax.legend(loc="best", fontsize=8)
    if title:
        ax.set_title(title)
    fig.savefig(out, **_SAVE)
    plt.close(fig)


def save_value_figure(out, field, vf, title=None):
    """Final value-function slice as filled contours with terrain isolines."""
    cfg = vf.config
    fig, ax = plt.subplots(figsize=(6.4, 5.2))
    xs, ys = cfg.x_nodes(), cfg.y_nodes()
    m = ax.contourf(xs, ys, vf.final.T, levels=30, cmap="magma")
    fig.colorbar(m, ax=ax, label="cost-to-go")
    ax.contour(field.x_nodes(), field.y_nodes(), field.heights.T, levels=10,
               colors="w", linewidths=0.4, alpha=0.6)
    _mark_endpoints(ax, None, cfg.x_end)
    ax.set_xlim(cfg.box[0], cfg.box[1])
    ax.set_ylim(cfg.box[2], cfg.box[3])
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    if title:
        ax.set_title(title)
    fig.savefig(out, **_SAVE)
    plt.close(fig)


def save_quiver_figure(out, field, points, dirs, degenerate, t, box=None):
    """Steering arrows at one time; degenerate samples are drawn as dots."""
    fig, ax = _new_axes(field, box)
    pts = np.asarray(points)
    dirs = np.asarray(dirs)
    degen = np.asarray(degenerate, dtype=bool)
    live = ~degen
    ax.quiver(pts[live, 0], pts[live, 1], dirs[live, 0], dirs[live, 1],
              color="w", width=0.004, scale=30, zorder=4)
    if degen.any():
        ax.plot(pts[degen, 0], pts[degen, 1], ".", color="0.7", ms=2, zorder=4)
    ax.set_title(f"control field at t = {t:g}")
    fig.savefig(out, **_SAVE)
    plt.close(fig)


def save_trace_figure(out, trace, T_star):
    """Bisection probes: horizon vs terminal distance, colored by outcome."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for T, ok, dist in trace:
        ax.plot(T, dist, "o", color="tab:green" if ok else "tab:red")
    ax.axvline(T_star, color="k", ls="--", lw=1, label=f"T* = {T_star:.4g}")
    ax.set_xlabel("horizon T")
    ax.set_ylabel("terminal distance")
    ax.legend()
    fig.savefig(out, **_SAVE)
    plt.close(fig)
