"""Figure rendering for run reports. Uses the Agg backend only; every
function writes a PNG to the given path and returns that path.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .grid import ScalarField

__all__ = ["budget_figure", "cauchy_figure", "field_figure", "series_figure",
           "sweep_figure"]


def _prepare(path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def field_figure(field: ScalarField, path: str | Path, label: str | None = None) -> Path:
    """Vorticity on the disk, cell-accurate (no interpolation across cells)."""
    path = _prepare(path)
    g = field.grid
    # pcolormesh wants cell edges; angular cells are centered on the node rays
    te = (np.arange(g.n_theta + 1) - 0.5) * g.dtheta
    re = np.arange(g.n_r + 1) * g.dr
    x = re[None, :] * np.cos(te[:, None])
    y = re[None, :] * np.sin(te[:, None])
    fig, ax = plt.subplots(figsize=(5.0, 4.2))
    mesh = ax.pcolormesh(x, y, field.values, shading="flat", cmap="RdBu_r")
    fig.colorbar(mesh, ax=ax, label="vorticity")
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    if label:
        ax.set_title(label)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def series_figure(trajectory, path: str | Path) -> Path:
    path = _prepare(path)
    s = trajectory.series
    fig, axes = plt.subplots(2, 2, figsize=(8.0, 5.6), sharex=True)
    panels = [
        ("vorticity_norm", f"||w||_{trajectory.config.p:g}"),
        ("velocity_norm", "||u||_2"),
        ("circulation", "circulation"),
        ("boundary_max", "max |w| on wall"),
    ]
    for ax, (attr, title) in zip(axes.flat, panels):
        ax.plot(s.times, getattr(s, attr), lw=1.2)
        ax.set_title(title, fontsize=10)
        ax.grid(alpha=0.3)
    for ax in axes[1]:
        ax.set_xlabel("t")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def sweep_figure(summary_rows: list, path: str | Path) -> Path:
    """Norm ratio against viscosity; flatness here is the uniform bound."""
    path = _prepare(path)
    rows = sorted(summary_rows, key=lambda r: r[0])
    nus = [r[0] for r in rows]
    ratios = [r[1] for r in rows]
    fig, ax = plt.subplots(figsize=(5.2, 3.8))
    ax.semilogx(nus, ratios, "o-", lw=1.2)
    ax.set_xlabel("viscosity")
    ax.set_ylabel("max_t ||w||_p / (||w0||_p + ||u0||_2)")
    ax.grid(alpha=0.3, which="both")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def cauchy_figure(cauchy_table: list, path: str | Path) -> Path:
    path = _prepare(path)
    nus = [row[0] for row in cauchy_table]
    gaps = [row[2] for row in cauchy_table]
    fig, ax = plt.subplots(figsize=(5.2, 3.8))
    ax.loglog(nus, gaps, "s-", lw=1.2)
    ax.set_xlabel("larger viscosity of the pair")
    ax.set_ylabel("max_t ||u_high - u_low||_2")
    ax.grid(alpha=0.3, which="both")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def budget_figure(rows: list, path: str | Path) -> Path:
    """Measured d/dt of the p-th power against dissipation + wall flux."""
    path = _prepare(path)
    t = [r[0] for r in rows]
    lhs = [r[2] for r in rows]
    rhs = [r[3] + r[4] for r in rows]
    fig, ax = plt.subplots(figsize=(5.2, 3.8))
    ax.plot(t, lhs, "o-", lw=1.2, label="d/dt of ||w||_p^p")
    ax.plot(t, rhs, "x--", lw=1.2, label="dissipation + wall flux")
    ax.set_xlabel("t")
    ax.legend(fontsize=9)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
