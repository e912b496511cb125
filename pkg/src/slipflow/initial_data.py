"""Built-in initial vorticity fields.

Every case is closed-form and deterministic so each experiment runs with no
external data.  Constructors take the grid plus keyword parameters and
return a ScalarField; the registry at the bottom maps config names to them.
"""
from __future__ import annotations

import math

import numpy as np

from .grid import PolarGrid, ScalarField

__all__ = [
    "BUILTIN_FIELDS",
    "gaussian_blob",
    "random_smooth",
    "singular_patch",
    "solid_rotation",
    "two_vortex",
]


def solid_rotation(grid: PolarGrid, strength: float = 2.0) -> ScalarField:
    """Constant vorticity; the induced flow is rigid rotation."""
    return ScalarField(grid, np.full(grid.shape, float(strength)))


def _cell_xy(grid: PolarGrid) -> tuple[np.ndarray, np.ndarray]:
    return grid.cell_centers_xy()


def gaussian_blob(grid: PolarGrid, center: tuple[float, float] = (0.3, 0.0),
                  width: float = 0.15, amplitude: float = 1.0) -> ScalarField:
    """Offset Gaussian vortex."""
    if width <= 0.0:
        raise ValueError(f"width must be positive, got {width}")
    x, y = _cell_xy(grid)
    d2 = (x - center[0]) ** 2 + (y - center[1]) ** 2
    return ScalarField(grid, amplitude * np.exp(-d2 / (2.0 * width ** 2)))


def singular_patch(grid: PolarGrid, x0: tuple[float, float] = (0.3, 0.0),
                   gamma: float = 0.4) -> ScalarField:
    """Unbounded power singularity |x - x0|^(-gamma), p-integrable for
    gamma < 2/p; the default gamma = 0.4 lies in L^4 but in no L^inf ball.
    """
    if not 0.0 < gamma < 2.0:
        raise ValueError(f"singularity exponent must lie in (0, 2), got {gamma}")
    if math.hypot(*x0) >= grid.R:
        raise ValueError(f"singular point {x0} must be interior")
    x, y = _cell_xy(grid)
    d = np.hypot(x - x0[0], y - x0[1])
    if np.min(d) == 0.0:
        raise ValueError(f"x0 = {x0} falls on a cell center; shift it slightly")
    return ScalarField(grid, d ** (-gamma))


def two_vortex(grid: PolarGrid, separation: float = 0.6, width: float = 0.12,
               amplitude: float = 1.0) -> ScalarField:
    """Opposite-signed Gaussian pair on the x axis."""
    if width <= 0.0:
        raise ValueError(f"width must be positive, got {width}")
    if not 0.0 < separation < 2.0 * grid.R:
        raise ValueError(f"separation must fit in the disk, got {separation}")
    x, y = _cell_xy(grid)
    half = 0.5 * separation
    d2a = (x - half) ** 2 + y ** 2
    d2b = (x + half) ** 2 + y ** 2
    vals = amplitude * (np.exp(-d2a / (2.0 * width ** 2))
                        - np.exp(-d2b / (2.0 * width ** 2)))
    return ScalarField(grid, vals)


def random_smooth(grid: PolarGrid, seed: int = 7, background: float = 1.5) -> ScalarField:
    """Seeded smooth field: a constant plus three low-order azimuthal modes
    with polynomial radial profiles and random phases and signs.
    """
    rng = np.random.default_rng(seed)
    th = grid.thetas[:, None]
    r = grid.radii[None, :]
    om = np.full(grid.shape, float(background))
    for m, amp in ((1, 0.8), (2, 0.5), (3, 0.3)):
        phase = rng.uniform(0.0, 2.0 * math.pi)
        om += amp * rng.choice([-1.0, 1.0]) * (r ** m) * (1.0 - r ** 2) * np.cos(m * th + phase)
    return ScalarField(grid, om)


BUILTIN_FIELDS = {
    "solid_rotation": solid_rotation,
    "gaussian_blob": gaussian_blob,
    "singular_patch": singular_patch,
    "two_vortex": two_vortex,
    "random_smooth": random_smooth,
}
