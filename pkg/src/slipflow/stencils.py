"""Shared finite-difference and spectral stencils on the polar grid.

Radial derivatives are second-order centered at cell centers.  The pole is
closed by the antipodal image: the ghost value at radius -dr/2 along theta
is the sample at +dr/2 along theta + pi, an exact grid shift for even
n_theta.  The outer edge uses either a one-sided quadratic stencil or, when
the boundary value at r = R is known, the quadratic ghost through the face.
"""
from __future__ import annotations

import numpy as np

from .grid import PolarGrid

__all__ = [
    "theta_derivative",
    "radial_derivative",
    "dealias_mask",
    "dealias",
    "extrapolate_to_boundary",
    "boundary_normal_derivative",
    "cartesian_gradient",
]


def _pole_ghost(values: np.ndarray) -> np.ndarray:
    # sample at (-dr/2, theta) = sample at (dr/2, theta + pi)
    return np.roll(values[:, 0], values.shape[0] // 2)


def theta_derivative(values: np.ndarray, grid: PolarGrid) -> np.ndarray:
    """Spectral d/dtheta along axis 0; the Nyquist mode derivative is zeroed."""
    hat = np.fft.rfft(values, axis=0)
    m = np.arange(hat.shape[0])
    if grid.n_theta % 2 == 0:
        m = m.copy()
        m[-1] = 0
    hat *= 1j * m[:, None]
    return np.fft.irfft(hat, n=grid.n_theta, axis=0)


def radial_derivative(values: np.ndarray, grid: PolarGrid,
                      boundary_value: np.ndarray | float | None = None) -> np.ndarray:
    """Centered radial derivative with the antipodal pole closure.

    With ``boundary_value`` given, the outermost row uses the quadratic ghost
    through the known face value at r = R (exact for radial quadratics);
    otherwise it falls back to the one-sided quadratic stencil.
    """
    dr = grid.dr
    out = np.empty_like(values)
    out[:, 1:-1] = (values[:, 2:] - values[:, :-2]) / (2.0 * dr)
    ghost = _pole_ghost(values)
    out[:, 0] = (values[:, 1] - ghost) / (2.0 * dr)
    if boundary_value is None:
        out[:, -1] = (3.0 * values[:, -1] - 4.0 * values[:, -2] + values[:, -3]) / (2.0 * dr)
    else:
        # ghost = (8 g + f_{n-2} - 6 f_{n-1}) / 3 puts the quadratic through the face
        ghost_outer = (8.0 * np.asarray(boundary_value) + values[:, -2] - 6.0 * values[:, -1]) / 3.0
        out[:, -1] = (ghost_outer - values[:, -2]) / (2.0 * dr)
    return out


def dealias_mask(n_theta: int) -> np.ndarray:
    """Boolean keep-mask over rfft modes implementing the 2/3 rule in theta."""
    m = np.arange(n_theta // 2 + 1)
    return m <= n_theta // 3


def dealias(values: np.ndarray, grid: PolarGrid) -> np.ndarray:
    hat = np.fft.rfft(values, axis=0)
    hat[~dealias_mask(grid.n_theta), :] = 0.0
    return np.fft.irfft(hat, n=grid.n_theta, axis=0)


def extrapolate_to_boundary(values: np.ndarray, grid: PolarGrid) -> np.ndarray:
    """Quadratic extrapolation of cell values to r = R (second order)."""
    return (15.0 * values[:, -1] - 10.0 * values[:, -2] + 3.0 * values[:, -3]) / 8.0


def boundary_normal_derivative(values: np.ndarray, grid: PolarGrid) -> np.ndarray:
    """One-sided quadratic d/dr at r = R from the three outermost cells."""
    return (2.0 * values[:, -1] - 3.0 * values[:, -2] + values[:, -3]) / grid.dr


def cartesian_gradient(values: np.ndarray, grid: PolarGrid) -> tuple[np.ndarray, np.ndarray]:
    """(d/dx, d/dy) of a scalar sample via the polar chain rule."""
    df_dr = radial_derivative(values, grid)
    df_dtheta_over_r = theta_derivative(values, grid) / grid.radii[None, :]
    cos = np.cos(grid.thetas)[:, None]
    sin = np.sin(grid.thetas)[:, None]
    return cos * df_dr - sin * df_dtheta_over_r, sin * df_dr + cos * df_dtheta_over_r
