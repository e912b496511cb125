"""Streamfunction solves and velocity recovery on the disk.

The Poisson problem lap(psi) = omega with psi = 0 on r = R is solved mode by
mode after an FFT in theta.  The radial operator is the conservative flux
form (1/r) d/dr(r d/dr) - m^2/r^2 on cell centers; the inner face of the
first cell has zero radius so the pole needs no extra condition, which is
equivalent to the per-mode parity closure psi_m(-r) = (-1)^m psi_m(r).  The
outer row eliminates a quadratic ghost through the Dirichlet face value, so
radially quadratic streamfunctions are solved exactly and the discrete
circulation identity (boundary integral of the slip equals the vorticity
integral) holds to machine precision.

Velocity follows u = (-d/dy, d/dx) psi, i.e. u_r = -(1/r) d(psi)/dtheta and
u_theta = +d(psi)/dr, the orientation that turns omega = 2 into the
counterclockwise rigid rotation (-y, x).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import BoundaryTrace, FrictionProfile, PolarGrid, ScalarField, VelocityField
from .stencils import radial_derivative

__all__ = [
    "PoissonWorkspace",
    "TridiagonalFactors",
    "radial_operator_coefficients",
    "factor_tridiagonal",
    "solve_tridiagonal",
    "solve_poisson",
    "velocity",
    "slip_velocity",
    "biot_savart",
    "navier_boundary_vorticity",
    "green_function",
    "green_direct",
]


def radial_operator_coefficients(grid: PolarGrid) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-mode tridiagonal bands (lower, diag, upper) of the radial operator.

    Shapes are (n_modes, n_r) with modes m = 0 .. n_theta/2 (rfft layout).
    No outer boundary closure is applied; consumers fold their own ghost
    into the last row.
    """
    r = grid.radii
    dr = grid.dr
    faces_in = r - 0.5 * dr
    faces_out = r + 0.5 * dr
    m = np.arange(grid.n_theta // 2 + 1, dtype=float)
    lower = np.tile(faces_in / (r * dr * dr), (m.size, 1))
    upper = np.tile(faces_out / (r * dr * dr), (m.size, 1))
    diag = -(faces_in + faces_out)[None, :] / (r * dr * dr)[None, :] \
        - (m[:, None] ** 2) / (r ** 2)[None, :]
    lower[:, 0] = 0.0  # inner face radius is zero: pole closed naturally
    return lower, diag, upper


@dataclass(frozen=True)
class TridiagonalFactors:
    """LU factors of a batch of tridiagonal systems, vectorized over modes."""

    lower: np.ndarray
    inv_diag: np.ndarray
    upper_scaled: np.ndarray

    @property
    def n(self) -> int:
        return self.lower.shape[1]


def factor_tridiagonal(lower: np.ndarray, diag: np.ndarray, upper: np.ndarray) -> TridiagonalFactors:
    n = diag.shape[1]
    inv_diag = np.empty_like(diag)
    upper_scaled = np.empty_like(diag)
    inv_diag[:, 0] = 1.0 / diag[:, 0]
    upper_scaled[:, 0] = upper[:, 0] * inv_diag[:, 0]
    for j in range(1, n):
        d = diag[:, j] - lower[:, j] * upper_scaled[:, j - 1]
        inv_diag[:, j] = 1.0 / d
        if j < n - 1:
            upper_scaled[:, j] = upper[:, j] * inv_diag[:, j]
        else:
            upper_scaled[:, j] = 0.0
    return TridiagonalFactors(lower=lower, inv_diag=inv_diag, upper_scaled=upper_scaled)


def solve_tridiagonal(factors: TridiagonalFactors, rhs: np.ndarray) -> np.ndarray:
    n = factors.n
    y = np.empty_like(rhs)
    y[:, 0] = rhs[:, 0] * factors.inv_diag[:, 0]
    for j in range(1, n):
        y[:, j] = (rhs[:, j] - factors.lower[:, j] * y[:, j - 1]) * factors.inv_diag[:, j]
    for j in range(n - 2, -1, -1):
        y[:, j] -= factors.upper_scaled[:, j] * y[:, j + 1]
    return y


class PoissonWorkspace:
    """Cached per-mode factorizations for the homogeneous Dirichlet solve."""

    def __init__(self, grid: PolarGrid):
        self.grid = grid
        lower, diag, upper = radial_operator_coefficients(grid)
        # quadratic ghost through psi(R) = 0:
        # ghost = (f_{n-2} - 6 f_{n-1}) / 3 modifies the last row
        lower = lower.copy()
        diag = diag.copy()
        upper = upper.copy()
        c_last = upper[:, -1].copy()
        lower[:, -1] += c_last / 3.0
        diag[:, -1] -= 2.0 * c_last
        upper[:, -1] = 0.0
        self.factors = factor_tridiagonal(lower, diag, upper)


def solve_poisson(workspace: PoissonWorkspace, omega: ScalarField) -> ScalarField:
    """Streamfunction with lap(psi) = omega and psi = 0 at r = R."""
    if omega.grid is not workspace.grid and omega.grid != workspace.grid:
        raise ValueError("field grid does not match workspace grid")
    rhs = np.fft.rfft(omega.values, axis=0)  # (modes, n_r)
    psi_hat = solve_tridiagonal(workspace.factors, rhs)
    psi = np.fft.irfft(psi_hat, n=workspace.grid.n_theta, axis=0)
    return ScalarField(workspace.grid, psi)


def _radial_derivative_modes(psi_hat: np.ndarray, grid: PolarGrid) -> np.ndarray:
    """d/dr per mode with parity pole ghost and the psi(R) = 0 face ghost."""
    dr = grid.dr
    out = np.empty_like(psi_hat)
    out[:, 1:-1] = (psi_hat[:, 2:] - psi_hat[:, :-2]) / (2.0 * dr)
    m = np.arange(psi_hat.shape[0])
    parity = np.where(m % 2 == 0, 1.0, -1.0)
    out[:, 0] = (psi_hat[:, 1] - parity * psi_hat[:, 0]) / (2.0 * dr)
    ghost = (psi_hat[:, -2] - 6.0 * psi_hat[:, -1]) / 3.0
    out[:, -1] = (ghost - psi_hat[:, -2]) / (2.0 * dr)
    return out


def velocity(psi: ScalarField) -> VelocityField:
    """u = (-d/dy, d/dx) psi for a streamfunction vanishing at r = R."""
    grid = psi.grid
    psi_hat = np.fft.rfft(psi.values, axis=0)  # (modes, n_r)
    m = np.arange(psi_hat.shape[0], dtype=float)
    if grid.n_theta % 2 == 0:
        m[-1] = 0.0
    ur_hat = -(1j * m[:, None]) * psi_hat / grid.radii[None, :]
    u_r = np.fft.irfft(ur_hat, n=grid.n_theta, axis=0)
    ut_hat = _radial_derivative_modes(psi_hat, grid)
    u_theta = np.fft.irfft(ut_hat, n=grid.n_theta, axis=0)
    return VelocityField(grid, u_r, u_theta)


def slip_velocity(psi: ScalarField) -> BoundaryTrace:
    """Tangential velocity u . tau on r = R.

    Quadratic one-sided extrapolation of d(psi)/dr through psi(R) = 0 and the
    two outermost cells; exact for radially quadratic streamfunctions.
    """
    grid = psi.grid
    v = psi.values
    slip = (v[:, -2] - 9.0 * v[:, -1]) / (3.0 * grid.dr)
    return BoundaryTrace(grid, slip)


def biot_savart(workspace: PoissonWorkspace, omega: ScalarField) -> VelocityField:
    """Velocity induced by a vorticity field, via the streamfunction solve."""
    return velocity(solve_poisson(workspace, omega))


def navier_boundary_vorticity(slip: BoundaryTrace, alpha: FrictionProfile,
                              kappa: float) -> BoundaryTrace:
    """Boundary vorticity (2 kappa - alpha) u . tau of the friction condition."""
    if alpha.grid != slip.grid:
        raise ValueError("friction profile grid does not match trace grid")
    return BoundaryTrace(slip.grid, (2.0 * kappa - alpha.values) * slip.values)


def green_function(x: np.ndarray, y: np.ndarray, R: float) -> float:
    """Dirichlet Green function of the disk by the image construction.

    G(x, y) = (1/2pi) [ln|x - y| - ln(|y| |x - y*| / R)] with y* = R^2 y/|y|^2;
    the y -> 0 limit is (1/2pi) ln(|x|/R).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ay = float(np.hypot(y[0], y[1]))
    d = float(np.hypot(x[0] - y[0], x[1] - y[1]))
    if d == 0.0:
        raise ValueError("Green function evaluated on the diagonal")
    if ay < 1e-14 * R:
        return math.log(float(np.hypot(x[0], x[1])) / R) / (2.0 * math.pi)
    ystar = (R * R / (ay * ay)) * y
    dstar = float(np.hypot(x[0] - ystar[0], x[1] - ystar[1]))
    return (math.log(d) - math.log(ay * dstar / R)) / (2.0 * math.pi)


def sample_field(field: ScalarField, points_xy: np.ndarray) -> np.ndarray:
    """Bilinear sample of a field at interior xy points (periodic in theta)."""
    grid = field.grid
    pts = np.atleast_2d(np.asarray(points_xy, dtype=float))
    th = np.arctan2(pts[:, 1], pts[:, 0]) % (2.0 * math.pi)
    rr = np.hypot(pts[:, 0], pts[:, 1])
    if np.any(rr > grid.R):
        raise ValueError("sample points must lie inside the disk")
    ti = th / grid.dtheta
    i0 = np.floor(ti).astype(int) % grid.n_theta
    i1 = (i0 + 1) % grid.n_theta
    ft = ti - np.floor(ti)
    rj = rr / grid.dr - 0.5
    j0 = np.clip(np.floor(rj).astype(int), 0, grid.n_r - 2)
    fr = np.clip(rj - j0, 0.0, 1.0)
    v = field.values
    return (v[i0, j0] * (1 - ft) * (1 - fr) + v[i1, j0] * ft * (1 - fr)
            + v[i0, j0 + 1] * (1 - ft) * fr + v[i1, j0 + 1] * ft * fr)


def sample_velocity(u: VelocityField, points_xy: np.ndarray) -> np.ndarray:
    """Cartesian velocity components sampled bilinearly at xy points."""
    ur = sample_field(ScalarField(u.grid, u.u_r), points_xy)
    ut = sample_field(ScalarField(u.grid, u.u_theta), points_xy)
    pts = np.atleast_2d(np.asarray(points_xy, dtype=float))
    th = np.arctan2(pts[:, 1], pts[:, 0])
    cos, sin = np.cos(th), np.sin(th)
    return np.stack([ur * cos - ut * sin, ur * sin + ut * cos], axis=1)


def _linear_source_velocity(R: float, c: float, g1: float, g2: float,
                            px: np.ndarray, py: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Exact disk velocity of the affine vorticity c + g1 y1 + g2 y2."""
    rr2 = px * px + py * py
    u1 = -0.5 * c * py - 0.25 * g1 * px * py - 0.125 * g2 * (rr2 - R * R + 2.0 * py * py)
    u2 = 0.5 * c * px + 0.125 * g1 * (rr2 - R * R + 2.0 * px * px) + 0.25 * g2 * px * py
    return u1, u2


def green_direct(grid: PolarGrid, omega: ScalarField, probes: np.ndarray) -> np.ndarray:
    """Direct midpoint-quadrature velocities at probe points (oracle path).

    The kernel singularity is subtracted before quadrature: the affine part
    of omega at the probe (value plus estimated gradient) induces a velocity
    known in closed form, and only the remainder is quadratured against
    grad_perp G.  The probe's own cell is excluded, which is harmless once
    the integrand is bounded; probes must be interior and at least half a
    cell away from every quadrature node.  O(N^2) per probe.
    """
    if omega.grid != grid:
        raise ValueError("field grid does not match")
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    if probes.shape[1] != 2:
        raise ValueError("probes must be an (n, 2) array of xy points")
    R = grid.R
    xc, yc = grid.cell_centers_xy()
    xs, ys = xc.ravel(), yc.ravel()
    w_flat = grid.quad_weights.ravel()
    om_flat = omega.values.ravel()
    r_src = np.hypot(xs, ys)
    # image sources: y* = R^2 y / |y|^2 (no source radius is 0 on this grid)
    scale = (R * R) / (r_src * r_src)
    xs_im, ys_im = xs * scale, ys * scale
    om_probe = sample_field(omega, probes)
    d = 1.5 * grid.dr
    grad1 = (sample_field(omega, probes + [d, 0.0])
             - sample_field(omega, probes - [d, 0.0])) / (2.0 * d)
    grad2 = (sample_field(omega, probes + [0.0, d])
             - sample_field(omega, probes - [0.0, d])) / (2.0 * d)
    out = np.empty_like(probes)
    for k, (px, py) in enumerate(probes):
        if math.hypot(px, py) >= R - 2.0 * d:
            raise ValueError(f"probe {px, py} too close to the boundary")
        dx, dy = px - xs, py - ys
        d2 = dx * dx + dy * dy
        if np.any(d2 < (0.45 * grid.dr) ** 2):
            raise ValueError(f"probe {px, py} closer than half a cell to a source node")
        near = d2 < (0.5 * grid.dr) ** 2
        d2s = np.where(near, 1.0, d2)
        dxi, dyi = px - xs_im, py - ys_im
        d2i = dxi * dxi + dyi * dyi
        # u = (-dG/dy, dG/dx) applied to the de-singularized source
        gx = dx / d2s - dxi / d2i
        gy = dy / d2s - dyi / d2i
        gx[near] = 0.0
        gy[near] = 0.0
        c = om_probe[k] - grad1[k] * px - grad2[k] * py
        src = (om_flat - c - grad1[k] * xs - grad2[k] * ys) * w_flat
        u1, u2 = _linear_source_velocity(R, c, grad1[k], grad2[k], px, py)
        out[k, 0] = u1 - np.sum(gy * src) / (2.0 * math.pi)
        out[k, 1] = u2 + np.sum(gx * src) / (2.0 * math.pi)
    return out


def divergence(u: VelocityField) -> np.ndarray:
    """(1/r) d/dr(r u_r) + (1/r) d/dtheta(u_theta) with the shared stencils."""
    from .stencils import theta_derivative

    grid = u.grid
    r = grid.radii[None, :]
    term_r = radial_derivative(r * u.u_r, grid) / r
    term_t = theta_derivative(u.u_theta, grid) / r
    return term_r + term_t
