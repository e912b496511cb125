"""Measured quantities for runs: norms, circulation, boundary identities,
the p-norm budget, the comparison check, and weak-form residuals.

Everything here is a pure function of fields or of recorded trajectories.
Boundary derivatives follow the one-sided stencils of the stencils module;
symmetric-gradient contractions are done in Cartesian components rebuilt
from (u_r, u_theta) so no pole bookkeeping is needed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .grid import BoundaryTrace, PolarGrid, ScalarField, VelocityField, curvature
from .elliptic import PoissonWorkspace, biot_savart
from .stencils import (boundary_normal_derivative, extrapolate_to_boundary,
                       radial_derivative, theta_derivative)

if TYPE_CHECKING:
    from .solver import Trajectory

__all__ = [
    "BudgetRow",
    "boundary_flux_integral",
    "circulation",
    "comparison_check",
    "dissipation_integral",
    "divergence_residual",
    "energy",
    "interpolation_exponent",
    "interpolation_ratio",
    "lp_norm",
    "max_boundary_vorticity",
    "navier_identity_residual",
    "velocity_gradient",
    "vorticity_budget",
    "weak_residual",
]


def lp_norm(field: ScalarField, p: float) -> float:
    """Grid-quadrature L^p norm of a scalar field."""
    if p < 1.0:
        raise ValueError(f"norm exponent must be >= 1, got {p}")
    return float(np.sum(np.abs(field.values) ** p * field.grid.quad_weights) ** (1.0 / p))


def energy(u: VelocityField) -> float:
    """L^2 norm of the velocity field."""
    return float(np.sqrt(np.sum((u.u_r ** 2 + u.u_theta ** 2) * u.grid.quad_weights)))


def circulation(data: ScalarField | BoundaryTrace) -> float:
    """Circulation, from either of its two equal representations.

    A vorticity field integrates over the disk; a slip trace integrates
    along the boundary.  The two routes agree by Stokes up to quadrature.
    """
    if isinstance(data, ScalarField):
        return float(np.sum(data.values * data.grid.quad_weights))
    if isinstance(data, BoundaryTrace):
        grid = data.grid
        return float(np.sum(data.values) * grid.R * grid.dtheta)
    raise TypeError(f"expected a ScalarField or BoundaryTrace, got {type(data).__name__}")


def velocity_gradient(u: VelocityField) -> np.ndarray:
    """Cartesian gradient tensor grad[i, j] = d(u_j)/d(x_i) on the grid."""
    u1, u2 = u.cartesian()
    g = np.empty((2, 2) + u.grid.shape)
    g[0, 0], g[1, 0] = _cart_grad(u1, u.grid)
    g[0, 1], g[1, 1] = _cart_grad(u2, u.grid)
    return g


def _cart_grad(values: np.ndarray, grid: PolarGrid) -> tuple[np.ndarray, np.ndarray]:
    df_dr = radial_derivative(values, grid)
    df_dt = theta_derivative(values, grid) / grid.radii[None, :]
    cos = np.cos(grid.thetas)[:, None]
    sin = np.sin(grid.thetas)[:, None]
    return cos * df_dr - sin * df_dt, sin * df_dr + cos * df_dt


def _boundary_gradients(u: VelocityField) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Boundary traces of the Cartesian gradient of each velocity component.

    Returns (d1u1, d2u1, d1u2, d2u2) over theta, built from one-sided radial
    and spectral tangential derivatives of the extrapolated components.
    """
    grid = u.grid
    u1, u2 = u.cartesian()
    cos, sin = np.cos(grid.thetas), np.sin(grid.thetas)
    out = []
    for comp in (u1, u2):
        dn = boundary_normal_derivative(comp, grid)
        edge = extrapolate_to_boundary(comp, grid)
        dtau = _trace_theta_derivative(edge, grid) / grid.R
        # grad f = n df/dn + tau df/dtau with n = (cos, sin), tau = (-sin, cos)
        out.append((cos * dn - sin * dtau, sin * dn + cos * dtau))
    (d1u1, d2u1), (d1u2, d2u2) = out
    return d1u1, d2u1, d1u2, d2u2


def _trace_theta_derivative(values: np.ndarray, grid: PolarGrid) -> np.ndarray:
    hat = np.fft.rfft(values)
    m = np.arange(hat.size)
    if grid.n_theta % 2 == 0:
        m = m.copy()
        m[-1] = 0
    return np.fft.irfft(1j * m * hat, n=grid.n_theta)


def navier_identity_residual(u: VelocityField, kappa: float | None = None) -> BoundaryTrace:
    """Residual of the boundary identity tying the symmetric gradient to
    vorticity and slip: n.(Du)_S.tau - omega/2 + kappa u.tau over theta.

    Holds exactly for any velocity that is tangent at the wall, so the
    returned trace measures pure discretization error.
    """
    grid = u.grid
    if kappa is None:
        kappa = curvature(grid)
    cos, sin = np.cos(grid.thetas), np.sin(grid.thetas)
    d1u1, d2u1, d1u2, d2u2 = _boundary_gradients(u)
    # n.(Du)_S.tau with n = (cos, sin), tau = (-sin, cos)
    sym12 = 0.5 * (d1u2 + d2u1)
    ndus_tau = (cos * (-sin) * d1u1 + cos * cos * sym12
                + sin * (-sin) * sym12 + sin * cos * d2u2)
    vort_b = d1u2 - d2u1
    u1_b = extrapolate_to_boundary(u.cartesian()[0], grid)
    u2_b = extrapolate_to_boundary(u.cartesian()[1], grid)
    slip_b = -sin * u1_b + cos * u2_b
    return BoundaryTrace(grid, ndus_tau - 0.5 * vort_b + kappa * slip_b)


def interpolation_exponent(p: float) -> float:
    """Exponent (p-2)/(2p-2) used in the sup-norm interpolation bound."""
    if p <= 2.0:
        raise ValueError(f"exponent is defined for p > 2, got {p}")
    return (p - 2.0) / (2.0 * p - 2.0)


def interpolation_ratio(u: VelocityField, p: float) -> float:
    """Monitored ratio ||u||_inf / (||u||_2^a ||u||_{W^{1,p}}^(1-a)).

    Reported, never asserted: the constant in the inequality is not pinned.
    """
    a = interpolation_exponent(p)
    sup = float(np.max(np.hypot(u.u_r, u.u_theta)))
    if sup == 0.0:
        return 0.0
    l2 = energy(u)
    w = u.grid.quad_weights
    grad = velocity_gradient(u)
    gnorm_p = np.sum((np.abs(grad) ** p * w).reshape(4, -1).sum(axis=0))
    unorm_p = np.sum((np.abs(u.u_r) ** p + np.abs(u.u_theta) ** p) * w)
    w1p = float((unorm_p + gnorm_p) ** (1.0 / p))
    return sup / (l2 ** a * w1p ** (1.0 - a))


def dissipation_integral(omega: ScalarField, p: float, nu: float,
                         boundary: BoundaryTrace | None = None) -> float:
    """Interior budget term -nu p (p-1) int |w|^{p-2} |grad w|^2; always <= 0."""
    if nu == 0.0:
        return 0.0
    grid = omega.grid
    bv = boundary.values if boundary is not None else None
    dwdr = radial_derivative(omega.values, grid, boundary_value=bv)
    dwdt = theta_derivative(omega.values, grid) / grid.radii[None, :]
    grad2 = dwdr ** 2 + dwdt ** 2
    dens = np.abs(omega.values) ** (p - 2.0) * grad2
    return float(-nu * p * (p - 1.0) * np.sum(dens * grid.quad_weights))


def boundary_flux_integral(omega: ScalarField, p: float, nu: float,
                           boundary: BoundaryTrace) -> float:
    """Boundary budget term nu p int_wall |w_b|^{p-2} w_b dw/dn dl."""
    if nu == 0.0:
        return 0.0
    grid = omega.grid
    dn = boundary_normal_derivative(omega.values, grid)
    wb = boundary.values
    dens = np.abs(wb) ** (p - 2.0) * wb * dn
    return float(nu * p * np.sum(dens) * grid.R * grid.dtheta)


def divergence_residual(u: VelocityField) -> float:
    """Max discrete divergence (1/r) d(r u_r)/dr + (1/r) d(u_theta)/dtheta."""
    grid = u.grid
    r = grid.radii[None, :]
    div = radial_derivative(r * u.u_r, grid) / r + theta_derivative(u.u_theta, grid) / r
    return float(np.max(np.abs(div)))


def max_boundary_vorticity(trajectory: "Trajectory") -> float:
    """Sup over recorded times and theta of the friction boundary vorticity.

    Reads the per-step series, which stores sup_theta |(2 kappa - alpha) u.tau|
    at every accepted step, not just at snapshot times.
    """
    return float(np.max(trajectory.series.boundary_max))


@dataclass(frozen=True)
class BudgetRow:
    """One interior time sample of the p-norm budget.

    d_dt_lp_pow is a centered difference of lp_pow; dissipation (<= 0) and
    boundary_flux are the recorded instantaneous terms; closure_error is
    d_dt_lp_pow - dissipation - boundary_flux.
    """

    t: float
    lp_pow: float
    d_dt_lp_pow: float
    dissipation: float
    boundary_flux: float
    closure_error: float


def vorticity_budget(trajectory: "Trajectory") -> list[BudgetRow]:
    """Budget rows at interior recorded steps of a trajectory.

    Needs the per-step series (recorded by every run); rows cover indices
    1 .. len-2 where the centered time difference exists.
    """
    s = trajectory.series
    t = s.times
    if t.size < 3:
        raise ValueError("budget needs at least three recorded steps")
    rows = []
    for k in range(1, t.size - 1):
        d_dt = (s.vorticity_pow[k + 1] - s.vorticity_pow[k - 1]) / (t[k + 1] - t[k - 1])
        diss = s.dissipation[k]
        flux = s.boundary_flux[k]
        rows.append(BudgetRow(t=float(t[k]), lp_pow=float(s.vorticity_pow[k]),
                              d_dt_lp_pow=float(d_dt), dissipation=float(diss),
                              boundary_flux=float(flux),
                              closure_error=float(d_dt - diss - flux)))
    return rows


def comparison_check(run_traj: "Trajectory", comparison_traj: "Trajectory",
                     time_tol: float = 1e-9) -> float:
    """Max over shared snapshots and cells of |omega| - omega_bar.

    Positive values are violations of the pointwise domination; the
    discretization-limited violation should shrink under refinement.
    """
    comp_times = {round(t / max(time_tol, 1e-300)): f for t, f in comparison_traj.snapshots}
    worst = -math.inf
    matched = 0
    for t, field in run_traj.snapshots:
        key = round(t / max(time_tol, 1e-300))
        other = comp_times.get(key)
        if other is None:
            continue
        matched += 1
        worst = max(worst, float(np.max(np.abs(field.values) - other.values)))
    if matched == 0:
        raise ValueError("no shared snapshot times between the trajectories")
    return worst


def _test_field(grid: PolarGrid, mode: int) -> tuple[VelocityField, np.ndarray, np.ndarray]:
    """Divergence-free test velocity from the potential (1-(r/R)^2)^2 r^m cos(m theta).

    Returns the field, its Cartesian components stacked (2, shape), and the
    Cartesian gradient tensor (2, 2, shape).  The potential has a double zero
    at the wall, so the field is tangent with zero slip.
    """
    r = grid.radii[None, :]
    th = grid.thetas[:, None]
    s2 = (r / grid.R) ** 2
    q = (1.0 - s2) ** 2 * r ** mode * np.cos(mode * th)
    # phi = grad-perp q, same orientation as the velocity map
    phi_r = -theta_derivative(q, grid) / r
    phi_t = radial_derivative(q, grid, boundary_value=0.0)
    phi = VelocityField(grid, phi_r, phi_t)
    p1, p2 = phi.cartesian()
    comp = np.stack([p1, p2])
    grad = np.empty((2, 2) + grid.shape)
    grad[0, 0], grad[1, 0] = _cart_grad(p1, grid)
    grad[0, 1], grad[1, 1] = _cart_grad(p2, grid)
    return phi, comp, grad


def weak_residual(trajectory: "Trajectory", nu: float, mode: int = 1) -> float:
    """Absolute weak-form defect of a trajectory against one test field.

    The test field is steady in shape with amplitude chi(t) = cos^2(pi t/2T),
    so chi(T) = 0; time integrals are trapezoid sums over snapshots.  The
    defect combines the time term, the transport term, the initial pairing,
    the symmetric-gradient viscous term, and the friction boundary term
    (identically zero for this family, which has no slip).
    """
    if mode not in (0, 1, 2):
        raise ValueError(f"test field mode must be 0, 1, or 2, got {mode}")
    snaps = trajectory.snapshots
    if len(snaps) < 5:
        raise ValueError(f"need at least 5 snapshots for time quadrature, got {len(snaps)}")
    grid = trajectory.config.grid
    T = trajectory.config.T
    w = grid.quad_weights
    phi, comp, grad = _test_field(grid, mode)
    sym_phi = 0.5 * (grad + np.swapaxes(grad, 0, 1))
    ws = PoissonWorkspace(grid)
    times = np.array([t for t, _ in snaps])
    integrand = np.empty(times.size)
    for k, (t, om) in enumerate(snaps):
        u = biot_savart(ws, om)
        u1, u2 = u.cartesian()
        chi = math.cos(math.pi * t / (2.0 * T)) ** 2
        dchi = -math.pi / (2.0 * T) * math.sin(math.pi * t / T)
        time_term = dchi * np.sum((u1 * comp[0] + u2 * comp[1]) * w)
        # u . (u . grad) phi = u_i u_j d_i phi_j, gradients scaled by chi
        adv = (u1 * (u1 * grad[0, 0] + u2 * grad[1, 0])
               + u2 * (u1 * grad[0, 1] + u2 * grad[1, 1]))
        adv_term = chi * np.sum(adv * w)
        if nu > 0.0:
            gu = velocity_gradient(u)
            sym_u = 0.5 * (gu + np.swapaxes(gu, 0, 1))
            visc = np.sum(sym_phi * sym_u, axis=(0, 1))
            visc_term = -2.0 * nu * chi * np.sum(visc * w)
        else:
            visc_term = 0.0
        integrand[k] = time_term + adv_term + visc_term
    total = float(np.trapezoid(integrand, times))
    # initial pairing at chi(0) = 1
    u0 = biot_savart(ws, snaps[0][1])
    u01, u02 = u0.cartesian()
    total += float(np.sum((u01 * comp[0] + u02 * comp[1]) * w))
    # friction boundary term: the test family has zero slip, so it vanishes
    return abs(total)
