"""Time integration of the vorticity equation on the disk with the friction
boundary condition, plus the frozen-velocity comparison problem and a 1D
radial reference.

One step is IMEX: a Heun predictor for the conservative advection term, then
Crank-Nicolson diffusion per angular mode with the boundary vorticity
(2 kappa - alpha) u.tau taken from the advected field's streamfunction and
optionally refreshed from the diffused field (corrector passes).  The
boundary row of the diffusion operator uses the linear ghost
2 w_b - w_outermost.  At nu = 0 the diffusion stage is skipped entirely and
no boundary condition is applied; transport needs none since u.n = 0.

Step size follows the CFL policy dt = min(dt_max, cfl / max(|u_r|/dr +
|u_theta|/(r dtheta))), clipped so requested snapshot times and the final
time are hit exactly.  All reductions have fixed order, so a run is
deterministic for a given config and data.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

import numpy as np

from .grid import (BoundaryTrace, FrictionProfile, PolarGrid, ScalarField,
                   VelocityField, curvature)
from .elliptic import (PoissonWorkspace, TridiagonalFactors, factor_tridiagonal,
                       navier_boundary_vorticity, radial_operator_coefficients,
                       slip_velocity, solve_poisson, solve_tridiagonal, velocity)
from .diagnostics import (boundary_flux_integral, circulation,
                          dissipation_integral, energy, lp_norm)
from .stencils import dealias, theta_derivative

__all__ = [
    "SolverConfig",
    "SolverError",
    "SolverState",
    "SeriesLog",
    "Trajectory",
    "advective_tendency",
    "comparison_lockstep",
    "comparison_solve",
    "radial_reference",
    "run",
    "run_euler",
    "step",
]


class SolverError(RuntimeError):
    """Integration aborted; the message carries time and step diagnostics."""


@dataclass(frozen=True)
class SolverConfig:
    """Run parameters; immutable and hashable apart from the profile."""

    grid: PolarGrid
    nu: float
    alpha: FrictionProfile
    T: float
    p: float = 4.0
    cfl: float = 0.4
    dt_max: float = 5e-3
    corrector_passes: int = 1
    snapshot_times: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.nu < 0.0:
            raise ValueError(f"viscosity must be >= 0, got {self.nu}")
        if self.T <= 0.0:
            raise ValueError(f"final time must be positive, got {self.T}")
        if not 0.0 < self.cfl < 1.0:
            raise ValueError(f"Courant number must lie in (0, 1), got {self.cfl}")
        if self.p <= 2.0:
            raise ValueError(f"norm exponent must exceed 2, got {self.p}")
        if self.dt_max <= 0.0:
            raise ValueError(f"dt cap must be positive, got {self.dt_max}")
        if self.corrector_passes < 0:
            raise ValueError("corrector pass count must be >= 0")
        if self.alpha.grid != self.grid:
            raise ValueError("friction profile lives on a different grid")
        ts = tuple(float(t) for t in self.snapshot_times)
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("snapshot times must be strictly increasing")
        if ts and (ts[0] <= 0.0 or ts[-1] > self.T * (1 + 1e-12)):
            raise ValueError("snapshot times must lie in (0, T]")
        object.__setattr__(self, "snapshot_times", ts)

    @property
    def kappa(self) -> float:
        return curvature(self.grid)


@dataclass(frozen=True)
class SolverState:
    """Instantaneous state; psi, u, slip are caches consistent with omega."""

    t: float
    omega: ScalarField
    psi: ScalarField
    u: VelocityField
    slip: BoundaryTrace

    @classmethod
    def from_vorticity(cls, omega: ScalarField, t: float = 0.0,
                       workspace: PoissonWorkspace | None = None) -> "SolverState":
        ws = workspace if workspace is not None else PoissonWorkspace(omega.grid)
        psi = solve_poisson(ws, omega)
        return cls(t=t, omega=omega, psi=psi, u=velocity(psi), slip=slip_velocity(psi))


@dataclass(frozen=True)
class SeriesLog:
    """Per-step diagnostic series, one entry per accepted step plus t = 0."""

    times: np.ndarray
    vorticity_norm: np.ndarray
    vorticity_pow: np.ndarray
    velocity_norm: np.ndarray
    circulation: np.ndarray
    boundary_max: np.ndarray
    dissipation: np.ndarray
    boundary_flux: np.ndarray


@dataclass(frozen=True)
class Trajectory:
    """Recorded outcome of a run: snapshots plus dense diagnostic series."""

    config: SolverConfig
    snapshots: tuple[tuple[float, ScalarField], ...]
    series: SeriesLog


def advective_tendency(omega: ScalarField, u: VelocityField) -> ScalarField:
    """Conservative transport tendency -div(u omega).

    Azimuthal flux is spectral with the 2/3 rule applied to the product;
    radial flux is a centered face average with both end faces zero (the
    inner face has radius zero, the wall is impermeable), which conserves
    the vorticity integral to machine precision.
    """
    grid = omega.grid
    if u.grid != grid:
        raise ValueError("velocity grid does not match vorticity grid")
    r = grid.radii[None, :]
    flux_t = dealias(u.u_theta * omega.values, grid)
    div_t = theta_derivative(flux_t, grid) / r
    flux_r = dealias(u.u_r * omega.values, grid)
    faces = grid.radii + 0.5 * grid.dr
    h = np.zeros((grid.n_theta, grid.n_r + 1))
    h[:, 1:-1] = 0.5 * (flux_r[:, :-1] + flux_r[:, 1:]) * faces[None, :-1]
    div_r = (h[:, 1:] - h[:, :-1]) / (r * grid.dr)
    return ScalarField(grid, -(div_t + div_r))


def _cfl_dt(u: VelocityField, cfl: float, dt_max: float) -> float:
    grid = u.grid
    r = grid.radii[None, :]
    speed = np.abs(u.u_r) / grid.dr + np.abs(u.u_theta) / (r * grid.dtheta)
    fastest = float(np.max(speed))
    if not math.isfinite(fastest):
        raise SolverError("velocity field is not finite; aborting")
    if fastest == 0.0:
        return dt_max
    return min(dt_max, cfl / fastest)


class _DiffusionOperator:
    """Per-mode Crank-Nicolson apparatus for one (grid, nu dt) pair.

    The boundary row folds the linear ghost 2 w_b - w_last into the operator;
    the ghost coefficient c_last reappears in the Dirichlet forcing.
    """

    def __init__(self, grid: PolarGrid, s: float):
        lower, diag, upper = radial_operator_coefficients(grid)
        self.c_last = upper[:, -1].copy()
        diag = diag.copy()
        upper = upper.copy()
        diag[:, -1] -= self.c_last
        upper[:, -1] = 0.0
        self.lower, self.diag, self.upper = lower, diag, upper
        self.s = s
        self.factors: TridiagonalFactors = factor_tridiagonal(
            -s * lower, 1.0 - s * diag, -s * upper)

    def advance(self, w_hat: np.ndarray, wb_hat: np.ndarray) -> np.ndarray:
        s = self.s
        rhs = w_hat + s * (self.diag * w_hat)
        rhs[:, 1:] += s * self.lower[:, 1:] * w_hat[:, :-1]
        rhs[:, :-1] += s * self.upper[:, :-1] * w_hat[:, 1:]
        rhs[:, -1] += 4.0 * s * self.c_last * wb_hat
        return solve_tridiagonal(self.factors, rhs)


def _diffuse(w_adv: np.ndarray, wb: np.ndarray, op: _DiffusionOperator,
             grid: PolarGrid) -> np.ndarray:
    w_hat = np.fft.rfft(w_adv, axis=0)
    wb_hat = np.fft.rfft(wb)
    out = op.advance(w_hat, wb_hat)
    return np.fft.irfft(out, n=grid.n_theta, axis=0)


def _advance(state: SolverState, cfg: SolverConfig, ws: PoissonWorkspace,
             dt: float,
             companion: tuple[np.ndarray, np.ndarray] | None = None):
    """One IMEX step; with a companion (values, wall trace), the dominating
    field rides along through the same Heun stages with the same stage
    velocities, its wall trace applied as a fixed Dirichlet value."""
    grid = cfg.grid
    w0 = state.omega.values
    k1 = advective_tendency(state.omega, state.u).values
    half = ScalarField(grid, w0 + dt * k1)
    u_half = velocity(solve_poisson(ws, half))
    k2 = advective_tendency(half, u_half).values
    w_adv = w0 + 0.5 * dt * (k1 + k2)
    op = _DiffusionOperator(grid, 0.5 * cfg.nu * dt) if cfg.nu > 0.0 else None
    if op is not None:
        psi_adv = solve_poisson(ws, ScalarField(grid, w_adv))
        wb = navier_boundary_vorticity(slip_velocity(psi_adv), cfg.alpha,
                                       cfg.kappa).values
        w_new = _diffuse(w_adv, wb, op, grid)
        for _ in range(cfg.corrector_passes):
            psi_new = solve_poisson(ws, ScalarField(grid, w_new))
            wb = navier_boundary_vorticity(slip_velocity(psi_new), cfg.alpha,
                                           cfg.kappa).values
            w_new = _diffuse(w_adv, wb, op, grid)
    else:
        w_new = w_adv
    if not np.all(np.isfinite(w_new)):
        raise SolverError(f"vorticity lost finiteness at t = {state.t + dt:.6g} "
                          f"(dt = {dt:.3e}); check CFL or data")
    new_state = SolverState.from_vorticity(ScalarField(grid, w_new), state.t + dt, ws)
    if companion is None:
        return new_state
    c_vals, c_wall = companion
    c1 = advective_tendency(ScalarField(grid, c_vals), state.u).values
    c_half = ScalarField(grid, c_vals + dt * c1)
    c2 = advective_tendency(c_half, u_half).values
    c_adv = c_vals + 0.5 * dt * (c1 + c2)
    c_new = _diffuse(c_adv, c_wall, op, grid) if op is not None else c_adv
    if not np.all(np.isfinite(c_new)):
        raise SolverError(f"dominating field lost finiteness at t = {state.t + dt:.6g}")
    return new_state, c_new


def step(state: SolverState, cfg: SolverConfig,
         workspace: PoissonWorkspace | None = None) -> SolverState:
    """Advance one CFL-limited step (no snapshot clipping)."""
    ws = workspace if workspace is not None else PoissonWorkspace(cfg.grid)
    dt = _cfl_dt(state.u, cfg.cfl, cfg.dt_max)
    if dt <= 0.0:
        raise SolverError(f"step size collapsed to {dt} at t = {state.t:.6g}")
    return _advance(state, cfg, ws, dt)


class _SeriesBuilder:
    def __init__(self, cfg: SolverConfig):
        self.cfg = cfg
        self.rows: list[tuple[float, ...]] = []

    def record(self, state: SolverState) -> None:
        cfg = self.cfg
        trace = navier_boundary_vorticity(state.slip, cfg.alpha, cfg.kappa)
        norm = lp_norm(state.omega, cfg.p)
        if cfg.nu > 0.0:
            diss = dissipation_integral(state.omega, cfg.p, cfg.nu, trace)
            flux = boundary_flux_integral(state.omega, cfg.p, cfg.nu, trace)
        else:
            diss = 0.0
            flux = 0.0
        self.rows.append((state.t, norm, norm ** cfg.p, energy(state.u),
                          circulation(state.omega),
                          float(np.max(np.abs(trace.values))), diss, flux))

    def build(self) -> SeriesLog:
        cols = [np.array(c) for c in zip(*self.rows)]
        return SeriesLog(times=cols[0], vorticity_norm=cols[1],
                         vorticity_pow=cols[2], velocity_norm=cols[3],
                         circulation=cols[4], boundary_max=cols[5],
                         dissipation=cols[6], boundary_flux=cols[7])


def _targets(cfg: SolverConfig) -> list[float]:
    ts = [t for t in cfg.snapshot_times if t < cfg.T * (1 - 1e-12)]
    ts.append(cfg.T)
    return ts


def run(cfg: SolverConfig, omega0: ScalarField) -> Trajectory:
    """Integrate from omega0 to T, recording snapshots and per-step series.

    Snapshots are taken at t = 0, each requested time, and T, landed on
    exactly by clipping dt.  At nu = 0 diffusion is skipped (transport only).
    """
    if omega0.grid != cfg.grid:
        raise ValueError("initial data grid does not match config grid")
    if not np.all(np.isfinite(omega0.values)):
        raise ValueError("initial data must be finite")
    ws = PoissonWorkspace(cfg.grid)
    state = SolverState.from_vorticity(omega0, 0.0, ws)
    series = _SeriesBuilder(cfg)
    series.record(state)
    snapshots: list[tuple[float, ScalarField]] = [(0.0, omega0)]
    targets = _targets(cfg)
    next_i = 0
    while next_i < len(targets):
        goal = targets[next_i]
        dt = min(_cfl_dt(state.u, cfg.cfl, cfg.dt_max), goal - state.t)
        state = _advance(state, cfg, ws, dt)
        series.record(state)
        if state.t >= goal * (1 - 1e-12):
            snapshots.append((state.t, state.omega))
            next_i += 1
    return Trajectory(config=cfg, snapshots=tuple(snapshots), series=series.build())


def run_euler(cfg: SolverConfig, omega0: ScalarField) -> Trajectory:
    """Transport-only run; requires nu = 0 in the config."""
    if cfg.nu != 0.0:
        raise ValueError(f"transport run requires nu = 0, got {cfg.nu}")
    return run(cfg, omega0)


def _interpolated_vorticity(frozen: Trajectory, t: float) -> np.ndarray:
    snaps = frozen.snapshots
    times = [s[0] for s in snaps]
    if t <= times[0]:
        return snaps[0][1].values
    if t >= times[-1]:
        return snaps[-1][1].values
    i = bisect.bisect_right(times, t)
    t0, f0 = snaps[i - 1]
    t1, f1 = snaps[i]
    lam = (t - t0) / (t1 - t0)
    return (1.0 - lam) * f0.values + lam * f1.values


def comparison_solve(cfg: SolverConfig, frozen: Trajectory,
                     omega0: ScalarField, wall_value: float) -> Trajectory:
    """Dominating solution: transport by the frozen run's velocity, same
    diffusion, data |omega0|, and the constant wall value as Dirichlet trace.

    The velocity at any t comes from linear interpolation of the frozen
    snapshots (velocity depends linearly on vorticity).  Snapshots of the
    output land on the frozen trajectory's snapshot times.
    """
    grid = cfg.grid
    if omega0.grid != grid or frozen.config.grid != grid:
        raise ValueError("grids of data, config, and frozen run must match")
    if not math.isfinite(wall_value):
        raise ValueError(f"wall value must be finite, got {wall_value}")
    if len(frozen.snapshots) < 2:
        raise ValueError("frozen trajectory needs at least two snapshots")
    ws = PoissonWorkspace(grid)

    def carrier(t: float) -> VelocityField:
        om = ScalarField(grid, _interpolated_vorticity(frozen, t))
        return velocity(solve_poisson(ws, om))

    state = SolverState.from_vorticity(ScalarField(grid, np.abs(omega0.values)), 0.0, ws)
    series = _SeriesBuilder(cfg)
    series.record(state)
    snapshots: list[tuple[float, ScalarField]] = [(0.0, state.omega)]
    targets = [t for t, _ in frozen.snapshots if t > 0.0]
    wb = np.full(grid.n_theta, float(wall_value))
    next_i = 0
    while next_i < len(targets):
        goal = targets[next_i]
        u_now = carrier(state.t)
        dt = min(_cfl_dt(u_now, cfg.cfl, cfg.dt_max), goal - state.t)
        w0 = state.omega.values
        k1 = advective_tendency(state.omega, u_now).values
        half = ScalarField(grid, w0 + dt * k1)
        k2 = advective_tendency(half, carrier(state.t + dt)).values
        w_adv = w0 + 0.5 * dt * (k1 + k2)
        if cfg.nu > 0.0:
            op = _DiffusionOperator(grid, 0.5 * cfg.nu * dt)
            w_new = _diffuse(w_adv, wb, op, grid)
        else:
            w_new = w_adv
        if not np.all(np.isfinite(w_new)):
            raise SolverError(f"comparison field lost finiteness at t = {state.t + dt:.6g}")
        state = SolverState.from_vorticity(ScalarField(grid, w_new), state.t + dt, ws)
        series.record(state)
        if state.t >= goal * (1 - 1e-12):
            snapshots.append((state.t, state.omega))
            next_i += 1
    return Trajectory(config=cfg, snapshots=tuple(snapshots), series=series.build())


def comparison_lockstep(cfg: SolverConfig, omega0: ScalarField,
                        wall_value: float) -> tuple[Trajectory, Trajectory]:
    """Advance the run and its dominating solution side by side.

    The dominating field starts from |omega0|, holds wall_value as a fixed
    Dirichlet trace, and is carried through the same Heun stages with the
    same stage velocities as the run itself.  Unlike comparison_solve there
    is no frozen-carrier sampling error, so the measured domination defect
    is purely discretization and shrinks under grid refinement.  The
    returned run trajectory is identical to run(cfg, omega0).
    """
    if omega0.grid != cfg.grid:
        raise ValueError("initial data grid does not match config grid")
    if not np.all(np.isfinite(omega0.values)):
        raise ValueError("initial data must be finite")
    if not math.isfinite(wall_value):
        raise ValueError(f"wall value must be finite, got {wall_value}")
    grid = cfg.grid
    ws = PoissonWorkspace(grid)
    state = SolverState.from_vorticity(omega0, 0.0, ws)
    tilde = np.abs(omega0.values)
    wall = np.full(grid.n_theta, float(wall_value))
    series = _SeriesBuilder(cfg)
    series.record(state)
    tilde_series = _SeriesBuilder(cfg)
    tilde_series.record(SolverState.from_vorticity(ScalarField(grid, tilde), 0.0, ws))
    snapshots: list[tuple[float, ScalarField]] = [(0.0, omega0)]
    tilde_snaps: list[tuple[float, ScalarField]] = [(0.0, ScalarField(grid, tilde))]
    targets = _targets(cfg)
    next_i = 0
    while next_i < len(targets):
        goal = targets[next_i]
        dt = min(_cfl_dt(state.u, cfg.cfl, cfg.dt_max), goal - state.t)
        state, tilde = _advance(state, cfg, ws, dt, companion=(tilde, wall))
        series.record(state)
        if state.t >= goal * (1 - 1e-12):
            snapshots.append((state.t, state.omega))
            field = ScalarField(grid, tilde)
            tilde_snaps.append((state.t, field))
            tilde_series.record(SolverState.from_vorticity(field, state.t, ws))
            next_i += 1
    return (Trajectory(config=cfg, snapshots=tuple(snapshots), series=series.build()),
            Trajectory(config=cfg, snapshots=tuple(tilde_snaps),
                       series=tilde_series.build()))


@dataclass(frozen=True)
class RadialTrajectory:
    """1D reference solution: profiles over a fine radial grid."""

    times: np.ndarray
    radii: np.ndarray
    profiles: np.ndarray
    integral: np.ndarray

    def profile_at(self, t: float) -> np.ndarray:
        """Profile at time t, linear between stored times."""
        ts = self.times
        if t <= ts[0]:
            return self.profiles[0]
        if t >= ts[-1]:
            return self.profiles[-1]
        i = int(np.searchsorted(ts, t, side="right"))
        lam = (t - ts[i - 1]) / (ts[i] - ts[i - 1])
        return (1.0 - lam) * self.profiles[i - 1] + lam * self.profiles[i]


def radial_reference(omega0, alpha: float, nu: float, T: float, n_r: int,
                     R: float = 1.0, dt: float | None = None,
                     bc_passes: int = 2) -> RadialTrajectory:
    """Independent 1D solver for rotationally symmetric data, constant friction.

    Solves w_t = nu (w_rr + w_r / r) on cell-centered radii with the wall
    value (2 kappa - alpha) u_tau(R), u_tau(R) = (1/R) int_0^R s w ds,
    refreshed bc_passes times per Crank-Nicolson step.  The discretization
    is written out locally so the path shares no stencil code with the 2D
    solver.  omega0 is a callable profile of r or a 2D ScalarField whose
    theta-variation must vanish.
    """
    if callable(omega0):
        init = None
    elif isinstance(omega0, ScalarField):
        spread = float(np.max(np.ptp(omega0.values, axis=0)))
        if spread > 1e-12 * max(1.0, float(np.max(np.abs(omega0.values)))):
            raise ValueError(f"initial data varies in theta (spread {spread:.2e}); "
                             "the radial reference needs rotational symmetry")
        init = omega0
    else:
        raise TypeError("omega0 must be a callable profile or a ScalarField")
    h = R / n_r
    r = (np.arange(n_r) + 0.5) * h
    if init is None:
        w = np.asarray(omega0(r), dtype=float)
    else:
        w = np.interp(r, init.grid.radii, init.values[0])
    if dt is None:
        dt = T / 400.0
    n_steps = max(1, int(round(T / dt)))
    dt = T / n_steps
    kappa = 1.0 / R
    # conservative bands of (1/r) d/dr (r d/dr) on cell centers; the inner
    # face has radius zero, the outer row keeps the ghost coefficient
    f_in = r - 0.5 * h
    f_out = r + 0.5 * h
    lo = f_in / (r * h * h)
    up = f_out / (r * h * h)
    di = -(f_in + f_out) / (r * h * h)
    lo[0] = 0.0
    c_last = up[-1]
    di_mod = di.copy()
    di_mod[-1] -= c_last
    up_mod = up.copy()
    up_mod[-1] = 0.0
    s = 0.5 * nu * dt
    factors = factor_tridiagonal((-s * lo)[None, :], (1.0 - s * di_mod)[None, :],
                                 (-s * up_mod)[None, :])

    def wall(values: np.ndarray) -> float:
        return (2.0 * kappa - alpha) * float(np.sum(r * values) * h / R)

    def apply_cn(values: np.ndarray, g: float) -> np.ndarray:
        rhs = values + s * di_mod * values
        rhs[1:] += s * lo[1:] * values[:-1]
        rhs[:-1] += s * up_mod[:-1] * values[1:]
        rhs[-1] += 4.0 * s * c_last * g
        return solve_tridiagonal(factors, rhs[None, :])[0]

    times = [0.0]
    profiles = [w.copy()]
    integrals = [2.0 * math.pi * float(np.sum(r * w) * h)]
    for k in range(n_steps):
        if nu > 0.0:
            g = wall(w)
            w_next = apply_cn(w, g)
            for _ in range(bc_passes):
                g = wall(w_next)
                w_next = apply_cn(w, g)
            w = w_next
        times.append((k + 1) * dt)
        profiles.append(w.copy())
        integrals.append(2.0 * math.pi * float(np.sum(r * w) * h))
    return RadialTrajectory(times=np.array(times), radii=r,
                            profiles=np.array(profiles),
                            integral=np.array(integrals))
