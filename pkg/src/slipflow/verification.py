"""Built-in verification suite behind the `verify` CLI subcommand.

Every check builds its own inputs from the bundled initial-data library, so
the whole suite runs with zero external files.  Expensive artifacts (sweep
runs, reference solutions, projector studies) are shared between checks
through a lazy context: each is computed once and cached for the process.

Checks return (passed, detail); `run_all` prints one line per check and
reports overall success for the CLI exit status.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .config import CaseSpec, OutputSpec
from .diagnostics import (comparison_check, lp_norm, max_boundary_vorticity,
                          navier_identity_residual, vorticity_budget,
                          weak_residual)
from .elliptic import (PoissonWorkspace, biot_savart, green_direct,
                       sample_velocity)
from .grid import FrictionProfile, ScalarField, VelocityField, build_grid
from .harness import SweepResult, sweep
from .initial_data import gaussian_blob, random_smooth, singular_patch, solid_rotation
from .projector import contraction_factor, project_compatible, select_scale
from .solver import (RadialTrajectory, SolverConfig, Trajectory,
                     comparison_lockstep, comparison_solve, radial_reference,
                     run, run_euler)

__all__ = ["CHECKS", "Check", "VerifyContext", "green_cross_error",
           "green_probes", "run_all", "run_check"]


def green_probes() -> np.ndarray:
    """Twelve interior probe points for the velocity cross-validation.

    Face radii j/64 on node rays i*(2*pi/64): theta-exact sampling for any
    grid whose angle count is a multiple of 64, and at least half a cell
    away from every source node radially.
    """
    pts = []
    for j in (16, 32, 48):
        r = j / 64.0
        for i in (5, 21, 37, 53):
            th = i * (2.0 * np.pi / 64.0)
            pts.append((r * np.cos(th), r * np.sin(th)))
    return np.array(pts)


def green_cross_error(n: int, seed: int = 7) -> float:
    """Relative disagreement between the two velocity routes at the probes."""
    g = build_grid(1.0, n, n)
    om = random_smooth(g, seed=seed)
    probes = green_probes()
    u_spec = sample_velocity(biot_savart(PoissonWorkspace(g), om), probes)
    u_green = green_direct(g, om, probes)
    scale = float(np.max(np.linalg.norm(u_spec, axis=1)))
    return float(np.max(np.linalg.norm(u_spec - u_green, axis=1)) / scale)


def _tail(traj: Trajectory, t_from: float) -> Trajectory:
    """Trajectory restricted to snapshots at or after t_from."""
    kept = tuple((t, f) for t, f in traj.snapshots if t >= t_from - 1e-12)
    return replace(traj, snapshots=kept)


def _rigid_field(g) -> VelocityField:
    return VelocityField(g, np.zeros(g.shape), np.broadcast_to(g.radii, g.shape).copy())


def _quartic_cap_field(g) -> VelocityField:
    """Azimuthal field of the streamfunction (1-r^2)^2: u_theta = -4r(1-r^2)."""
    r = np.broadcast_to(g.radii, g.shape)
    return VelocityField(g, np.zeros(g.shape), -4.0 * r * (1.0 - r ** 2))


def _swirl_field(g) -> VelocityField:
    """Tangent field of the streamfunction (1-r^2)^2 r cos(theta).

    Unlike purely azimuthal fields, whose wall-identity residual cancels
    exactly through the stencils, this one mixes harmonics and exposes the
    discretization error of the one-sided boundary operators.
    """
    r = np.broadcast_to(g.radii, g.shape)
    th = g.thetas[:, None]
    u_r = (1.0 - r ** 2) ** 2 * np.sin(th)
    u_t = (1.0 - r ** 2) * (1.0 - 5.0 * r ** 2) * np.cos(th)
    return VelocityField(g, u_r, u_t)


class VerifyContext:
    """Shared, lazily computed artifacts for the verification checks."""

    def __init__(self) -> None:
        self._cache: dict = {}
        self.timings: dict[str, float] = {}

    def _get(self, key: str, build: Callable):
        if key not in self._cache:
            t0 = time.perf_counter()
            self._cache[key] = build()
            self.timings[key] = time.perf_counter() - t0
        return self._cache[key]

    def grid(self, n_theta: int, n_r: int | None = None):
        n_r = n_theta if n_r is None else n_r
        return self._get(f"grid-{n_theta}x{n_r}",
                         lambda: build_grid(1.0, n_theta, n_r))

    # --- steady solid rotation -------------------------------------------
    def steady_run(self) -> Trajectory:
        def build():
            g = self.grid(64)
            cfg = SolverConfig(grid=g, nu=1e-2, alpha=FrictionProfile(g),
                               T=1.0, p=4.0, cfl=0.4, dt_max=5e-3)
            return run(cfg, solid_rotation(g))
        return self._get("steady", build)

    # --- gaussian-blob viscosity sweep, 128^2 ----------------------------
    def sweep_case(self) -> CaseSpec:
        def build():
            g = self.grid(128)
            alpha = FrictionProfile(g, constant=1.0, cos_coeffs=(1.0,))
            times = tuple(np.linspace(0.1, 1.0, 10))
            cfg = SolverConfig(grid=g, nu=1e-1, alpha=alpha, T=1.0, p=4.0,
                               cfl=0.4, dt_max=5e-3, snapshot_times=times)
            return CaseSpec(solver=cfg, omega0=gaussian_blob(g),
                            initial_name="gaussian_blob", initial_params={},
                            projection=None, output=OutputSpec(),
                            nu_list=(1e-1, 1e-2, 1e-3, 1e-4))
        return self._get("sweep-case", build)

    def sweep_result(self) -> SweepResult:
        return self._get("sweep", lambda: sweep(self.sweep_case()))

    def sweep_member(self, nu: float) -> Trajectory:
        for r in self.sweep_result().results:
            if abs(r.trajectory.config.nu - nu) < 1e-15:
                return r.trajectory
        raise KeyError(f"no sweep member at nu = {nu}")

    def euler_run(self, n: int) -> Trajectory:
        def build():
            g = self.grid(n)
            case = self.sweep_case()
            cfg = replace(case.solver, grid=g, nu=0.0,
                          alpha=FrictionProfile(g, constant=1.0, cos_coeffs=(1.0,)))
            return run_euler(cfg, gaussian_blob(g))
        return self._get(f"euler-{n}", build)

    # --- singular-patch comparison pair ----------------------------------
    def _comparison_cfg(self, n: int) -> SolverConfig:
        g = self.grid(n)
        times = tuple(np.linspace(0.01, 0.3, 30))
        return SolverConfig(grid=g, nu=1e-2,
                            alpha=FrictionProfile(g, constant=1.0, cos_coeffs=(1.0,)),
                            T=0.3, p=4.0, cfl=0.4, dt_max=5e-3,
                            snapshot_times=times)

    def comparison_violation(self, n: int) -> float:
        # Two passes: the first run supplies the wall constant (the sup of
        # the boundary trace over the whole interval), then the lockstep
        # pass carries the dominating field with the run's own stage
        # velocities.  Domination is checked from t = 0.1 on: by then the
        # diffusion width sqrt(nu t) exceeds the cell size on both grids,
        # so the defect measures discretization error rather than how each
        # mesh samples the unresolved initial peak.
        def build():
            cfg = self._comparison_cfg(n)
            omega0 = singular_patch(cfg.grid)
            wall = max_boundary_vorticity(run(cfg, omega0))
            traj, dominating = comparison_lockstep(cfg, omega0, wall)
            return comparison_check(_tail(traj, 0.1), _tail(dominating, 0.1))
        return self._get(f"comparison-{n}", build)

    def comparison_equality(self) -> float:
        def build():
            g = self.grid(64)
            cfg = SolverConfig(grid=g, nu=1e-2, alpha=FrictionProfile(g),
                               T=0.5, p=4.0, cfl=0.4, dt_max=5e-3,
                               snapshot_times=(0.25, 0.5))
            omega0 = solid_rotation(g)
            traj = run(cfg, omega0)
            wall = max_boundary_vorticity(traj)
            dominating = comparison_solve(cfg, traj, omega0, wall)
            return comparison_check(traj, dominating)
        return self._get("comparison-equality", build)

    # --- free-boundary (alpha = 2 kappa) run for the budget --------------
    def free_boundary_run(self) -> Trajectory:
        def build():
            g = self.grid(128)
            cfg = SolverConfig(grid=g, nu=1e-2,
                               alpha=FrictionProfile(g, constant=2.0),
                               T=1.0, p=4.0, cfl=0.4, dt_max=5e-3,
                               snapshot_times=(0.5, 1.0))
            return run(cfg, gaussian_blob(g))
        return self._get("free-boundary", build)

    # --- radial decay pair against the 1D reference ----------------------
    def radial_run(self, n: int) -> Trajectory:
        def build():
            g = self.grid(n)
            cfg = SolverConfig(grid=g, nu=1e-2,
                               alpha=FrictionProfile(g, constant=2.0),
                               T=1.0, p=4.0, cfl=0.4, dt_max=5e-3,
                               snapshot_times=(0.5, 1.0))
            return run(cfg, solid_rotation(g))
        return self._get(f"radial-{n}", build)

    def radial_oracle(self) -> RadialTrajectory:
        return self._get("radial-reference",
                         lambda: radial_reference(lambda r: np.full_like(r, 2.0),
                                                  alpha=2.0, nu=1e-2, T=1.0,
                                                  n_r=1024))

    def radial_gap(self, n: int) -> float:
        """Max-norm 2D vs 1D mismatch over the stored snapshot times."""
        traj = self.radial_run(n)
        oracle = self.radial_oracle()
        worst = 0.0
        for t, snap in traj.snapshots[1:]:
            ref = np.interp(snap.grid.radii, oracle.radii, oracle.profile_at(t))
            worst = max(worst, float(np.max(np.abs(snap.values - ref[None, :]))))
        return worst

    # --- projector study on the collar-resolving grid --------------------
    def projector_study(self) -> dict:
        def build():
            g = self.grid(128, 576)
            alpha = FrictionProfile(g)
            kappa = 1.0
            omega0 = singular_patch(g)
            auto_n = select_scale(g, alpha, kappa)
            auto_report = project_compatible(omega0, auto_n, alpha, kappa)
            rows = []
            for n in (4, 8, 16):
                rep = project_compatible(omega0, n, alpha, kappa)
                dist = lp_norm(ScalarField(g, rep.projected.values - omega0.values), 4.0)
                rows.append({"n": n, "iterations": rep.iterations,
                             "compat": rep.compat_residual, "distance": dist,
                             "factor": contraction_factor(g, alpha, kappa, n)})
            return {"auto_n": auto_n, "auto_report": auto_report, "rows": rows}
        return self._get("projector", build)


# --------------------------------------------------------------------------
# checks


def _check_steady(ctx: VerifyContext) -> tuple[bool, str]:
    traj = ctx.steady_run()
    g = traj.config.grid
    final = traj.snapshots[-1][1]
    dev = lp_norm(ScalarField(g, final.values - solid_rotation(g).values), 4.0)
    elapsed = ctx.timings["steady"]
    ok = dev <= 1e-6 and elapsed < 30.0
    return ok, f"L4 deviation {dev:.3e} (<= 1e-6), runtime {elapsed:.1f}s (< 30s)"


def _check_wall_identity(ctx: VerifyContext) -> tuple[bool, str]:
    g64 = ctx.grid(64)
    rigid = float(np.max(np.abs(navier_identity_residual(_rigid_field(g64)).values)))
    grids = (32, 64, 128)

    def residuals(make):
        return [float(np.max(np.abs(navier_identity_residual(make(ctx.grid(n))).values)))
                for n in grids]

    def order_ok(res):
        # azimuthal profiles cancel through the stencils, leaving rounding
        if max(res) <= 1e-12:
            return True, float("inf")
        slope = -float(np.polyfit(np.log2(grids), np.log2(res), 1)[0])
        return slope >= 1.0, slope

    cap = residuals(_quartic_cap_field)
    swirl = residuals(_swirl_field)
    cap_ok, cap_order = order_ok(cap)
    swirl_ok, swirl_order = order_ok(swirl)
    ok = rigid <= 1e-10 and cap_ok and swirl_ok
    return ok, (f"rigid residual {rigid:.2e} (<= 1e-10), cap field "
                + "/".join(f"{x:.2e}" for x in cap)
                + f" (order {cap_order:.2f}), swirl field "
                + "/".join(f"{x:.2e}" for x in swirl)
                + f" (order {swirl_order:.2f}, >= 1)")


def _check_green_cross(ctx: VerifyContext) -> tuple[bool, str]:
    e64 = ctx._get("green-64", lambda: green_cross_error(64))
    e128 = ctx._get("green-128", lambda: green_cross_error(128))
    ok = e64 <= 1e-3 and e128 < e64
    return ok, f"relative disagreement {e64:.3e} at 64^2 (<= 1e-3), {e128:.3e} at 128^2"


def _check_projector(ctx: VerifyContext) -> tuple[bool, str]:
    study = ctx.projector_study()
    rep = study["auto_report"]
    hist = rep.residual_history
    contracting = all(b < a for a, b in zip(hist, hist[1:]) if a > 1e-12)
    dists = [row["distance"] for row in study["rows"]]
    factors = [row["factor"] for row in study["rows"]]
    compats = [row["compat"] for row in study["rows"]] + [rep.compat_residual]
    ok = (contracting and max(compats) <= 1e-8
          and all(b < a for a, b in zip(dists, dists[1:]))
          and all(b < a for a, b in zip(factors, factors[1:])))
    return ok, (f"auto n = {study['auto_n']} in {rep.iterations} iterations, "
                f"defect <= {max(compats):.2e} (<= 1e-8), distances "
                + "/".join(f"{d:.4f}" for d in dists) + " decreasing, factors "
                + "/".join(f"{f:.3f}" for f in factors) + " decreasing")


def _check_comparison(ctx: VerifyContext) -> tuple[bool, str]:
    v64 = max(ctx.comparison_violation(64), 0.0)
    v128 = max(ctx.comparison_violation(128), 0.0)
    eq = max(ctx.comparison_equality(), 0.0)
    halved = v128 <= 0.5 * v64 or v128 <= 1e-9
    ok = halved and eq <= 1e-8
    return ok, (f"violation {v64:.3e} at 64^2 vs {v128:.3e} at 128^2 "
                f"(halving or better), equality case {eq:.2e} (<= 1e-8)")


def _check_energy(ctx: VerifyContext) -> tuple[bool, str]:
    worst = 0.0
    for r in ctx.sweep_result().results:
        s = r.trajectory.series
        worst = max(worst, float(np.max(s.velocity_norm) / s.velocity_norm[0]))
    drifts = []
    for n in (64, 128):
        s = ctx.euler_run(n).series
        drifts.append(float(np.max(np.abs(s.velocity_norm - s.velocity_norm[0]))
                            / s.velocity_norm[0]))
    ok = worst <= 1.0 + 1e-6 and drifts[1] < drifts[0]
    return ok, (f"viscous max growth factor {worst - 1.0:.2e} (<= 1e-6), transport "
                f"drift {drifts[0]:.2e} at 64^2 vs {drifts[1]:.2e} at 128^2")


def _check_uniform_bound(ctx: VerifyContext) -> tuple[bool, str]:
    rows = ctx.sweep_result().summary_rows   # nu descending
    ratios = [row[1] for row in rows]
    spread = max(ratios) / min(ratios)
    growth = max(b / a for a, b in zip(ratios, ratios[1:]))
    elapsed = ctx.timings["sweep"]
    ok = spread <= 2.0 and growth <= 1.2 and elapsed <= 1800.0
    return ok, (f"ratios " + "/".join(f"{x:.6f}" for x in ratios)
                + f", spread {spread:.5f} (<= 2), worst decade growth {growth:.5f} "
                f"(<= 1.2), sweep {elapsed:.0f}s (<= 1800s)")


def _integral(rows, pick) -> float:
    t = np.array([r.t for r in rows])
    return float(np.trapezoid(np.abs([pick(r) for r in rows]), t))


def _check_budget(ctx: VerifyContext) -> tuple[bool, str]:
    rows = vorticity_budget(ctx.sweep_member(1e-2))
    closure = _integral(rows, lambda r: r.closure_error)
    diss = _integral(rows, lambda r: r.dissipation)
    free_rows = vorticity_budget(ctx.free_boundary_run())
    flux = _integral(free_rows, lambda r: r.boundary_flux)
    free_diss = _integral(free_rows, lambda r: r.dissipation)
    s = ctx.free_boundary_run().series
    increase = float(np.max(s.vorticity_norm) / s.vorticity_norm[0]) - 1.0
    ok = (closure <= 0.05 * diss and flux <= 0.01 * free_diss and increase <= 0.01)
    return ok, (f"closure/dissipation {closure / diss:.4f} (<= 0.05), free-boundary "
                f"flux/dissipation {flux / free_diss if free_diss else 0.0:.2e} "
                f"(<= 0.01), norm increase {max(increase, 0.0):.2e} (<= 0.01)")


def _check_inviscid_limit(ctx: VerifyContext) -> tuple[bool, str]:
    res = ctx.sweep_result()
    gaps = [row[2] for row in res.cauchy]
    decreasing = all(b < a for a, b in zip(gaps, gaps[1:]))
    floor = max(abs(weak_residual(ctx.euler_run(128), 0.0, m)) for m in (0, 1, 2))
    small = max(abs(weak_residual(ctx.sweep_member(1e-4), 0.0, m)) for m in (0, 1, 2))
    ok = decreasing and small <= 3.0 * floor
    return ok, (f"velocity gaps " + "/".join(f"{g:.3e}" for g in gaps)
                + f" strictly decreasing, dropped-viscosity residual {small:.3e} vs "
                f"transport floor {floor:.3e} (<= 3x)")


def _check_radial_oracle(ctx: VerifyContext) -> tuple[bool, str]:
    d64 = ctx.radial_gap(64)
    d128 = ctx.radial_gap(128)
    order = float(np.log2(d64 / d128))
    ok = order >= 1.0
    return ok, f"max-norm gap {d64:.3e} at 64^2, {d128:.3e} at 128^2, order {order:.2f} (>= 1)"


@dataclass(frozen=True)
class Check:
    ident: str
    title: str
    fn: Callable[[VerifyContext], tuple[bool, str]]


CHECKS: tuple[Check, ...] = (
    Check("steady-exact", "solid rotation is steady under the viscous solver",
          _check_steady),
    Check("wall-identity", "boundary identity residual vanishes at the expected order",
          _check_wall_identity),
    Check("green-cross", "spectral velocity matches direct Green quadrature",
          _check_green_cross),
    Check("projector", "compatibility projection contracts and tightens with scale",
          _check_projector),
    Check("comparison", "dominating solution stays above the run",
          _check_comparison),
    Check("energy", "viscous runs dissipate, transport conserves",
          _check_energy),
    Check("uniform-bound", "vorticity norm ratios stay flat across the sweep",
          _check_uniform_bound),
    Check("budget", "norm budget closes and the free boundary kills the wall flux",
          _check_budget),
    Check("inviscid-limit", "velocity gaps shrink and the limit looks like transport",
          _check_inviscid_limit),
    Check("radial-oracle", "2D solver tracks the radial reference at order",
          _check_radial_oracle),
)


def run_check(ctx: VerifyContext, check: Check) -> tuple[bool, str, float]:
    t0 = time.perf_counter()
    try:
        ok, detail = check.fn(ctx)
    except Exception as exc:
        return False, f"raised {type(exc).__name__}: {exc}", time.perf_counter() - t0
    return ok, detail, time.perf_counter() - t0


def run_all(only: list[str] | None = None, out: Callable[[str], None] = print) -> bool:
    ctx = VerifyContext()
    selected = CHECKS if not only else tuple(c for c in CHECKS if c.ident in only)
    if only:
        unknown = set(only) - {c.ident for c in CHECKS}
        if unknown:
            raise ValueError(f"unknown check ids: {sorted(unknown)}")
    all_ok = True
    for check in selected:
        ok, detail, seconds = run_check(ctx, check)
        all_ok = all_ok and ok
        status = "ok  " if ok else "FAIL"
        out(f"[{status}] {check.ident}: {detail} ({seconds:.1f}s)")
    out(f"{'all checks passed' if all_ok else 'CHECKS FAILED'} "
        f"({len(selected)} run)")
    return all_ok
