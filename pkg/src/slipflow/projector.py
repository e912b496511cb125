"""Compatible-data construction near the boundary.

An arbitrary vorticity field generally violates the friction condition
omega(R, theta) = (2 kappa - alpha) u.tau, because its induced slip velocity
has no reason to match its boundary values.  The construction here bends the
field only within a collar of width ~1/n: smooth the field at scale 1/n,
blend it into an exponentially decaying boundary layer carrying a prescribed
trace, and choose that trace as the fixed point of the map sending a trace to
the boundary vorticity induced by the blended field's own velocity.  Outside
the collar the field is untouched apart from the smoothing, and at the
boundary the friction condition holds up to the fixed-point tolerance.

The fixed-point map is affine in the trace; its linear part contracts in the
sup norm once n is large enough, with a measured factor that decays as n
grows.  contraction_factor estimates that factor by power iteration and
select_scale picks the smallest workable n from it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import (BoundaryTrace, FrictionProfile, PolarGrid, ScalarField,
                   boundary_cutoff, mollify)
from .elliptic import (PoissonWorkspace, navier_boundary_vorticity,
                       slip_velocity, solve_poisson)
from .stencils import extrapolate_to_boundary

__all__ = [
    "ProjectionError",
    "ProjectionReport",
    "boundary_response",
    "compatibility_residual",
    "contraction_factor",
    "lift",
    "project_compatible",
    "select_scale",
]


class ProjectionError(RuntimeError):
    """Fixed-point iteration failed; carries the residual history."""

    def __init__(self, message: str, history: list[float]):
        super().__init__(message)
        self.history = list(history)


@dataclass(frozen=True)
class ProjectionReport:
    """Outcome of a compatible-data projection.

    projected is the blended field, boundary_trace the fixed point driving
    its collar, residual_history the sup-norm change per iterate, and
    compat_residual the friction-condition defect of the output.
    """

    projected: ScalarField
    boundary_trace: BoundaryTrace
    iterations: int
    residual_history: tuple[float, ...]
    compat_residual: float


def _collar_profiles(grid: PolarGrid, n: int) -> tuple[np.ndarray, np.ndarray]:
    cut = boundary_cutoff(grid, n).values
    decay = np.exp(-n * (grid.R - grid.radii))
    return cut, decay


def _blend(smooth: np.ndarray, cut: np.ndarray, decay: np.ndarray,
           trace: np.ndarray) -> np.ndarray:
    return cut * smooth + (1.0 - cut) * decay * trace[:, None]


def lift(omega: ScalarField, n: int, trace: BoundaryTrace) -> ScalarField:
    """Blend of the smoothed field and the boundary layer carrying trace.

    Equals the scale-1/n mollification of omega wherever the cutoff is 1
    (distance > 1/n from the wall) and decays from the trace like
    exp(-n d) inside the collar.
    """
    grid = omega.grid
    if trace.grid != grid:
        raise ValueError("trace grid does not match field grid")
    cut, decay = _collar_profiles(grid, n)
    if np.any(omega.values):
        smooth = mollify(omega, n).values
    else:
        smooth = omega.values
    return ScalarField(grid, _blend(smooth, cut, decay, trace.values))


def boundary_response(omega: ScalarField, n: int, trace: BoundaryTrace,
                      alpha: FrictionProfile, kappa: float,
                      workspace: PoissonWorkspace | None = None) -> BoundaryTrace:
    """Boundary vorticity induced by the lifted field's own velocity.

    This is the map whose fixed point makes the lift compatible; it is affine
    in the trace, and its linear part shrinks as n grows.
    """
    ws = workspace if workspace is not None else PoissonWorkspace(omega.grid)
    psi = solve_poisson(ws, lift(omega, n, trace))
    return navier_boundary_vorticity(slip_velocity(psi), alpha, kappa)


def compatibility_residual(omega: ScalarField, alpha: FrictionProfile,
                           kappa: float,
                           boundary_trace: BoundaryTrace | None = None,
                           workspace: PoissonWorkspace | None = None) -> float:
    """Sup defect of the friction condition for a vorticity field.

    The boundary value of omega is one-sided extrapolated unless the caller
    knows the exact trace (projection output does) and passes it.
    """
    grid = omega.grid
    ws = workspace if workspace is not None else PoissonWorkspace(grid)
    slip = slip_velocity(solve_poisson(ws, omega))
    required = navier_boundary_vorticity(slip, alpha, kappa)
    if boundary_trace is None:
        actual = extrapolate_to_boundary(omega.values, grid)
    else:
        if boundary_trace.grid != grid:
            raise ValueError("trace grid does not match field grid")
        actual = boundary_trace.values
    return float(np.max(np.abs(actual - required.values)))


def project_compatible(omega: ScalarField, n: int, alpha: FrictionProfile,
                       kappa: float, tol: float = 1e-10,
                       max_iter: int = 100) -> ProjectionReport:
    """Iterate the boundary-response map from a zero trace to its fixed point.

    Stops when the sup-norm change drops below tol.  Raises ProjectionError
    when the change grows for three consecutive iterations (the map is not
    contracting at this n; use a larger one) or when max_iter is exhausted.
    """
    if tol <= 0.0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    grid = omega.grid
    ws = PoissonWorkspace(grid)
    cut, decay = _collar_profiles(grid, n)
    if np.any(omega.values):
        smooth = mollify(omega, n).values
    else:
        smooth = omega.values
    trace = np.zeros(grid.n_theta)
    history: list[float] = []
    grew = 0
    for it in range(1, max_iter + 1):
        beta = ScalarField(grid, _blend(smooth, cut, decay, trace))
        slip = slip_velocity(solve_poisson(ws, beta))
        new_trace = navier_boundary_vorticity(slip, alpha, kappa).values
        change = float(np.max(np.abs(new_trace - trace)))
        history.append(change)
        trace = new_trace
        if change < tol:
            fixed = BoundaryTrace(grid, trace)
            projected = ScalarField(grid, _blend(smooth, cut, decay, trace))
            residual = compatibility_residual(omega=projected, alpha=alpha,
                                              kappa=kappa, boundary_trace=fixed,
                                              workspace=ws)
            return ProjectionReport(projected=projected, boundary_trace=fixed,
                                    iterations=it,
                                    residual_history=tuple(history),
                                    compat_residual=residual)
        grew = grew + 1 if len(history) > 1 and change > history[-2] else 0
        if grew >= 3:
            raise ProjectionError(
                f"boundary-response iteration diverging at collar scale n={n} "
                f"(change grew 3 times in a row, last {change:.3e}); "
                f"a larger n contracts harder", history)
    raise ProjectionError(
        f"no fixed point within {max_iter} iterations at collar scale n={n} "
        f"(last change {history[-1]:.3e}, tol {tol:.1e})", history)


def contraction_factor(grid: PolarGrid, alpha: FrictionProfile, kappa: float,
                       n: int, iterations: int = 8, seed: int = 0) -> float:
    """Power-iteration estimate of the response map's linear-part sup norm.

    The linear part acts on traces alone (the field term drops out), so the
    estimate runs on a zero field with a random unit starting trace.
    """
    ws = PoissonWorkspace(grid)
    cut, decay = _collar_profiles(grid, n)
    zero = np.zeros(grid.shape)
    rng = np.random.default_rng(seed)
    trace = rng.standard_normal(grid.n_theta)
    trace /= np.max(np.abs(trace))
    factor = 0.0
    for _ in range(iterations):
        beta = ScalarField(grid, _blend(zero, cut, decay, trace))
        slip = slip_velocity(solve_poisson(ws, beta))
        image = navier_boundary_vorticity(slip, alpha, kappa).values
        factor = float(np.max(np.abs(image)))
        if factor == 0.0:
            return 0.0
        trace = image / factor
    return factor


def select_scale(grid: PolarGrid, alpha: FrictionProfile, kappa: float,
                 candidates: tuple[int, ...] = (2, 3, 4, 6, 8, 12, 16),
                 threshold: float = 0.5) -> int:
    """Smallest candidate collar scale whose contraction estimate beats threshold.

    Stops at the first candidate the grid cannot resolve (narrower collars
    only get worse); raises if no candidate qualifies.
    """
    tried: list[str] = []
    for n in sorted(candidates):
        try:
            factor = contraction_factor(grid, alpha, kappa, n)
        except ValueError:
            break
        tried.append(f"n={n}: {factor:.3f}")
        if factor < threshold:
            return n
    raise ValueError("no collar scale contracts below "
                     f"{threshold} on this grid ({'; '.join(tried) or 'none resolvable'})")
