"""Numerical laboratory for 2D incompressible flow on the unit disk with
Navier friction at the wall: vorticity solver, compatible-data projection,
viscosity sweeps, and the diagnostics that monitor the wall-friction
estimates.
"""

__version__ = "0.1.0"

from .grid import (BoundaryTrace, FrictionProfile, Mollifier, PolarGrid,
                   ScalarField, VelocityField, boundary_cutoff, build_grid,
                   curvature, mollify)
from .elliptic import (PoissonWorkspace, biot_savart, green_direct,
                       green_function, navier_boundary_vorticity, sample_field,
                       sample_velocity, slip_velocity, solve_poisson, velocity)
from .projector import (ProjectionError, ProjectionReport, compatibility_residual,
                        contraction_factor, lift, project_compatible, select_scale)
from .solver import (RadialTrajectory, SolverConfig, SolverError, SolverState,
                     Trajectory, comparison_solve, radial_reference, run,
                     run_euler, step)
from .diagnostics import (circulation, comparison_check, dissipation_integral,
                          boundary_flux_integral, energy, interpolation_exponent,
                          interpolation_ratio, lp_norm, max_boundary_vorticity,
                          navier_identity_residual, vorticity_budget, weak_residual)
from .initial_data import (BUILTIN_FIELDS, gaussian_blob, random_smooth,
                           singular_patch, solid_rotation, two_vortex)
from .config import CaseSpec, load_case, parse_case
from .records import RunRecord, dump_field, load_field, load_record, write_csv

__all__ = [
    "BUILTIN_FIELDS", "BoundaryTrace", "CaseSpec", "FrictionProfile",
    "Mollifier", "PoissonWorkspace", "PolarGrid", "ProjectionError",
    "ProjectionReport", "RadialTrajectory", "RunRecord", "ScalarField",
    "SolverConfig", "SolverError", "SolverState", "Trajectory",
    "VelocityField", "biot_savart", "boundary_cutoff", "boundary_flux_integral",
    "build_grid", "circulation", "comparison_check", "comparison_solve",
    "compatibility_residual", "contraction_factor", "curvature",
    "dissipation_integral", "dump_field", "energy", "gaussian_blob",
    "green_direct", "green_function", "interpolation_exponent",
    "interpolation_ratio", "lift", "load_case", "load_field", "load_record",
    "lp_norm", "max_boundary_vorticity", "mollify", "navier_boundary_vorticity",
    "navier_identity_residual", "parse_case", "project_compatible",
    "radial_reference", "random_smooth", "run", "run_euler", "sample_field",
    "sample_velocity", "select_scale", "singular_patch", "slip_velocity",
    "solid_rotation", "solve_poisson", "step", "two_vortex", "velocity",
    "vorticity_budget", "weak_residual", "write_csv",
]
