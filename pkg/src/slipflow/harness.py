"""Run orchestration: single cases, viscosity sweeps, the vanishing-viscosity
gap table, and persistence of records, tables, field dumps, and figures.

Sweep members run on a bounded thread pool (SLIPFLOW_THREADS caps the
worker count); each member is independent and deterministic, and the
summary step is single-threaded over the collected results.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .config import CaseSpec
from .diagnostics import (energy, interpolation_exponent, interpolation_ratio,
                          lp_norm, max_boundary_vorticity, vorticity_budget,
                          weak_residual)
from .elliptic import PoissonWorkspace, biot_savart
from .grid import ScalarField
from .projector import ProjectionReport, project_compatible, select_scale, contraction_factor
from .records import RunRecord, dump_field, write_csv, write_record
from .solver import SolverConfig, Trajectory, run, run_euler

__all__ = [
    "CaseResult",
    "SweepResult",
    "cauchy_rows",
    "emit_case",
    "emit_sweep",
    "lp_conservation_rows",
    "projector_study",
    "run_case",
    "sweep",
]


def worker_cap() -> int:
    """Worker count for sweeps, from SLIPFLOW_THREADS or the machine."""
    raw = os.environ.get("SLIPFLOW_THREADS")
    if raw is None:
        return max(1, os.cpu_count() or 1)
    try:
        cap = int(raw)
    except ValueError as exc:
        raise ValueError(f"SLIPFLOW_THREADS must be an integer, got {raw!r}") from exc
    if cap < 1:
        raise ValueError(f"SLIPFLOW_THREADS must be >= 1, got {cap}")
    return cap


@dataclass(frozen=True)
class CaseResult:
    record: RunRecord
    trajectory: Trajectory
    projection: ProjectionReport | None


@dataclass(frozen=True)
class SweepResult:
    results: tuple[CaseResult, ...]      # viscosity descending
    summary_rows: list
    cauchy: list
    lp_rows: list


def _config_echo(cfg: SolverConfig, case: CaseSpec) -> dict:
    return {
        "grid": {"R": cfg.grid.R, "n_theta": cfg.grid.n_theta, "n_r": cfg.grid.n_r},
        "solver": {"nu": cfg.nu, "T": cfg.T, "p": cfg.p, "cfl": cfg.cfl,
                   "dt_max": cfg.dt_max, "corrector_passes": cfg.corrector_passes,
                   "snapshot_times": list(cfg.snapshot_times)},
        "friction": {"constant": cfg.alpha.constant,
                     "cos": list(cfg.alpha.cos_coeffs),
                     "sin": list(cfg.alpha.sin_coeffs)},
        "initial": {"name": case.initial_name,
                    **{k: list(v) if isinstance(v, tuple) else v
                       for k, v in case.initial_params.items()}},
    }


def _summary(traj: Trajectory) -> dict:
    s = traj.series
    cfg = traj.config
    denom = s.vorticity_norm[0] + s.velocity_norm[0]
    out = {
        "initial_vorticity_norm": float(s.vorticity_norm[0]),
        "final_vorticity_norm": float(s.vorticity_norm[-1]),
        "max_vorticity_norm": float(np.max(s.vorticity_norm)),
        "ratio": float(np.max(s.vorticity_norm) / denom) if denom > 0 else 0.0,
        "initial_energy": float(s.velocity_norm[0]),
        "max_energy": float(np.max(s.velocity_norm)),
        "final_energy": float(s.velocity_norm[-1]),
        "initial_circulation": float(s.circulation[0]),
        "final_circulation": float(s.circulation[-1]),
        "boundary_sup": max_boundary_vorticity(traj),
        "interpolation_exponent": interpolation_exponent(cfg.p),
        "steps": int(s.times.size - 1),
    }
    ws = PoissonWorkspace(cfg.grid)
    out["interpolation_ratio_final"] = interpolation_ratio(
        biot_savart(ws, traj.snapshots[-1][1]), cfg.p)
    for m in (0, 1, 2):
        out[f"weak_residual_m{m}"] = weak_residual(traj, cfg.nu, m)
        if cfg.nu > 0.0:
            out[f"weak_residual_euler_m{m}"] = weak_residual(traj, 0.0, m)
    return out


def run_case(case: CaseSpec, nu: float | None = None,
             name: str | None = None) -> CaseResult:
    """Project if requested, integrate, and assemble the run record."""
    cfg = case.solver if nu is None else replace(case.solver, nu=nu)
    omega0 = case.omega0
    report = None
    projection_echo = None
    if case.projection is not None:
        spec = case.projection
        n = spec.n
        if n is None:
            n = select_scale(cfg.grid, cfg.alpha, cfg.kappa)
        report = project_compatible(case.omega0, n, cfg.alpha, cfg.kappa,
                                    tol=spec.tol, max_iter=spec.max_iter)
        omega0 = report.projected
        projection_echo = {
            "n": n,
            "auto": spec.n is None,
            "iterations": report.iterations,
            "compat_residual": report.compat_residual,
            "residual_history": list(report.residual_history),
            "boundary_trace": report.boundary_trace.values.tolist(),
        }
    euler = cfg.nu == 0.0
    traj = run_euler(cfg, omega0) if euler else run(cfg, omega0)
    if name is None:
        name = f"{case.initial_name}-nu{cfg.nu:g}"
    record = RunRecord(name=name, config=_config_echo(cfg, case),
                       summary=_summary(traj),
                       series={k: getattr(traj.series, k).tolist()
                               for k in ("times", "vorticity_norm", "velocity_norm",
                                         "circulation", "boundary_max",
                                         "dissipation", "boundary_flux")},
                       euler=euler, projected=report is not None,
                       projection=projection_echo)
    return CaseResult(record=record, trajectory=traj, projection=report)


def sweep(case: CaseSpec) -> SweepResult:
    """One run per viscosity in the plan, then the summary tables."""
    if not case.nu_list:
        raise ValueError("case has no sweep.nu_list")
    nus = tuple(sorted(set(case.nu_list), reverse=True))
    with ThreadPoolExecutor(max_workers=worker_cap()) as pool:
        results = tuple(pool.map(lambda v: run_case(case, nu=v), nus))
    summary_rows = [
        [r.record.config["solver"]["nu"], r.record.summary["ratio"],
         r.record.summary["max_vorticity_norm"], r.record.summary["final_vorticity_norm"],
         r.record.summary["final_energy"], r.record.summary["boundary_sup"]]
        for r in results
    ]
    return SweepResult(results=results, summary_rows=summary_rows,
                       cauchy=cauchy_rows([r.trajectory for r in results]),
                       lp_rows=lp_conservation_rows([r.trajectory for r in results]))


def cauchy_rows(trajectories: list[Trajectory]) -> list:
    """Velocity gaps between consecutive runs of a viscosity sweep.

    Row per adjacent pair (viscosity descending): max over shared snapshot
    times of the L2 distance between the induced velocities, computed on
    the vorticity difference (the velocity map is linear).
    """
    trajs = sorted(trajectories, key=lambda tr: tr.config.nu, reverse=True)
    if len(trajs) < 2:
        raise ValueError("need at least two runs for the gap table")
    grid = trajs[0].config.grid
    times0 = [t for t, _ in trajs[0].snapshots]
    for tr in trajs[1:]:
        if tr.config.grid != grid:
            raise ValueError("sweep members use different grids")
        if [t for t, _ in tr.snapshots] != times0:
            raise ValueError("sweep members have different snapshot times")
    ws = PoissonWorkspace(grid)
    rows = []
    for hi, lo in zip(trajs, trajs[1:]):
        gap = 0.0
        for (_, fa), (_, fb) in zip(hi.snapshots, lo.snapshots):
            diff = ScalarField(grid, fa.values - fb.values)
            gap = max(gap, energy(biot_savart(ws, diff)))
        rows.append([hi.config.nu, lo.config.nu, gap])
    return rows


def lp_conservation_rows(trajectories: list[Trajectory]) -> list:
    """Initial vs final vorticity norm per run; exploratory, no pass/fail."""
    rows = []
    for tr in sorted(trajectories, key=lambda t: t.config.nu, reverse=True):
        s = tr.series
        first = float(s.vorticity_norm[0])
        last = float(s.vorticity_norm[-1])
        rows.append([tr.config.nu, first, last, last / first if first > 0 else 1.0])
    return rows


def projector_study(case: CaseSpec) -> dict:
    """Projection at each study scale plus the automatic pick.

    Rows carry iterations, the friction-condition defect, the p-distance to
    the unprojected data, and the measured contraction factor per scale.
    """
    if case.projection is None or not case.projection.study:
        raise ValueError("case has no projection.study scales")
    cfg = case.solver
    rows = []
    for n in case.projection.study:
        report = project_compatible(case.omega0, n, cfg.alpha, cfg.kappa,
                                    tol=case.projection.tol,
                                    max_iter=case.projection.max_iter)
        dist = lp_norm(ScalarField(cfg.grid,
                                   report.projected.values - case.omega0.values), cfg.p)
        factor = contraction_factor(cfg.grid, cfg.alpha, cfg.kappa, n)
        rows.append([n, report.iterations, report.compat_residual, dist, factor])
    auto_n = select_scale(cfg.grid, cfg.alpha, cfg.kappa)
    return {"rows": rows, "auto_n": auto_n}


def emit_case(result: CaseResult, out_dir: str | Path, dump_fields: bool = False,
              figures: bool = True) -> dict:
    """Persist one run under out_dir/<name>/; returns written paths."""
    base = Path(out_dir) / result.record.name
    paths = {}
    traj = result.trajectory
    if dump_fields:
        for t, snap in traj.snapshots:
            p = dump_field(snap, base / "fields" / f"t{t:.6f}", t=t)
            result.record.field_dumps.append(str(p.relative_to(base)))
    if traj.series.times.size >= 3:
        rows = vorticity_budget(traj)
        paths["budget"] = write_csv(
            base / "budget.csv",
            ["t", "lp_pow", "d_dt_lp_pow", "dissipation", "boundary_flux", "closure_error"],
            [[r.t, r.lp_pow, r.d_dt_lp_pow, r.dissipation, r.boundary_flux,
              r.closure_error] for r in rows])
    paths["record"] = write_record(result.record, base / "record.json")
    if figures:
        from . import figures as fig

        paths["field_figure"] = fig.field_figure(
            traj.snapshots[-1][1], base / "figures" / "vorticity_final.png",
            label=f"t = {traj.snapshots[-1][0]:g}")
        paths["series_figure"] = fig.series_figure(
            traj, base / "figures" / "series.png")
    return paths


def emit_sweep(result: SweepResult, out_dir: str | Path, dump_fields: bool = False,
               figures: bool = True) -> dict:
    """Persist a sweep: per-run artifacts plus the three summary tables."""
    out = Path(out_dir)
    paths = {}
    for r in result.results:
        emit_case(r, out / "runs", dump_fields=dump_fields, figures=figures)
    paths["summary"] = write_csv(
        out / "sweep_summary.csv",
        ["nu", "ratio", "max_vorticity_norm", "final_vorticity_norm",
         "final_energy", "boundary_sup"],
        result.summary_rows)
    paths["cauchy"] = write_csv(out / "cauchy.csv",
                                ["nu_high", "nu_low", "velocity_gap"], result.cauchy)
    paths["lp"] = write_csv(out / "lp_conservation.csv",
                            ["nu", "initial_norm", "final_norm", "ratio"],
                            result.lp_rows)
    if figures:
        from . import figures as fig

        paths["sweep_figure"] = fig.sweep_figure(result.summary_rows,
                                                 out / "figures" / "sweep_ratio.png")
        paths["cauchy_figure"] = fig.cauchy_figure(result.cauchy,
                                                   out / "figures" / "cauchy_gaps.png")
    return paths
