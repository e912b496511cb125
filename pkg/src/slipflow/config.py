"""TOML configuration for the harness.

Sections: [grid], [solver], [friction], [initial], and optionally
[projection], [sweep], [output].  Unknown sections or keys are hard errors;
a typo should never silently fall back to a default.
"""
from __future__ import annotations

import inspect
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python 3.10
    import tomli as tomllib

from .grid import FrictionProfile, PolarGrid, ScalarField, build_grid
from .initial_data import BUILTIN_FIELDS
from .solver import SolverConfig

__all__ = [
    "CaseSpec",
    "OutputSpec",
    "ProjectionSpec",
    "load_case",
    "parse_case",
]

_SCHEMA = {
    "grid": {"R", "n_theta", "n_r"},
    "solver": {"nu", "T", "p", "cfl", "dt_max", "corrector_passes",
               "snapshot_times", "snapshot_count"},
    "friction": {"constant", "cos", "sin"},
    "initial": None,  # validated against the named constructor
    "projection": {"n", "tol", "max_iter", "study"},
    "sweep": {"nu_list"},
    "output": {"directory", "dump_fields", "figures"},
}


@dataclass(frozen=True)
class ProjectionSpec:
    """Projection request: collar scale (None = pick automatically),
    stopping tolerance, iteration cap, and the scales of a study run."""

    n: int | None
    tol: float = 1e-10
    max_iter: int = 100
    study: tuple[int, ...] = ()


@dataclass(frozen=True)
class OutputSpec:
    directory: str = "out"
    dump_fields: bool = False
    figures: bool = True


@dataclass(frozen=True)
class CaseSpec:
    """Everything one CLI invocation needs, resolved to concrete objects."""

    solver: SolverConfig
    omega0: ScalarField
    initial_name: str
    initial_params: dict
    projection: ProjectionSpec | None
    output: OutputSpec
    nu_list: tuple[float, ...] | None


def _fail(path: str, message: str) -> None:
    raise ValueError(f"config {path}: {message}")


def _check_keys(raw: dict) -> None:
    for section, table in raw.items():
        if section not in _SCHEMA:
            _fail(section, "unknown section")
        if not isinstance(table, dict):
            _fail(section, "expected a table")
        allowed = _SCHEMA[section]
        if allowed is None:
            continue
        for key in table:
            if key not in allowed:
                _fail(f"{section}.{key}", "unknown key")


def _require(raw: dict, section: str, key: str):
    table = raw.get(section)
    if table is None:
        _fail(section, "section is required")
    if key not in table:
        _fail(f"{section}.{key}", "key is required")
    return table[key]


def _snapshot_times(solver_tab: dict, T: float) -> tuple[float, ...]:
    times = solver_tab.get("snapshot_times")
    count = solver_tab.get("snapshot_count")
    if times is not None and count is not None:
        _fail("solver.snapshot_times", "give either a list or a count, not both")
    if count is not None:
        if not isinstance(count, int) or count < 1:
            _fail("solver.snapshot_count", f"expected a positive integer, got {count!r}")
        return tuple(np.linspace(T / count, T, count))
    if times is None:
        return ()
    return tuple(float(t) for t in times)


def _initial_field(grid: PolarGrid, table: dict) -> tuple[ScalarField, str, dict]:
    name = table.get("name")
    if name is None:
        _fail("initial.name", "key is required")
    builder = BUILTIN_FIELDS.get(name)
    if builder is None:
        _fail("initial.name", f"unknown field {name!r}; "
              f"builtin: {', '.join(sorted(BUILTIN_FIELDS))}")
    params = {k: v for k, v in table.items() if k != "name"}
    accepted = set(inspect.signature(builder).parameters) - {"grid"}
    for key in params:
        if key not in accepted:
            _fail(f"initial.{key}", f"unknown parameter for {name}")
    kwargs = {k: tuple(v) if isinstance(v, list) else v for k, v in params.items()}
    return builder(grid, **kwargs), name, kwargs


def parse_case(raw: dict) -> CaseSpec:
    """Resolve a parsed TOML document into grid, config, and data objects."""
    _check_keys(raw)
    R = float(raw.get("grid", {}).get("R", 1.0))
    n_theta = _require(raw, "grid", "n_theta")
    n_r = _require(raw, "grid", "n_r")
    grid = build_grid(R, int(n_theta), int(n_r))

    fric = raw.get("friction", {})
    alpha = FrictionProfile(grid, float(fric.get("constant", 0.0)),
                            cos_coeffs=tuple(fric.get("cos", ())),
                            sin_coeffs=tuple(fric.get("sin", ())))

    sol = raw.get("solver")
    if sol is None:
        _fail("solver", "section is required")
    T = float(_require(raw, "solver", "T"))
    solver = SolverConfig(
        grid=grid,
        nu=float(_require(raw, "solver", "nu")),
        alpha=alpha,
        T=T,
        p=float(sol.get("p", 4.0)),
        cfl=float(sol.get("cfl", 0.4)),
        dt_max=float(sol.get("dt_max", 5e-3)),
        corrector_passes=int(sol.get("corrector_passes", 1)),
        snapshot_times=_snapshot_times(sol, T),
    )

    omega0, name, params = _initial_field(grid, raw.get("initial") or
                                          _fail("initial", "section is required"))

    projection = None
    if "projection" in raw:
        ptab = raw["projection"]
        n_raw = ptab.get("n", "auto")
        if n_raw == "auto":
            n_val = None
        elif isinstance(n_raw, int) and n_raw >= 1:
            n_val = n_raw
        else:
            _fail("projection.n", f"expected a positive integer or 'auto', got {n_raw!r}")
        projection = ProjectionSpec(n=n_val,
                                    tol=float(ptab.get("tol", 1e-10)),
                                    max_iter=int(ptab.get("max_iter", 100)),
                                    study=tuple(int(k) for k in ptab.get("study", ())))

    nu_list = None
    if "sweep" in raw:
        values = tuple(float(v) for v in _require(raw, "sweep", "nu_list"))
        if any(v <= 0.0 for v in values):
            _fail("sweep.nu_list", "viscosities must be positive")
        if any(b >= a for a, b in zip(values, values[1:])):
            _fail("sweep.nu_list", "viscosities must be strictly decreasing")
        nu_list = values

    out = raw.get("output", {})
    output = OutputSpec(directory=str(out.get("directory", "out")),
                        dump_fields=bool(out.get("dump_fields", False)),
                        figures=bool(out.get("figures", True)))

    if not math.isfinite(T):
        _fail("solver.T", "must be finite")
    return CaseSpec(solver=solver, omega0=omega0, initial_name=name,
                    initial_params=params, projection=projection,
                    output=output, nu_list=nu_list)


def load_case(path: str | Path) -> CaseSpec:
    """Parse a TOML config file into a CaseSpec."""
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    return parse_case(raw)
