"""Persistence: JSON run records, CSV tables, and raw field dumps.

CSV is UTF-8 with a header row, '.' decimal separator, and '\n' line ends.
Field dumps are flat little-endian 64-bit floats in row-major (angle,
radius) order, each with a JSON sidecar giving shape and grid; a round trip
through dump_field/load_field is bit-identical.
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .grid import ScalarField, build_grid

__all__ = [
    "RunRecord",
    "dump_field",
    "load_field",
    "load_record",
    "write_csv",
    "write_record",
]


@dataclass
class RunRecord:
    """Everything persisted about one run.

    Numeric content is a pure function of the config; provenance carries
    the only non-reproducible fields (timestamps).
    """

    name: str
    config: dict
    summary: dict
    series: dict
    euler: bool = False
    projected: bool = False
    partial: bool = False
    projection: dict | None = None
    field_dumps: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)


def _stamp_provenance(record: RunRecord) -> None:
    from . import __version__

    record.provenance.setdefault("version", __version__)
    record.provenance.setdefault("created",
                                 datetime.now(timezone.utc).isoformat(timespec="seconds"))


def write_record(record: RunRecord, path: str | Path) -> Path:
    """Write one record as sorted-key JSON; returns the path."""
    path = Path(path)
    _stamp_provenance(record)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(asdict(record), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def load_record(path: str | Path) -> RunRecord:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    return RunRecord(**data)


def write_csv(path: str | Path, header: list, rows: list) -> Path:
    """Deterministic CSV: floats via repr, '\n' terminators, UTF-8."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return path


def _dump_base(path: str | Path) -> Path:
    # append, never replace: a dotted stem like "t0.04" must survive intact
    base = Path(path)
    if base.suffix == ".f64":
        base = base.parent / base.name[:-len(".f64")]
    return base


def dump_field(field_: ScalarField, path: str | Path, t: float | None = None) -> Path:
    """Raw dump plus sidecar; path gets the '.f64' suffix, sidecar '.json'."""
    base = _dump_base(path)
    path = base.parent / (base.name + ".f64")
    path.parent.mkdir(parents=True, exist_ok=True)
    grid = field_.grid
    with open(path, "wb") as fh:
        fh.write(np.ascontiguousarray(field_.values, dtype="<f8").tobytes())
    sidecar = {
        "shape": list(grid.shape),
        "order": "angle-major",
        "dtype": "<f8",
        "R": grid.R,
        "n_theta": grid.n_theta,
        "n_r": grid.n_r,
    }
    if t is not None:
        sidecar["t"] = t
    with open(base.parent / (base.name + ".json"), "w", encoding="utf-8",
              newline="\n") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def load_field(path: str | Path) -> tuple[ScalarField, dict]:
    """Inverse of dump_field; reconstructs the grid from the sidecar."""
    base = _dump_base(path)
    path = base.parent / (base.name + ".f64")
    with open(base.parent / (base.name + ".json"), encoding="utf-8") as fh:
        meta = json.load(fh)
    grid = build_grid(meta["R"], meta["n_theta"], meta["n_r"])
    raw = np.frombuffer(path.read_bytes(), dtype="<f8")
    values = raw.reshape(meta["shape"][0], meta["shape"][1])
    return ScalarField(grid, values), meta
