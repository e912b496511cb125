"""Command-line interface: run, sweep, project, verify, report."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import load_case
from .records import load_record, write_csv, write_record, RunRecord
from .solver import SolverError


def _out_dir(case, override: str | None) -> Path:
    return Path(override) if override else Path(case.output.directory)


def _cmd_run(args) -> int:
    from . import harness

    case = load_case(args.config)
    out = _out_dir(case, args.out)
    try:
        result = harness.run_case(case)
    except SolverError as exc:
        record = RunRecord(name="aborted", config={"file": str(args.config)},
                           summary={"error": str(exc)}, series={}, partial=True)
        path = write_record(record, out / "aborted" / "record.json")
        print(f"solver aborted: {exc}", file=sys.stderr)
        print(f"partial record: {path}", file=sys.stderr)
        return 1
    paths = harness.emit_case(result, out, dump_fields=case.output.dump_fields,
                              figures=case.output.figures)
    s = result.record.summary
    print(f"run {result.record.name}: {s['steps']} steps, "
          f"final norm {s['final_vorticity_norm']:.6g}, "
          f"ratio {s['ratio']:.6g}")
    print(f"record: {paths['record']}")
    return 0


def _cmd_sweep(args) -> int:
    from . import harness

    case = load_case(args.config)
    if not case.nu_list:
        print("config has no [sweep] nu_list", file=sys.stderr)
        return 2
    out = _out_dir(case, args.out)
    result = harness.sweep(case)
    paths = harness.emit_sweep(result, out, dump_fields=case.output.dump_fields,
                               figures=case.output.figures)
    for row in result.summary_rows:
        print(f"nu {row[0]:<10g} ratio {row[1]:.6f}")
    print(f"summary: {paths['summary']}")
    return 0


def _cmd_project(args) -> int:
    from . import harness

    case = load_case(args.config)
    study = harness.projector_study(case)
    out = _out_dir(case, args.out)
    path = write_csv(out / "projector_study.csv",
                     ["n", "iterations", "compat_residual", "distance",
                      "contraction_factor"],
                     study["rows"])
    for row in study["rows"]:
        print(f"n {row[0]:<4d} iterations {row[1]:<4d} defect {row[2]:.3e} "
              f"distance {row[3]:.6f} factor {row[4]:.4f}")
    print(f"automatic scale: n = {study['auto_n']}")
    print(f"table: {path}")
    return 0


def _cmd_verify(args) -> int:
    from . import verification

    if args.list:
        for check in verification.CHECKS:
            print(f"{check.ident}: {check.title}")
        return 0
    only = [s for s in (args.only or "").split(",") if s] or None
    return 0 if verification.run_all(only=only) else 1


def _cmd_report(args) -> int:
    root = Path(args.dir)
    records = sorted(root.rglob("record.json"))
    if not records:
        print(f"no records under {root}", file=sys.stderr)
        return 2
    rows = []
    lp = []
    for path in records:
        rec = load_record(path)
        if rec.partial:
            continue
        s = rec.summary
        nu = rec.config["solver"]["nu"]
        rows.append([nu, rec.name, s["ratio"], s["max_vorticity_norm"],
                     s["final_vorticity_norm"], s["final_energy"], s["boundary_sup"]])
        lp.append([nu, s["initial_vorticity_norm"], s["final_vorticity_norm"],
                   s["final_vorticity_norm"] / s["initial_vorticity_norm"]])
    rows.sort(key=lambda r: -r[0])
    lp.sort(key=lambda r: -r[0])
    summary = write_csv(root / "report_summary.csv",
                        ["nu", "name", "ratio", "max_vorticity_norm",
                         "final_vorticity_norm", "final_energy", "boundary_sup"],
                        rows)
    write_csv(root / "report_lp.csv",
              ["nu", "initial_norm", "final_norm", "ratio"], lp)
    if not args.no_figures and len(rows) > 1:
        from . import figures as fig

        fig.sweep_figure([[r[0], r[2]] for r in rows],
                         root / "figures" / "report_ratio.png")
    print(f"{len(rows)} records -> {summary}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="slipflow",
        description="Vorticity solver on the unit disk with wall friction: "
                    "runs, viscosity sweeps, data projection, verification.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="integrate one case and persist its record")
    p.add_argument("--config", required=True, help="TOML case file")
    p.add_argument("--out", help="override the output directory")
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("sweep", help="run the viscosity sweep and its reports")
    p.add_argument("--config", required=True, help="TOML case file")
    p.add_argument("--out", help="override the output directory")
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("project", help="projection study across collar scales")
    p.add_argument("--config", required=True, help="TOML case file")
    p.add_argument("--out", help="override the output directory")
    p.set_defaults(fn=_cmd_project)

    p = sub.add_parser("verify", help="run the built-in oracle and property suite")
    p.add_argument("--only", help="comma-separated subset of check ids")
    p.add_argument("--list", action="store_true", help="list check ids and exit")
    p.set_defaults(fn=_cmd_verify)

    p = sub.add_parser("report", help="regenerate tables from stored records")
    p.add_argument("--dir", required=True, help="directory holding run records")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(fn=_cmd_report)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
