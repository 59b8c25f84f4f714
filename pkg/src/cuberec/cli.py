"""Command-line entry point: ``cuberec <subcommand> ...``.

Exit codes: 0 on success, 1 when ``verify`` finds a failing check, 2 on
resource or validation errors. The point cap is read from ``CUBEREC_MAX_POINTS``.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .adversary import build_fooling, check_feasibility, estimate_K
from .core import CubeRecError, GridSpec, SampleTable, SmoothnessClass
from .designs import PointSet, build_recovery_design
from .envelopes import complexity_count, envelope_table
from .lab.battery import BATTERY_IDS, battery
from .lab.sweep import SweepConfig, run_sweep
from .lab.verify import report_json, verify_suite
from .recover import fit_taylor_models, sup_error

RECOVER_CSV_HEADER = ("d", "r", "m", "h", "n_points", "sup_estimate", "witness")


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def cmd_design(args) -> int:
    design = build_recovery_design(GridSpec(args.m, args.d), args.r, args.h)
    _emit(_dumps(design.to_json()), args.out)
    return 0


def cmd_recover(args) -> int:
    fn = battery(args.function, args.r, args.d)
    design = build_recovery_design(GridSpec(args.m, args.d), args.r, args.h)
    samples = SampleTable.from_function(design.all_points, fn, provenance=args.function)
    model = fit_taylor_models(design, samples)
    probe = args.probe_m if args.probe_m is not None else 4 * args.m
    report = sup_error(model, fn, probe)
    payload = {
        **report.to_json(),
        "d": args.d, "r": args.r, "m": args.m, "h": design.h,
        "function": args.function, "n_points": design.n_points, "probe_m": probe,
    }
    _emit(_dumps(payload), args.out)
    if args.csv:
        path = Path(args.csv)
        fresh = not path.exists() or path.stat().st_size == 0
        with path.open("a", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            if fresh:
                w.writerow(RECOVER_CSV_HEADER)
            w.writerow([args.d, args.r, args.m, repr(design.h), design.n_points,
                        repr(report.sup_estimate), ";".join(repr(c) for c in report.witness)])
    return 0


def _load_design(path: str) -> PointSet:
    data = json.loads(Path(path).read_text())
    if isinstance(data, dict):
        pts = data.get("points", [])
        d = data.get("d") or (data.get("grid") or {}).get("d")
    else:
        pts, d = data, None
    if d is None:
        if not pts:
            raise ValueError("an empty design file must state its dimension as 'd'")
        d = len(pts[0])
    return PointSet(pts, d=d)


def cmd_adversary(args) -> int:
    P = _load_design(args.design)
    cls = SmoothnessClass(args.r, P.d, args.kind)
    K_hat = estimate_K(args.r, seed=args.seed)
    inst = build_fooling(P, cls, K_hat, args.probe_m)
    rep = check_feasibility(inst, n_tuples=args.tuples, seed=args.seed)
    payload = {
        "z": list(inst.z), "R": inst.R, "K_hat": K_hat, "bound": inst.peak,
        "feasible": rep.feasible, "max_derivative": rep.max_derivative,
        "n": len(P), "d": P.d, "r": args.r, "kind": cls.kind.value,
    }
    _emit(_dumps(payload), args.out)
    return 0


def cmd_envelope(args) -> int:
    _emit(envelope_table(args.d, args.r, args.m_max, args.kind).to_csv(), args.out)
    return 0


def cmd_count(args) -> int:
    K_hat = estimate_K(args.r, seed=args.seed)
    _emit(_dumps(complexity_count(args.epsilon, args.d, args.r, args.kind, K_hat).to_json()), args.out)
    return 0


def _int_list(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def cmd_sweep(args) -> int:
    if args.config:
        data = json.loads(Path(args.config).read_text())
    else:
        data = {}
    for key in ("d_list", "r_list", "m_list"):
        value = getattr(args, key)
        if value is not None:
            data[key] = value
    for key in ("kind", "probe_m", "seed"):
        value = getattr(args, key)
        if value is not None:
            data[key] = value
    if args.out:
        data["output_path"] = args.out
    config = SweepConfig.from_json(data)
    if config.output_path in ("", "-"):
        sys.stdout.write(run_sweep(config, write=False))
    else:
        run_sweep(config)
    return 0


def cmd_verify(args) -> int:
    report = verify_suite(args.seed, only=args.only)
    _emit(report_json(report), args.out)
    if not args.out:
        return 0 if report["all_passed"] else 1
    for entry in report["checks"]:
        mark = "PASS" if entry["passed"] else "FAIL"
        print(f"{mark} {entry['module']}.{entry['name']}", file=sys.stderr)
    return 0 if report["all_passed"] else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cuberec", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def grid_flags(sp):
        sp.add_argument("--m", type=int, required=True, help="grid subdivisions per axis")
        sp.add_argument("--d", type=int, required=True, help="dimension")
        sp.add_argument("--r", type=int, required=True, help="smoothness order")
        sp.add_argument("--h", type=float, default=None, help="stencil step (default 1/(2m max(r-1,1)))")

    sp = sub.add_parser("design", help="emit a grid+stencil design as JSON")
    grid_flags(sp)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_design)

    sp = sub.add_parser("recover", help="fit a battery function and report its sup error")
    grid_flags(sp)
    sp.add_argument("--function", required=True, choices=BATTERY_IDS)
    sp.add_argument("--probe-m", type=int, default=None, help="probe grid resolution (default 4m)")
    sp.add_argument("--csv", default="recover.csv", help="CSV file to append a row to ('' disables)")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_recover)

    sp = sub.add_parser("adversary", help="fooling-function lower bound for a design file")
    sp.add_argument("--design", required=True, help="JSON file: design output or a list of points")
    sp.add_argument("--r", type=int, required=True)
    sp.add_argument("--kind", default="Directional", choices=["Standard", "Directional"])
    sp.add_argument("--probe-m", type=int, default=16)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--tuples", type=int, default=10_000, help="sampled derivative tuples for the feasibility check")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_adversary)

    sp = sub.add_parser("envelope", help="envelope table as CSV")
    sp.add_argument("--d", type=int, required=True)
    sp.add_argument("--r", type=int, required=True)
    sp.add_argument("--m-max", type=int, required=True)
    sp.add_argument("--kind", default="Standard", choices=["Standard", "Directional"])
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_envelope)

    sp = sub.add_parser("count", help="upper and lower sample counts for a target error")
    sp.add_argument("--epsilon", type=float, required=True)
    sp.add_argument("--d", type=int, required=True)
    sp.add_argument("--r", type=int, required=True)
    sp.add_argument("--kind", default="Standard", choices=["Standard", "Directional"])
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_count)

    sp = sub.add_parser("sweep", help="run an experiment sweep, writing CSV")
    sp.add_argument("--config", help="JSON SweepConfig")
    sp.add_argument("--d-list", dest="d_list", type=_int_list)
    sp.add_argument("--r-list", dest="r_list", type=_int_list)
    sp.add_argument("--m-list", dest="m_list", type=_int_list)
    sp.add_argument("--kind", choices=["Standard", "Directional"])
    sp.add_argument("--probe-m", dest="probe_m", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out", help="CSV path ('-' for stdout)")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("verify", help="run the invariant suite; exit 1 on any failure")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--only", nargs="*", help="restrict to the named checks")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_verify)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CubeRecError, ValueError, TypeError, OSError) as exc:
        print(f"cuberec: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
