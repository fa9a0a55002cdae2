"""Command-line front end: ``twr sweep | optimize | validate | cdf``.

Exit codes
----------
0 success, 1 validation failure, 2 unreadable or malformed input,
3 invalid scenario, 4 analytic non-convergence (NaN cells written),
5 optimizer ratio degenerate with no fallback.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile

from . import __version__, optimizer, presets, sinrcdf, sweep, validate
from .scenario import NodeId, ScenarioError, ScenarioFormatError, load_scenario

EXIT_OK, EXIT_FAIL, EXIT_PARSE, EXIT_SCENARIO, EXIT_NONCONV, EXIT_DEGENERATE = range(6)


def _err(msg: str):
    print(f"twr: {msg}", file=sys.stderr)


def _write_atomic(path: str, text: str):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".twr-")
    with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _load(path: str):
    """Scenario from file, mapping failures onto exit codes."""
    try:
        return load_scenario(path), EXIT_OK
    except (OSError, json.JSONDecodeError, ScenarioFormatError) as exc:
        _err(f"cannot read scenario {path}: {exc}")
        return None, EXIT_PARSE
    except ScenarioError as exc:
        _err(f"invalid scenario {path}: {exc}")
        return None, EXIT_SCENARIO


def cmd_sweep(args) -> int:
    scenario = None
    if args.sweep in presets.PRESETS:
        scenario, doc = presets.get_preset(args.sweep)
    else:
        try:
            with open(args.sweep, encoding="utf-8") as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            _err(f"cannot read sweep {args.sweep}: {exc}")
            return EXIT_PARSE
    if args.scenario:
        scenario, code = _load(args.scenario)
        if code:
            return code
    if scenario is None:
        _err("--scenario is required unless --sweep names a preset")
        return EXIT_PARSE
    try:
        spec = sweep.parse_sweep(doc, args.seed)
    except sweep.SweepSpecError as exc:
        _err(str(exc))
        return EXIT_PARSE
    try:
        cols, rows = sweep.run_sweep(scenario, spec)
    except ScenarioError as exc:
        _err(f"invalid scenario for this sweep: {exc}")
        return EXIT_SCENARIO
    except optimizer.DegenerateRatio as exc:
        _err(str(exc))
        return EXIT_DEGENERATE
    _write_atomic(args.out, sweep.render_csv(cols, rows))
    if any(math.isnan(v) for r in rows for v in r):
        _err("some analytic cells did not converge (written as nan)")
        return EXIT_NONCONV
    return EXIT_OK


def cmd_optimize(args) -> int:
    s, code = _load(args.scenario)
    if code:
        return code
    obj = optimizer.ObjectiveL.from_scenario(s)
    try:
        if args.mode == "joint":
            res = optimizer.joint_optimize(s, args.max_iter)
        elif args.mode == "grid":
            res = optimizer.grid_search(s, args.resolution)
        elif args.mode == "omega":
            w = optimizer.omega_opt(obj.coeffs, *obj.gbars(s.D))
            res = optimizer.OptResult(w, s.D, float(obj(w, s.D)), 1, [(w, s.D, float(obj(w, s.D)))])
        else:
            try:
                D = optimizer.d_opt(obj.coeffs, s.omega, s.P, s.v)
            except optimizer.DegenerateRatio:
                D = optimizer._d_by_search(obj, s.omega)
            if not 0.0 < D < 1.0:
                raise optimizer.DegenerateRatio("position search left (0, 1)")
            res = optimizer.OptResult(s.omega, D, float(obj(s.omega, D)), 1,
                                      [(s.omega, D, float(obj(s.omega, D)))])
    except optimizer.DegenerateRatio as exc:
        _err(str(exc))
        return EXIT_DEGENERATE
    out = res.as_dict()
    out["mode"] = args.mode
    out["outage_asy"] = float(obj.outage(res.omega_opt, res.d_opt, args.gamma_th))
    _write_atomic(args.out, json.dumps(out, indent=2) + "\n")
    return EXIT_OK


def cmd_validate(args) -> int:
    results = validate.run_battery(args.level, only=args.only)
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} criteria passed")
    return EXIT_OK if passed == len(results) else EXIT_FAIL


def cmd_cdf(args) -> int:
    s, code = _load(args.scenario)
    if code:
        return code
    try:
        ctx = sinrcdf.context_for_terminal(s, args.terminal)
    except ScenarioError as exc:
        _err(str(exc))
        return EXIT_SCENARIO
    rows, bad = [], False
    for g in args.gamma:
        v = sinrcdf.evaluate(ctx, g, args.method, fallback=True)
        bad |= not v.ok and not v.diagnostics.get("substituted")
        rows.append([g, v.value])
    text = sweep.render_csv(["gamma", f"cdf_{args.method}"], rows)
    if args.out:
        _write_atomic(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_NONCONV if bad else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="override every Monte Carlo seed")
    p = argparse.ArgumentParser(prog="twr", parents=[common],
                                description="Three-phase two-way relaying with co-channel interference.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("sweep", parents=[common], help="run a parameter sweep, write CSV")
    sp.add_argument("--scenario", help="scenario JSON (optional with a preset)")
    sp.add_argument("--sweep", required=True, help=f"sweep JSON or preset {sorted(presets.PRESETS)}")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_sweep)

    op = sub.add_parser("optimize", parents=[common], help="optimize power split / relay position")
    op.add_argument("--scenario", required=True)
    op.add_argument("--mode", choices=sweep.OPT_MODES, default="joint")
    op.add_argument("--max-iter", type=int, default=3)
    op.add_argument("--resolution", type=int, default=200)
    op.add_argument("--gamma-th", type=float, default=7.0)
    op.add_argument("--out", required=True)
    op.set_defaults(func=cmd_optimize)

    vp = sub.add_parser("validate", parents=[common], help="run the acceptance battery")
    vp.add_argument("--level", choices=("fast", "full"), default="fast")
    vp.add_argument("--only", type=int, nargs="+", choices=sorted(validate.CRITERIA))
    vp.set_defaults(func=cmd_validate)

    cp = sub.add_parser("cdf", parents=[common], help="evaluate a terminal's SINR CDF")
    cp.add_argument("--scenario", required=True)
    cp.add_argument("--terminal", choices=("T1", "T2"), default="T1")
    cp.add_argument("--method", choices=[m.value for m in sinrcdf.Method], default="lower_bound")
    cp.add_argument("--gamma", type=float, nargs="+", required=True)
    cp.add_argument("--out")
    cp.set_defaults(func=cmd_cdf)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if not hasattr(args, "seed"):
        args.seed = None
    if args.command == "optimize" and args.max_iter < 1:
        _err("--max-iter must be >= 1")
        return EXIT_PARSE
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
