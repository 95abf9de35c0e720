"""Command line entry point ``kinlag``.

Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .errors import KinlagError, ValidationError


def _floats(text, n=None, what="value"):
    try:
        vals = [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise ValidationError("argument", f"cannot parse {what} {text!r} as numbers") from None
    if n is not None and len(vals) != n:
        raise ValidationError("argument", f"{what} needs {n} comma-separated numbers, got {text!r}")
    return vals


def _cmd_run(args):
    from .bundle import run
    from .scenario import load_scenario
    out, manifest = run(load_scenario(args.scenario), args.out)
    print(json.dumps({"bundle": str(out), "constants": manifest["constants"], "skipped": manifest["skipped"]},
                     sort_keys=True, default=float))


def _cmd_riemann(args):
    from . import flux as fluxmod
    from .scalar import solve_riemann_scalar
    cfg = {"name": args.flux}
    if args.domain:
        cfg["domain"] = _floats(args.domain, 2, "--domain")
    f = fluxmod.from_config(cfg)
    for w in solve_riemann_scalar(f, args.left, args.right):
        print(json.dumps({"kind": w.kind, "u_left": float(w.u_left), "u_right": float(w.u_right),
                          "speed_left": float(w.speed_left), "speed_right": float(w.speed_right)}, sort_keys=True))


def _state(text, what, c, M):
    from .euler3 import EulerState
    rho, m = _floats(text, 2, what)
    st = EulerState(rho, m)
    st.check(c, M, "vacuum guard" if rho < c else "domain", f"{what}: ")
    return st


def _cmd_euler3(args):
    from .euler3 import solve_riemann_euler
    L = _state(args.left, "--left", args.c, args.M)
    R = _state(args.right, "--right", args.c, args.M)
    fan = solve_riemann_euler(L, R, None, args.c, args.M)
    print(json.dumps({"middle": [fan.middle.rho, fan.middle.m]}))
    for w in fan.waves:
        print(json.dumps({"family": w.family, "kind": w.kind, "left": [w.left.rho, w.left.m],
                          "right": [w.right.rho, w.right.m], "speed": w.speed, "d_E": w.d_E}, sort_keys=True))


def _cmd_sweep(args):
    from .bundle import csv_text
    from .euler3 import sweep_shocks
    if args.family not in (1, 2):
        raise ValidationError("argument", "--family must be 1 or 2")
    strengths = _floats(args.strengths, what="--strengths")
    if not strengths or min(strengths) <= 0:
        raise ValidationError("argument", "--strengths must be positive")
    left = None
    if args.left:
        left = _state(args.left, "--left", args.c, args.M)
    rows, fits = sweep_shocks(args.family, strengths, left, args.c, args.M)
    text = csv_text(("strength", "z_jump" if args.family == 1 else "w_jump", "sigma_offset", "d_E"),
                    [r[:4] for r in rows])
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    print(json.dumps({"exponents": fits, "max_rh_residual": float(rows[:, 4].max())}, sort_keys=True),
          file=sys.stderr)


def _cmd_decompose(args):
    from .bundle import decompose_current
    from .scenario import load_scenario
    info = decompose_current(load_scenario(args.scenario), args.out)
    print(json.dumps(info, sort_keys=True, default=float))


def build_parser():
    p = argparse.ArgumentParser(prog="kinlag", description="Kinetic and Lagrangian diagnostics for 1-D conservation laws.")
    p.add_argument("--version", action="version", version=f"kinlag {__version__}")
    sub = p.add_subparsers(dest="cmd", required=True)

    r = sub.add_parser("run", help="run a scenario file and write its bundle")
    r.add_argument("scenario")
    r.add_argument("--out", default=None, help="output directory (overrides the scenario)")
    r.set_defaults(fn=_cmd_run)

    r = sub.add_parser("riemann", help="scalar Riemann problem, one JSON line per wave")
    r.add_argument("--flux", required=True, help="burgers, cubic or affine")
    r.add_argument("--left", type=float, required=True)
    r.add_argument("--right", type=float, required=True)
    r.add_argument("--domain", default=None, help="a,b state interval")
    r.set_defaults(fn=_cmd_riemann)

    for name, fn, helptext in (("euler3-riemann", _cmd_euler3, "gamma = 3 Riemann problem from (rho, m) states"),
                               ("sweep-shocks", _cmd_sweep, "Hugoniot sweep table as CSV")):
        r = sub.add_parser(name, help=helptext)
        if name == "euler3-riemann":
            r.add_argument("--left", required=True, help="rho,m")
            r.add_argument("--right", required=True, help="rho,m")
        else:
            r.add_argument("--family", type=int, required=True)
            r.add_argument("--strengths", required=True, help="comma-separated jumps of the principal invariant")
            r.add_argument("--left", default=None, help="rho,m of the left state")
            r.add_argument("--out", default=None, help="write the CSV here instead of stdout")
        r.add_argument("--c", type=float, default=0.2, help="density floor")
        r.add_argument("--M", type=float, default=10.0, help="state bound")
        r.set_defaults(fn=fn)

    r = sub.add_parser("decompose-current", help="build and decompose the discrete kinetic current")
    r.add_argument("scenario")
    r.add_argument("--out", default=None)
    r.set_defaults(fn=_cmd_decompose)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        args.fn(args)
    except KinlagError as exc:
        print(f"kinlag: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
