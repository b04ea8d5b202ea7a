"""Command line entry point: ``wgspec run|validate|oracle|dump-operator``."""

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import harness
from .cross_section import build_lattice, lambda02_bruteforce, make_fiber, solve_vertical_grid
from .errors import WaveguideError


def _cmd_run(args):
    rec = harness.run_experiment(args.config, out_dir=args.out, threads=args.threads)
    for name, chk in rec.checks.items():
        print(f"{name}: {'PASS' if chk['pass'] else 'FAIL'}")
    for v, s in rec.slopes.items():
        if "slope" in s:
            print(f"slope[{v}] = {s['slope']:.4f}")
    return 0 if all(c["pass"] for c in rec.checks.values()) else 1


def _cmd_validate(args):
    problems = harness.validate_config(args.config)
    for name, msg in problems:
        print(f"{name}: {msg}")
    if not problems:
        print("ok")
    return 1 if problems else 0


def lambda02_oracle(cfg, fields=(0.02, 0.01, 0.005)):
    """Resolvent-path coefficient of B_par^2 against a brute-force fit of the magnetic fibre ground energy."""
    cfg = harness.load_config(cfg)
    fiber = make_fiber(cfg.fiber)
    if not fiber.massive:
        return {"kind": "hollow_circle", "resolvent": 0.25, "closed_form": 0.25, "relative_difference": 0.0}
    h = cfg.grid.h_for(0) or fiber.h
    if h is None:
        raise WaveguideError("the oracle needs a fibre mesh step h_F")
    lat = build_lattice(fiber.fiber_mask(), h)
    vs = solve_vertical_grid(fiber.fiber_mask(), h, lattice=lat)
    c_res = float(vs.lambda02_coeffs[0])
    c_fit, c4, table, base = lambda02_bruteforce(lat, fields)
    return {"kind": fiber.kind, "h_F": h, "resolvent": c_res, "bruteforce": c_fit, "quartic": c4,
            "relative_difference": abs(c_res - c_fit) / abs(c_fit), "lambda0": base,
            "table": table.tolist()}


def _cmd_oracle(args):
    if args.which != "lambda02":
        raise SystemExit(f"unknown oracle {args.which!r}")
    res = lambda02_oracle(args.config)
    print(json.dumps(res, indent=2))
    return 0 if res["relative_difference"] < args.tol else 1


def _cmd_dump(args):
    op = harness.operator_for(args.config, args.variant, args.eps)
    os.makedirs(args.out, exist_ok=True)
    stem = os.path.join(args.out, f"{args.variant}_eps{args.eps:g}")
    op.to_matrix_market(stem + ".mtx")
    if hasattr(op, "to_csv"):
        op.to_csv(stem + ".csv")
    print(stem + ".mtx")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="wgspec", description="Spectra of thin magnetic waveguides")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an epsilon sweep and write CSV/JSON results")
    r.add_argument("config")
    r.add_argument("--out", default=None)
    r.add_argument("--threads", type=int, default=1)
    r.set_defaults(func=_cmd_run)

    v = sub.add_parser("validate", help="check a config without solving")
    v.add_argument("config")
    v.set_defaults(func=_cmd_validate)

    o = sub.add_parser("oracle", help="independent cross-checks")
    o.add_argument("which", choices=["lambda02"])
    o.add_argument("config")
    o.add_argument("--tol", type=float, default=0.02)
    o.set_defaults(func=_cmd_oracle)

    d = sub.add_parser("dump-operator", help="write an assembled operator in Matrix Market format")
    d.add_argument("config")
    d.add_argument("--variant", required=True)
    d.add_argument("--eps", type=float, required=True)
    d.add_argument("--out", default=".")
    d.set_defaults(func=_cmd_dump)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    np.set_printoptions(precision=10)
    try:
        return args.func(args)
    except WaveguideError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
