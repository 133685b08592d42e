"""Command-line front end.

Subcommands: generate, validate, compile, eval, simulate, bench.
Exit codes are part of the contract: 0 success, 1 input error,
2 compilation error, 3 validation failure.
"""
from __future__ import annotations

import argparse
import csv
import itertools
import json
import sys

import numpy as np

from . import bench as bench_mod
from . import lp
from .bigm import (DomainError, compute_big_m_exact, compute_big_m_interval)
from .compiler import (KIND_CHECKER, KIND_YANN, KIND_YANN_L, assemble_checker,
                       assemble_yann, assemble_yann_l, load_network,
                       save_network)
from .inference import (Precision, forward_batch, forward_dense,
                        read_points_csv, write_batch_csv)
from .mpc import load_system, simulate, trajectory_to_csv
from .pwa import OutsideDomainError, load_pwa, save_pwa
from .synth import generate_max_affine, generate_vector_pwa

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_COMPILE = 2
EXIT_VALIDATION = 3


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems with the input-error code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _vector(text: str, n: int | None = None) -> np.ndarray:
    values = np.array([float(v) for v in text.split(",")])
    if n is not None and values.size == 1:
        values = np.full(n, values[0])
    return values


def _precision(name: str) -> Precision:
    return Precision(name)


def cmd_generate(args) -> int:
    box = (_vector(args.box_lo, args.n), _vector(args.box_hi, args.n))
    if args.kind == "max-affine":
        f = generate_max_affine(args.seed, args.n, args.p, box)
    else:
        f = generate_vector_pwa(args.seed, args.n, args.m, args.p, box)
    save_pwa(f, args.out)
    print(f"wrote {args.out}: n={f.n} m={f.m} p={f.p} q={f.q}")
    return EXIT_OK


def cmd_validate(args) -> int:
    f = load_pwa(args.pwa)
    print(f"{args.pwa}: n={f.n} m={f.m} p={f.p} q={f.q} "
          f"domain_box={'yes' if f.domain_box is not None else 'no'}")
    if not args.strict:
        return EXIT_OK
    overlaps = []
    for i, j in itertools.combinations(range(f.p), 2):
        rows = f.regions[i].halfspaces + f.regions[j].halfspaces
        centered = lp.chebyshev_center(rows)
        if centered is not None and centered[1] > 1e-7:
            overlaps.append((i, j, centered[1]))
    if overlaps:
        for i, j, r in overlaps:
            print(f"regions {i} and {j} share an interior "
                  f"(inscribed radius {r:.3e})", file=sys.stderr)
        return EXIT_VALIDATION
    print(f"no interior overlaps among {f.p} regions")
    return EXIT_OK


def cmd_compile(args) -> int:
    f = load_pwa(args.pwa)
    try:
        if args.kind == KIND_YANN:
            if args.bigm_method == "exact":
                bound = compute_big_m_exact(f, margin=args.margin)
            else:
                bound = compute_big_m_interval(f, margin=args.margin)
            net = assemble_yann(f, bound, per_row_m=args.per_row_m)
        elif args.kind == KIND_YANN_L:
            net = assemble_yann_l(f)
        else:
            net = assemble_checker(f)
    except DomainError as exc:
        print(f"compilation failed: {exc}", file=sys.stderr)
        return EXIT_COMPILE
    save_network(net, args.out)
    print(f"wrote {args.out}: {net.summary()}")
    return EXIT_OK


def cmd_eval(args) -> int:
    net = load_network(args.net)
    prec = _precision(args.precision)
    if args.x is not None:
        res = forward_dense(net, _vector(args.x), prec)
        u = "[" + ", ".join(f"{float(v):g}" for v in res.output) + "]"
        where = (f"region={res.region_index}" if res.region_index is not None
                 else "region=none (out of domain)")
        print(f"u={u} {where}")
        return EXIT_OK
    if not args.out:
        raise ValueError("--out is required with --in")
    points = read_points_csv(args.infile, net.n)
    outputs, regions = forward_batch(net, points, prec, with_regions=True)
    write_batch_csv(args.out, np.asarray(outputs, dtype=float), regions)
    print(f"wrote {args.out}: {points.shape[0]} rows")
    return EXIT_OK


def _read_extras(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    try:
        float(rows[0][0])
    except ValueError:
        rows = rows[1:]
    return np.array([[float(v) for v in row] for row in rows if row])


def cmd_simulate(args) -> int:
    sys_model = load_system(args.system)
    net = load_network(args.net)
    extras = _read_extras(args.extras) if args.extras else None
    traj = simulate(sys_model, net, _vector(args.x0), args.steps,
                    extras=extras, strict=args.strict,
                    prec=_precision(args.precision))
    trajectory_to_csv(traj, args.out)
    print(f"wrote {args.out}: {len(traj.states) - 1} steps, "
          f"{len(traj.violations)} violation flags")
    return EXIT_OK


def cmd_bench(args) -> int:
    f = load_pwa(args.pwa)
    methods = tuple(m.strip() for m in args.methods.split(","))
    report = bench_mod.run_bench(
        f, n_points=args.points, methods=methods,
        prec=_precision(args.precision), seed=args.seed,
        worst_case_count=args.worst_case)
    print(report.table())
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(report.to_json())
            fh.write("\n")
        print(f"wrote {args.out}")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="yann", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a synthetic PWA function")
    gen.add_argument("--kind", choices=["max-affine", "vector"],
                     default="max-affine")
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--m", type=int, default=1)
    gen.add_argument("--p", type=int, required=True)
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--box-lo", default="-3", help="scalar or comma list")
    gen.add_argument("--box-hi", default="3")
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=cmd_generate)

    val = sub.add_parser("validate", help="check a PWA file")
    val.add_argument("pwa")
    val.add_argument("--strict", action="store_true",
                     help="pairwise LP interior-overlap detection")
    val.set_defaults(func=cmd_validate)

    comp = sub.add_parser("compile", help="compile a PWA file to a network")
    comp.add_argument("pwa")
    comp.add_argument("out")
    comp.add_argument("--kind", choices=[KIND_YANN, KIND_YANN_L,
                                         KIND_CHECKER], default=KIND_YANN)
    comp.add_argument("--bigm-method", choices=["exact", "interval"],
                      default="exact")
    comp.add_argument("--margin", type=float, default=1.25)
    comp.add_argument("--per-row-m", action="store_true")
    comp.set_defaults(func=cmd_compile)

    ev = sub.add_parser("eval", help="evaluate a compiled network")
    ev.add_argument("net")
    group = ev.add_mutually_exclusive_group(required=True)
    group.add_argument("--x", help="inline point, comma separated")
    group.add_argument("--in", dest="infile", help="CSV of points x0..")
    ev.add_argument("--out", help="output CSV (with --in)")
    ev.add_argument("--precision", choices=["fp64", "fp32"], default="fp64")
    ev.set_defaults(func=cmd_eval)

    sim = sub.add_parser("simulate", help="closed-loop simulation")
    sim.add_argument("--system", required=True)
    sim.add_argument("--net", required=True)
    sim.add_argument("--x0", required=True)
    sim.add_argument("--steps", type=int, required=True)
    sim.add_argument("--out", required=True)
    sim.add_argument("--extras", help="CSV of per-step extra controller "
                                      "inputs")
    sim.add_argument("--strict", action="store_true")
    sim.add_argument("--precision", choices=["fp64", "fp32"],
                     default="fp64")
    sim.set_defaults(func=cmd_simulate)

    ben = sub.add_parser("bench", help="timing comparison across methods")
    ben.add_argument("pwa")
    ben.add_argument("--points", type=int, default=1000)
    ben.add_argument("--methods", default="naive,dense,structured,batch")
    ben.add_argument("--precision", choices=["fp64", "fp32"],
                     default="fp64")
    ben.add_argument("--seed", type=int, default=0)
    ben.add_argument("--worst-case", type=int, default=0,
                     help="extra points inside the last region")
    ben.add_argument("--out", help="write the report as JSON")
    ben.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except OutsideDomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (OSError, json.JSONDecodeError, KeyError, ValueError,
            bench_mod.OutputMismatchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
