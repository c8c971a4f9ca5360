"""Command-line interface.

Subcommands: classify, angles-check, volume, rectify, flow, selftest.
Exit codes: 0 success, 1 domain error (with a machine-readable
``ERR <code> <detail>`` line), 2 usage error.  All numeric output uses
12 significant digits; the environment variable ``POLYVOL_SEED``
overrides ``--seed``.
"""

from __future__ import annotations

import argparse
import os
import sys

from .errors import PolyvolError


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_classify(args) -> int:
    from .polyhedron import parse_polyhedron, classify_vertices

    P = parse_polyhedron(_read(args.input), verify="full")
    report = classify_vertices(P, tol=args.tol_ideal)
    lines = []
    for kind, status in zip(report.kinds, report.statuses):
        lines.append(f"{kind} {status}")
    lines.append(f"OVERALL {report.overall}")
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_angles_check(args) -> int:
    from .graphs import parse_graph, check_hyperideal_angles

    g = parse_graph(_read(args.input))
    values = [float(x) for x in args.angles.replace(",", " ").split()]
    if len(values) != len(g.edges):
        print(f"ERR AngleOutOfRange expected {len(g.edges)} angles, got {len(values)}")
        return 1
    angles = {e: values[i] for i, e in enumerate(g.edges)}
    rep = check_hyperideal_angles(g, angles)
    if rep.admissible:
        out = "Admissible\n"
    else:
        w = rep.witness
        kind = "ViolatedClosedCurve" if rep.status == "violated_closed_curve" else "ViolatedArc"
        edges = " ".join(f"{u}-{v}" for (u, v) in w.crossed_edges)
        out = (f"{kind} edges {edges} sum {_fmt(w.angle_sum)} "
               f"bound {_fmt(w.bound)}\n")
    _emit(out, args.out)
    return 0


def _cmd_volume(args) -> int:
    from .polyhedron import parse_polyhedron
    from .volume import polyhedron_volume

    P = parse_polyhedron(_read(args.input), rectified=args.rectified,
                         verify="full")
    res = polyhedron_volume(P, tol=args.quad_tol, budget=args.quad_budget)
    _emit(f"VOL {_fmt(res.value)} {_fmt(res.error_estimate)}\n", args.out)
    return 0


def _cmd_rectify(args) -> int:
    from .graphs import parse_graph
    from .polyhedron import format_polyhedron
    from .rectify import rectification
    from .volume import polyhedron_volume

    g = parse_graph(_read(args.input))
    P = rectification(g)
    res = polyhedron_volume(P)
    text = format_polyhedron(P) + f"VOL {_fmt(res.value)} {_fmt(res.error_estimate)}\n"
    _emit(text, args.out)
    return 0


def _cmd_flow(args) -> int:
    from .flow import FlowOptions, run_flow, trace_to_csv, nudge_ideal_vertices
    from .polyhedron import parse_polyhedron, classify_vertices, PointKind

    P = parse_polyhedron(_read(args.input), verify="full")
    if any(k == PointKind.IDEAL for k in classify_vertices(P).kinds):
        P = nudge_ideal_vertices(P)
    opts = FlowOptions(seed=args.seed, t_floor=args.t_floor)
    trace = run_flow(P, opts)
    _emit(trace_to_csv(trace), args.out)
    return 0


def _cmd_selftest(args) -> int:
    from . import selftest

    results = selftest.run_all(seed=args.seed, criteria=args.criteria)
    lines = []
    ok = True
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        ok = ok and r.passed
        lines.append(f"{status} {r.name}: {r.detail} ({r.elapsed:.1f}s)")
    _emit("\n".join(lines) + "\n", args.out)
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="polyvol",
        description="Generalized hyperbolic polyhedra: classification, volumes, "
                    "rectifications, and volume-increasing angle flows.")
    p.add_argument("--seed", type=int, default=None,
                   help="random seed (env POLYVOL_SEED overrides)")
    p.add_argument("--tol-ideal", type=float, default=1e-9,
                   help="ideal-band tolerance on |p| - 1")
    p.add_argument("--quad-tol", type=float, default=1e-5,
                   help="absolute quadrature tolerance")
    p.add_argument("--quad-budget", type=int, default=10_000_000,
                   help="quadrature evaluation budget")
    p.add_argument("--out", default=None, help="write output to a file")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("classify", help="per-vertex kind and properness status")
    c.add_argument("input", help="polyhedron text file")
    c.set_defaults(func=_cmd_classify)

    c = sub.add_parser("angles-check", help="hyperideal angle admissibility")
    c.add_argument("input", help="graph text file")
    c.add_argument("--angles", required=True,
                   help="angles per edge, ordered by the sorted edge list")
    c.set_defaults(func=_cmd_angles_check)

    c = sub.add_parser("volume", help="hyperbolic volume of the truncation")
    c.add_argument("input", help="polyhedron text file")
    c.add_argument("--rectified", action="store_true",
                   help="input realizes a rectification (edges tangent)")
    c.set_defaults(func=_cmd_volume)

    c = sub.add_parser("rectify", help="edge-tangent realization of a graph")
    c.add_argument("input", help="graph text file")
    c.set_defaults(func=_cmd_rectify)

    c = sub.add_parser("flow", help="volume-increasing angle flow (CSV trace)")
    c.add_argument("input", help="polyhedron text file (the flow seed)")
    c.add_argument("--t-floor", type=float, default=1e-3)
    c.set_defaults(func=_cmd_flow)

    c = sub.add_parser("selftest", help="run the acceptance corpus")
    c.add_argument("--criteria", default=None,
                   help="comma-separated criterion numbers (default: all)")
    c.set_defaults(func=_cmd_selftest)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    env_seed = os.environ.get("POLYVOL_SEED")
    if env_seed is not None:
        args.seed = int(env_seed)
    if args.seed is None:
        args.seed = 0
    try:
        return args.func(args)
    except PolyvolError as exc:
        print(f"ERR {exc.code} {exc.detail}")
        return 1
    except FileNotFoundError as exc:
        print(f"ERR FileNotFound {exc.filename}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
