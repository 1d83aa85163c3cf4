"""Command-line interface.

Exit codes are the machine contract:

    0  success (solve: every order Optimal; member: member)
    1  unreadable, malformed or schema-invalid input, or an I/O failure
    2  a relaxation ended without a verified optimum
    3  certification failed (solve without --force, certify)
    4  member: non-member
    5  member: inconclusive
    6  discretize: grid too large
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .fileio import ProblemFileError, load_problem, result_document
from .moments import IndexSet, moment
from .relax import (
    GridTooLarge,
    Membership,
    boundary_trace,
    build_dual,
    discretize_baseline,
    membership,
    solve_hierarchy,
    unit_directions,
)
from .sdp import DEFAULT_TOL, Status, export_sdpa
from .soscert import validate_problem

EXIT_OK, EXIT_INPUT, EXIT_SOLVER, EXIT_CERT, EXIT_NONMEMBER, EXIT_INCONCLUSIVE, EXIT_GRID = range(7)

class UsageError(Exception):
    pass


def parse_orders(text: str) -> list:
    """``"3"``, ``"1..8"`` or ``"1,2,4,8"``."""
    try:
        if ".." in text:
            lo, hi = text.split("..")
            orders = list(range(int(lo), int(hi) + 1))
        else:
            orders = [int(t) for t in text.split(",")]
    except ValueError:
        raise UsageError(f"cannot parse orders {text!r}") from None
    if not orders or min(orders) < 1:
        raise UsageError("orders must be positive integers")
    return orders


def parse_vector(text: str) -> list:
    try:
        return [float(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError:
        raise UsageError(f"cannot parse vector {text!r}") from None


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load(args):
    prob, tol = load_problem(args.file)
    if getattr(args, "tol", None) is not None:
        tol = args.tol
    return prob, tol if tol is not None else DEFAULT_TOL


def cmd_solve(args) -> int:
    prob, tol = _load(args)
    if not args.force:
        report = validate_problem(prob)
        if report.failed:
            for line in report.lines():
                print(line, file=sys.stderr)
            print("certification failed; use --force to solve anyway", file=sys.stderr)
            return EXIT_CERT
    orders = parse_orders(args.orders) if args.orders else [args.order]
    results = solve_hierarchy(prob, orders=orders, tol=tol, diagnostics=args.diagnostics, jobs=args.jobs)
    doc = result_document(prob, results, tol, __version__)
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    for r in results:
        x = "-" if r.minimizer is None else "(" + ", ".join(f"{v:.4f}" for v in r.minimizer) + ")"
        print(f"k={r.k:<3d} {r.status.value:<17s} lower_bound={r.lower_bound:.6f} minimizer={x} "
              f"time={r.wall_time_s:.2f}s", file=sys.stderr)
    return EXIT_OK if all(r.status == Status.OPTIMAL for r in results) else EXIT_SOLVER


def cmd_member(args) -> int:
    prob, _ = _load(args)
    u = parse_vector(args.point)
    if len(u) != prob.m:
        raise UsageError(f"point has {len(u)} coordinates, problem has m = {prob.m}")
    verdict = membership(prob, u, args.order)
    print(verdict.value)
    return {Membership.MEMBER: EXIT_OK, Membership.NON_MEMBER: EXIT_NONMEMBER}.get(verdict, EXIT_INCONCLUSIVE)


def cmd_boundary(args) -> int:
    prob, tol = _load(args)
    if prob.m not in (2, 3):
        raise UsageError(f"boundary tracing needs m in (2, 3), got m = {prob.m}")
    header = ["dir_index", "angle"] + [f"x{i + 1}" for i in range(prob.m)] + ["status"]
    # open first so an unwritable path fails before any solving
    stream = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        pts = boundary_trace(prob, args.order, unit_directions(prob.m, args.directions), tol)
        w = csv.writer(stream)
        w.writerow(header)
        for s in pts:
            coords = [repr(float(v)) for v in s.point] if s.point is not None else [""] * prob.m
            w.writerow([s.index, repr(s.angle), *coords, s.status])
    finally:
        if args.out:
            stream.close()
    failed = sum(s.status != Status.OPTIMAL.value for s in pts)
    return EXIT_OK if not failed else EXIT_SOLVER


def cmd_certify(args) -> int:
    prob, _ = _load(args)
    report = validate_problem(prob)
    for line in report.lines():
        print(line)
    return EXIT_CERT if report.failed else EXIT_OK


def cmd_moments(args) -> int:
    beta = [int(b) for b in parse_vector(args.beta)]
    if not beta or min(beta) < 0:
        raise UsageError("beta must be a nonempty list of nonnegative integers")
    if args.set == "simplices":
        if not args.vertices:
            raise UsageError("--vertices is required for --set simplices")
        Y = IndexSet.from_simplices(json.loads(args.vertices))
    else:
        Y = IndexSet(args.set, len(beta))
    print(repr(moment(Y, beta)))
    return EXIT_OK


def cmd_discretize(args) -> int:
    prob, tol = _load(args)
    try:
        res = discretize_baseline(prob, args.grid, tol)
    except GridTooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GRID
    doc = {
        "grid": args.grid,
        "npoints": res.npoints,
        "status": res.status.value,
        "lower_bound": res.lower_bound if np.isfinite(res.lower_bound) else None,
        "point": None if res.point is None else [float(v) for v in res.point],
    }
    print(json.dumps(doc))
    return EXIT_OK if res.status == Status.OPTIMAL else EXIT_SOLVER


def cmd_export_sdpa(args) -> int:
    prob, _ = _load(args)
    export_sdpa(build_dual(prob, args.order), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fsipp", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def problem_cmd(name, func, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("file", help="problem file (JSON)")
        p.set_defaults(func=func)
        return p

    p = problem_cmd("solve", cmd_solve, "lower bounds and minimizers for a range of orders")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--order", type=int, default=1)
    g.add_argument("--orders", help="e.g. 1..8 or 1,2,4,8")
    p.add_argument("--tol", type=float)
    p.add_argument("--diagnostics", action="store_true", help="also report the gap E (n <= 3)")
    p.add_argument("--force", action="store_true", help="solve even if certification fails")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help="result file (default: stdout)")

    p = problem_cmd("member", cmd_member, "test membership in the outer approximation")
    p.add_argument("--point", required=True, help='e.g. "-0.5,-0.5"')
    p.add_argument("--order", type=int, default=1)

    p = problem_cmd("boundary", cmd_boundary, "support points of the outer approximation as CSV")
    p.add_argument("--order", type=int, default=1)
    p.add_argument("--directions", type=int, default=64)
    p.add_argument("--tol", type=float)
    p.add_argument("--out")

    problem_cmd("certify", cmd_certify, "check s.o.s-convexity of the problem data")

    p = sub.add_parser("moments", help="exact monomial moment of an index set")
    p.add_argument("--set", required=True, choices=["box", "sphere", "ball", "simplices"])
    p.add_argument("--beta", required=True, help="exponent vector, e.g. 2,2")
    p.add_argument("--vertices", help="JSON list of simplices for --set simplices")
    p.set_defaults(func=cmd_moments)

    p = problem_cmd("discretize", cmd_discretize, "grid discretization baseline")
    p.add_argument("--grid", type=int, required=True)
    p.add_argument("--tol", type=float)

    p = problem_cmd("export-sdpa", cmd_export_sdpa, "write the relaxation in SDPA sparse format")
    p.add_argument("--order", type=int, default=1)
    p.add_argument("--out", required=True)
    return ap


def _glue_negative_values(argv: list) -> list:
    # "--point -0.5,-0.5" would otherwise be read as an unknown option
    out, i = [], 0
    while i < len(argv):
        if argv[i] in ("--point", "--beta") and i + 1 < len(argv):
            out.append(f"{argv[i]}={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_glue_negative_values(argv))
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ProblemFileError, UsageError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
