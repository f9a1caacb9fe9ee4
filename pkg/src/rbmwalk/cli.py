"""Command-line front end.

Exit codes: 0 success, 1 failed verification or statistics, 2 usage or
domain error.
"""

from __future__ import annotations

import argparse
import dataclasses
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import dist, exact
from .geometry import GeometryError, make_geometry
from .kernel import (KernelError, Transition, WalkKernel, audit_kernel, build_kernel,
                     reflection_angles)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
TOL = 1e-10
DIST_CHOICES = ("x", "y", "z", "xy", "xz", "yz", "xyz", "last-visit", "corner", "reach")


class UsageError(Exception):
    pass


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _angle(v, deg):
    if v is None:
        return None
    return math.radians(v) if deg else float(v)


def _need(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError("missing " + ", ".join("--" + m for m in missing))


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


# -------------------------------------------------------------- geometry

def cmd_geometry(args) -> int:
    _need(args, "alpha", "beta")
    g = make_geometry(args.alpha, args.beta)
    d = g.to_dict()
    if args.format == "json":
        _emit(json.dumps(d, indent=2), args.out)
    elif args.format == "csv":
        _emit("key,value\n" + "".join(f"{k},{v}\n" for k, v in d.items()), args.out)
    else:
        lines = [
            f"nL={g.nL} nR={g.nR}",
            f"phi={math.degrees(g.lattice.phi):.6f}deg psi={math.degrees(g.lattice.psi):.6f}deg",
            f"u={g.dims.u:.6f} v={g.dims.v:.6f} h={g.dims.h:.6f}",
            f"a={g.probs.a:.6f} b={g.probs.b:.6f} c={g.probs.c:.6f} lambda={g.probs.lam:.6f}",
            f"sigma2={g.probs.sigma2:.6f} NL={g.NL} NR={g.NR} k0={g.k0} N(1)={g.N(1)}",
        ]
        _emit("\n".join(lines), args.out)
    return EXIT_OK


# ---------------------------------------------------------------- verify

def corrupt_kernel(kernel: WalkKernel, eps: float = 1e-3) -> WalkKernel:
    """Negative control: shift ``eps`` from one downward interior step to an upward one.

    Row sums are unchanged, so only the row-balance condition breaks.
    """
    g = kernel.geometry
    old = {(t.dk, t.dj): t.p for t in kernel.interior}
    down, up = (1, g.nL), (-1, -g.nL)
    if old.get(down, 0.0) < eps:
        down, up = (1, g.nL + 1), (-1, -g.nL - 1)
    old[down] -= eps
    old[up] = old.get(up, 0.0) + eps
    interior = tuple(Transition(dk, dj, p) for (dk, dj), p in old.items())
    return dataclasses.replace(kernel, interior=interior, _cache={})


def verify_kernel(kernel: WalkKernel, steps: int) -> dict:
    """Every exact check on one kernel; ``{name: {value, threshold, passed}}``."""
    g, M = kernel.geometry, kernel.M
    checks = {}

    def put(name, value, thr=TOL):
        checks[name] = {"value": float(value), "threshold": thr, "passed": bool(value <= thr)}

    for name, v in audit_kernel(kernel).items():
        put(name, v)
    put("uniformity", max(exact.uniformity_deviation(d) for d in exact.propagate(kernel, steps)))
    solved = exact.green_solve(exact.chain1d(g, M)).g
    closed = np.array([exact.green_closed(k, M, g) for k in range(M)])
    put("green", np.max(np.abs(closed - solved)))
    put("intertwining", exact.intertwining_residual(kernel, exact.chain1d(g, M), steps))
    tl, tr = reflection_angles(kernel)
    put("reflection-angles", max(abs(tl - g.angles.alpha), abs(tr - g.angles.beta)))
    return checks


def cmd_verify(args) -> int:
    _need(args, "alpha", "beta")
    g = make_geometry(args.alpha, args.beta)
    kernel = build_kernel(g, args.M)
    if args.negative_control:
        kernel = corrupt_kernel(kernel)
    checks = verify_kernel(kernel, args.steps)
    failed = [k for k, v in checks.items() if not v["passed"]]
    report = {"alpha": g.angles.alpha, "beta": g.angles.beta, "M": args.M, "steps": args.steps,
              "checks": checks, "passed": not failed, "failed": failed}
    _emit(json.dumps(report, indent=2), args.out)
    if failed:
        print("verification failed: " + ", ".join(failed), file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


# -------------------------------------------------------------- simulate

def cmd_simulate(args) -> int:
    from .sampler import (INCOMPLETE_LIMIT, PathConfig, ensemble_csv, run_ensemble,
                          summary_json)
    _need(args, "alpha", "beta")
    if args.n < 1:
        raise UsageError("-n must be >= 1")
    cfg = PathConfig(make_geometry(args.alpha, args.beta), args.M, args.seed)
    res = run_ensemble(cfg, args.n, threads=args.threads, check=False)
    summary = summary_json(res)
    if args.out:
        out = Path(args.out)
        out.write_text(ensemble_csv(res))
        out.with_name(out.name + ".summary.json").write_text(summary + "\n")
    else:
        _emit(summary, None)
    if res.incomplete > INCOMPLETE_LIMIT * args.n:
        print(f"{res.incomplete} of {args.n} paths hit the step cap", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


# ------------------------------------------------------------------ dist

def _spec(args) -> dist.HullLawSpec:
    _need(args, "alpha", "beta")
    lam = args.alpha if args.lam is None else args.lam
    mu = args.beta if args.mu is None else args.mu
    return dist.HullLawSpec(args.alpha, args.beta, lam, mu)


def tabulate(args) -> str:
    n = args.grid
    if n < 2:
        raise UsageError("--grid must be >= 2")
    which = args.which
    buf = io.StringIO()
    if which == "reach":
        _need(args, "alpha", "beta")
        ys = np.linspace(0.0, args.ymax, n)
        vals = dist.reach_probability(ys, args.alpha, args.beta)
        buf.write("arg,value\n")
        for y, v in zip(ys, vals):
            buf.write(f"{_fmt(y)},{_fmt(v)}\n")
        return buf.getvalue()
    spec = _spec(args)
    grid = np.linspace(0.0, 1.0, n)
    one = {"x": dist.cdf_X, "y": dist.cdf_Y, "z": dist.cdf_Z, "corner": dist.corner_process_cdf}
    if which in one or which == "last-visit":
        if which == "last-visit":
            grid = np.arange(1, n + 1) / (n + 1)  # open interval
            vals = dist.last_visit_probability(grid, spec)
        else:
            vals = one[which](grid, spec)
        buf.write("arg,value\n")
        for x, v in zip(grid, np.atleast_1d(vals)):
            buf.write(f"{_fmt(x)},{_fmt(v)}\n")
        return buf.getvalue()
    if which == "xyz":
        buf.write("x,y,z,value\n")
        for x in grid:
            for y in grid:
                vals = dist.joint_cdf_xyz(x, y, grid, spec)
                for z, v in zip(grid, vals):
                    buf.write(f"{_fmt(x)},{_fmt(y)},{_fmt(z)},{_fmt(v)}\n")
        return buf.getvalue()
    fn = {"xy": dist.joint_cdf_xy, "xz": dist.joint_cdf_xz, "yz": dist.joint_cdf_yz}[which]
    a, b = which
    buf.write(f"{a},{b},value\n")
    for s in grid:
        vals = np.atleast_1d(fn(s, grid, spec))
        for t, v in zip(grid, vals):
            buf.write(f"{_fmt(s)},{_fmt(t)},{_fmt(v)}\n")
    return buf.getvalue()


def cmd_dist(args) -> int:
    _emit(tabulate(args), args.out)
    return EXIT_OK


# ------------------------------------------------------------ acceptance

def _suite_ids(suite: str):
    from .acceptance import CRITERIA, SUITES
    ids = []
    for part in suite.split(","):
        part = part.strip()
        if part in SUITES:
            ids.extend(SUITES[part])
        elif part.upper() in CRITERIA:
            ids.append(part.upper())
        else:
            raise UsageError(f"unknown suite or criterion {part!r}")
    return list(dict.fromkeys(ids))


def cmd_acceptance(args) -> int:
    from .acceptance import report_json, run_criteria
    ids = _suite_ids(args.suite)
    echo = None if args.format == "json" else print
    results = run_criteria(ids, threads=args.threads, echo=echo)
    report = report_json(results)
    if args.out:
        Path(args.out).write_text(report + "\n")
    if args.format == "json":
        _emit(report, None)
    failed = [r.id for r in results if not r.passed]
    if failed:
        print("failed: " + ", ".join(failed), file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--alpha", type=float, help="left angle (radians, or degrees with --deg)")
    common.add_argument("--beta", type=float, help="right angle")
    common.add_argument("--lambda", dest="lam", type=float, help="triangle angle at 0 (default alpha)")
    common.add_argument("--mu", type=float, help="triangle angle at 1 (default beta)")
    common.add_argument("--deg", action="store_true", help="angles are in degrees")
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--format", choices=("text", "csv", "json"), default=None)
    common.add_argument("--threads", type=int, default=None, help="cap on worker threads")

    p = argparse.ArgumentParser(prog="rbmwalk", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("geometry", parents=[common], help="solve the lattice for a wedge")

    v = sub.add_parser("verify", parents=[common], help="exact checks of the walk kernel")
    v.add_argument("-M", type=int, default=30, help="absorbing row")
    v.add_argument("--steps", type=int, default=200, help="time steps to propagate")
    v.add_argument("--negative-control", action="store_true",
                   help="corrupt the interior rule first (expected to fail condition-1)")

    s = sub.add_parser("simulate", parents=[common], help="Monte Carlo ensemble")
    s.add_argument("-M", type=int, default=100)
    s.add_argument("-n", type=int, default=10_000, help="number of paths")
    s.add_argument("--seed", type=int, default=0)

    d = sub.add_parser("dist", parents=[common], help="tabulate a distribution function")
    d.add_argument("--which", choices=DIST_CHOICES, required=True)
    d.add_argument("--grid", type=int, default=101, help="points per axis")
    d.add_argument("--ymax", type=float, default=5.0, help="largest altitude for --which reach")

    a = sub.add_parser("acceptance", parents=[common], help="run acceptance criteria")
    a.add_argument("--suite", default="all", help="exact, mc, limits, special, all, or ids like A5,A9")
    return p


COMMANDS = {"geometry": cmd_geometry, "verify": cmd_verify, "simulate": cmd_simulate,
            "dist": cmd_dist, "acceptance": cmd_acceptance}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for name in ("alpha", "beta", "lam", "mu"):
        setattr(args, name, _angle(getattr(args, name), args.deg))
    if args.format is None:
        args.format = {"geometry": "text", "acceptance": "text"}.get(args.command, "json")
    try:
        return COMMANDS[args.command](args)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (GeometryError, dist.DomainError, KernelError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
