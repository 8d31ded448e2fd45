"""Command line: ``eval``, ``scan``, ``geodesic`` and ``verify``.

Data goes to stdout (JSON lines or CSV), diagnostics to stderr.
Exit codes: 0 success, 1 verification failure, 2 usage or domain error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .errors import DomainError, InternalError, VerificationError
from .geodesic import (
    boundary_report,
    construct_flat,
    construct_zero_free,
    construct_blaschke,
    trace,
)
from .metric import (
    TIE_TOL_ENV,
    Point,
    TangentVector,
    default_tie_tol,
    kappa_normalized,
    kappa_reduced,
    normalize,
)
from .scalar import EllipsoidParam, v0_threshold
from .suite import GRID_B, GRID_M, SEARCH_PAIRS, SuiteConfig, run_suite

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
SCAN_HEADER = ["v", "kappa", "branch", "t", "x"]
TRACE_HEADER = ["theta", "re1", "im1", "re2", "im2", "defect"]


def parse_m(text: str) -> float:
    try:
        m = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"m must be a number, got {text!r}") from None
    if not (0.0 < m < 0.5):
        raise argparse.ArgumentTypeError(f"m must satisfy 0 < m < 1/2, got {text}")
    return m


def parse_complex(text: str) -> complex:
    """``"re,im"`` or a plain real number."""
    parts = text.split(",")
    try:
        if len(parts) == 1:
            return complex(float(parts[0]), 0.0)
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise argparse.ArgumentTypeError(f"expected 're,im' or a real number, got {text!r}")


def parse_floats(text: str) -> tuple:
    try:
        return tuple(float(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def parse_pairs(text: str) -> tuple:
    """``"m:b,m:b,..."``"""
    try:
        pairs = tuple(tuple(float(x) for x in item.split(":")) for item in text.split(","))
    except ValueError:
        pairs = ()
    if not pairs or any(len(p) != 2 for p in pairs):
        raise argparse.ArgumentTypeError(f"expected 'm:b,m:b,...', got {text!r}")
    return pairs


def parse_tol(text: str) -> float:
    try:
        tol = float(text)
    except ValueError:
        tol = -1.0
    if not tol >= 0.0:
        raise argparse.ArgumentTypeError(f"tolerance must be a nonnegative number, got {text!r}")
    return tol


def _dump(rec: dict) -> str:
    # repr-based floats round-trip exactly
    return json.dumps(rec, allow_nan=False)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _query_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--m", type=parse_m, required=True, help="exponent, 0 < m < 1/2")
    point = p.add_mutually_exclusive_group()
    point.add_argument("--b", type=float, help="base point (0, b), shorthand for --z1 0 --z2 b")
    point.add_argument("--z1", type=parse_complex, help="first coordinate of the base point, 're,im'")
    p.add_argument("--z2", type=parse_complex, help="second coordinate (with --z1)")
    p.add_argument(
        "--tie-tol",
        type=parse_tol,
        default=None,
        help=f"relative tolerance for reporting a branch tie (default from ${TIE_TOL_ENV} or 1e-12)",
    )
    p.add_argument("--format", choices=("json", "csv"), default=None)
    return p


def _vector_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--X", type=parse_complex, default=None, help="first tangent component, 're,im'")
    p.add_argument("--Y", type=parse_complex, default=None, help="second tangent component, 're,im'")


def _point(args) -> Point:
    if args.z2 is not None and args.z1 is None:
        raise DomainError("--z2 needs --z1")
    if args.b is not None:
        return Point(0j, complex(args.b))
    if args.z1 is not None:
        return Point(args.z1, args.z2 if args.z2 is not None else 0j)
    raise DomainError("give the base point with --b or --z1/--z2")


def _tie_tol(args) -> float:
    return args.tie_tol if args.tie_tol is not None else default_tie_tol()


def cmd_eval(args, out) -> int:
    param = EllipsoidParam(args.m)
    p = _point(args)
    w = TangentVector(args.X if args.X is not None else 0j, args.Y if args.Y is not None else 0j)
    q = normalize(param, p, w)
    val = kappa_normalized(param, q, _tie_tol(args))
    v0 = None
    if 0.0 < q.b < 1.0:
        try:
            v0 = v0_threshold(param, q.b).v0
        except InternalError as exc:
            print(f"warning: switch point not resolved: {exc}", file=sys.stderr)
    rec = {
        "m": args.m,
        "b": q.b,
        "v": q.v,
        "kappa": val.kappa,
        "branch": val.branch,
        "t": val.t,
        "x": val.x,
        "v0": v0,
    }
    if (args.format or "json") == "csv":
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(list(rec))
        writer.writerow([_fmt(x) for x in rec.values()])
    else:
        out.write(_dump(rec) + "\n")
    return EXIT_OK


def _scan_b(args, param) -> float:
    p = _point(args)
    q = normalize(param, p, TangentVector(0j, 1 + 0j))
    if not q.b > 0.0:
        raise DomainError("a v-scan needs a base point off the axis z2 = 0 (b > 0)")
    return q.b


def cmd_scan(args, out) -> int:
    param = EllipsoidParam(args.m)
    b = _scan_b(args, param)
    if not (0.0 < args.v_lo < args.v_hi) or not math.isfinite(args.v_hi):
        raise DomainError(f"need 0 < v_lo < v_hi, got v_lo={args.v_lo!r}, v_hi={args.v_hi!r}")
    if args.n < 2:
        raise DomainError(f"need at least 2 scan points, got {args.n}")
    if args.log:
        vs = np.geomspace(args.v_lo, args.v_hi, args.n)
    else:
        vs = np.linspace(args.v_lo, args.v_hi, args.n)
    # pin the endpoints so they match single evaluations exactly
    vs[0], vs[-1] = args.v_lo, args.v_hi
    tol = _tie_tol(args)
    rows = []
    for v in vs:
        val = kappa_reduced(param, b, float(v), tol)
        rows.append({"v": float(v), "kappa": val.kappa, "branch": val.branch, "t": val.t, "x": val.x})
    if (args.format or "csv") == "json":
        for r in rows:
            out.write(_dump(r) + "\n")
    else:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(SCAN_HEADER)
        for r in rows:
            writer.writerow([_fmt(r[k]) for k in SCAN_HEADER])
    if args.figure:
        from .plotting import plot_scan

        seams = {"1": 1.0, "v0": v0_threshold(param, b).v0, "vmax": param.vmax}
        plot_scan(rows, args.m, b, seams, args.figure, log=args.log)
        print(f"figure written to {args.figure}", file=sys.stderr)
    return EXIT_OK


def _geodesic_discs(args, param):
    p = _point(args)
    if args.v is not None:
        if args.X is not None or args.Y is not None:
            raise DomainError("give either --v or --X/--Y, not both")
        if not args.v >= 0.0:
            raise DomainError(f"v must be nonnegative, got {args.v!r}")
        b = _scan_b(args, param)
        xmag, ymag, v = param.m * math.sqrt(args.v) / b, 1.0, args.v
    else:
        w = TangentVector(args.X if args.X is not None else 0j, args.Y if args.Y is not None else 0j)
        q = normalize(param, p, w)
        b, xmag, ymag, v = q.b, q.xmag, q.ymag, q.v
        if xmag == 0.0 and ymag == 0.0:
            raise DomainError("the zero vector has no extremal disc")
        if not 0.0 < b < 1.0:
            raise DomainError("extremal discs are built for base points with b in (0, 1)")
        if ymag == 0.0:
            return [construct_flat(param, b, xmag)], 1.0
    if args.both:
        if not (1.0 <= v <= param.vmax):
            raise DomainError(
                f"--both needs 1 <= v <= vmax = {param.vmax!r}: a zero-free disc exists iff v >= 1, "
                f"a Blaschke disc iff v <= vmax; got v = {v!r}"
            )
        return [construct_blaschke(param, b, v), construct_zero_free(param, b, v)], ymag
    form = args.form
    if form == "auto":
        branch = kappa_reduced(param, b, v, tie_tol=_tie_tol(args)).branch if v > 0 else "kappa1"
        form = "zero-free" if branch == "kappa2" else "blaschke"
    if form == "zero-free":
        return [construct_zero_free(param, b, v)], ymag
    return [construct_blaschke(param, b, v)], ymag


def cmd_geodesic(args, out) -> int:
    param = EllipsoidParam(args.m)
    discs, ymag = _geodesic_discs(args, param)
    fmt = args.format or "json"
    if fmt == "csv":
        if not args.trace:
            raise DomainError("--format csv emits a boundary trace and needs --trace N")
        if len(discs) != 1:
            raise DomainError("a csv trace takes one disc; drop --both or use --format json")
    if args.trace is not None and args.trace < 1:
        raise DomainError(f"--trace needs a positive sample count, got {args.trace}")
    for d in discs:
        if fmt == "csv":
            theta, phi1, phi2, defect = trace(d, args.trace)
            writer = csv.writer(out, lineterminator="\n")
            writer.writerow(TRACE_HEADER)
            for row in zip(theta, phi1.real, phi1.imag, phi2.real, phi2.imag, defect):
                writer.writerow([_fmt(float(x)) for x in row])
            continue
        rec = d.to_record()
        rec["kappa"] = d.tau * ymag
        rec["max_defect"] = boundary_report(d, n_radii=2).max_defect
        if args.trace:
            theta, phi1, phi2, defect = trace(d, args.trace)
            rec["trace"] = [
                [float(x) for x in row]
                for row in zip(theta, phi1.real, phi1.imag, phi2.real, phi2.imag, defect)
            ]
        out.write(_dump(rec) + "\n")
    return EXIT_OK


def cmd_verify(args, out) -> int:
    cfg = SuiteConfig(
        ms=args.ms,
        bs=args.bs,
        search_pairs=args.search_pairs,
        budget=args.budget,
        seed=args.seed,
        samples=args.samples,
        perturb=args.perturb,
    )
    for m in cfg.ms:
        EllipsoidParam(m)
    for b in cfg.bs + tuple(b for _, b in cfg.search_pairs):
        if not 0.0 < b < 1.0:
            raise DomainError(f"grid values of b must lie in (0, 1), got {b!r}")
    for m, _ in cfg.search_pairs:
        EllipsoidParam(m)
    if cfg.budget < 1:
        raise DomainError(f"budget must be at least 1, got {cfg.budget}")

    start = time.perf_counter()

    def progress(res):
        if not args.quiet:
            print(res.line(), file=sys.stderr, flush=True)

    report = run_suite(cfg, progress)
    record = report.to_record()
    out.write(json.dumps(record, allow_nan=False, indent=1) + "\n")
    print(f"suite finished in {time.perf_counter() - start:.1f} s", file=sys.stderr)
    if args.figure_dir:
        from .plotting import plot_suite

        for path in plot_suite(record, args.figure_dir):
            print(f"figure written to {path}", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kobayashi-ellipsoid",
        description="Kobayashi metric of the ellipsoid {|z1|^2 + |z2|^(2m) < 1}, 0 < m < 1/2.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    parent = _query_parent()

    p = sub.add_parser("eval", parents=[parent], help="metric value for a point and vector")
    _vector_args(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("scan", parents=[parent], help="kappa(v) along a v-range, CSV")
    p.add_argument("--v-lo", type=float, required=True)
    p.add_argument("--v-hi", type=float, required=True)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--log", action="store_true", help="geometric spacing in v")
    p.add_argument("--figure", metavar="PATH", help="also render kappa(v) to an image file")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("geodesic", parents=[parent], help="extremal disc records")
    _vector_args(p)
    p.add_argument("--v", type=float, default=None, help="use the tangent (m sqrt(v)/b, 1)")
    p.add_argument("--form", choices=("zero-free", "blaschke", "auto"), default="auto")
    p.add_argument("--both", action="store_true", help="emit both disc forms")
    p.add_argument("--trace", type=int, default=None, metavar="N", help="N boundary samples")
    p.set_defaults(func=cmd_geodesic)

    p = sub.add_parser("verify", help="run the property suite")
    p.add_argument("--ms", type=parse_floats, default=GRID_M, help="comma-separated m grid")
    p.add_argument("--bs", type=parse_floats, default=GRID_B, help="comma-separated b grid")
    p.add_argument("--search-pairs", type=parse_pairs, default=SEARCH_PAIRS, help="'m:b,...'")
    p.add_argument("--budget", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=256, help="boundary samples per disc")
    p.add_argument("--perturb", action="store_true", help="inject an error to test the harness")
    p.add_argument("--figure-dir", metavar="DIR", help="render summary figures into DIR")
    p.add_argument("--quiet", action="store_true", help="no per-check lines on stderr")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = out if out is not None else sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, out)
    except DomainError as exc:
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except VerificationError as exc:
        print(f"{parser.prog} {args.command}: verification failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
