"""Command-line interface: densities, samples, verification, limits, sweeps.

Exit codes: 0 success (or verification pass), 1 verification fail,
2 usage or validation error.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from .analysis import (
    IntegrationError,
    default_histogram_range,
    draw_condition_numbers,
    histogram,
    verify,
)
from .densities import cond_density, limit_condition_number
from .sampling import ModelParams

SAMPLER_NAMES = {"chi": "chi_pipeline", "direct": "direct_w"}
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(ValueError):
    pass


def fmt(x: float) -> str:
    """Shortest round-trip decimal, with integral values written bare."""
    r = repr(float(x))
    return r[:-2] if r.endswith(".0") else r


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return v


def _seed(text):
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be in [0, 2^64), got {text}")
    return v


def _beta_list(text):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"--betas expects comma-separated numbers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("--betas must list at least one value")
    return vals


def _add_sigma(p, beta=True):
    p.add_argument("--L", type=int, required=True, help="number of rows of W (>= 2)")
    if beta:
        p.add_argument("--beta", type=float, required=True, help="ghost parameter beta > 0")
    p.add_argument("--x1", type=float, required=True, help="first diagonal entry of Sigma")
    p.add_argument("--x2", type=float, required=True, help="second diagonal entry (opposite sign)")


def _add_grid(p):
    p.add_argument("--min", type=float, default=1.0, help="smallest sigma (default 1)")
    p.add_argument("--max", type=float, default=100.0, help="largest sigma (default 100)")
    p.add_argument("--points", type=int, default=200, help="grid size (default 200)")
    p.add_argument("--linear", action="store_true", help="linear instead of log spacing")


def _add_out(p):
    p.add_argument("--out", metavar="PATH", help="output file (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="indefwishart",
        description="Eigenvalue-ratio and condition-number distributions of "
                    "indefinite rank-2 Wishart matrices.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("density", help="condition-number density on a sigma grid (CSV)")
    _add_sigma(p)
    _add_grid(p)
    _add_out(p)

    p = sub.add_parser("sample", help="Monte Carlo condition numbers (CSV)")
    _add_sigma(p)
    p.add_argument("--n", type=_positive_int, required=True, help="number of draws")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--sampler", choices=sorted(SAMPLER_NAMES), default="chi")
    p.add_argument("--bins", type=_positive_int, help="emit a density histogram instead of raw draws")
    p.add_argument("--min", type=float, help="histogram lower edge (default 1)")
    p.add_argument("--max", type=float, help="histogram upper edge (default: 99.5th percentile)")
    p.add_argument("--workers", type=_positive_int, default=1, help="sampling threads")
    _add_out(p)

    p = sub.add_parser("verify", help="KS test of samples against the exact CDF (JSON)")
    _add_sigma(p)
    p.add_argument("--n", type=_positive_int, default=100_000)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--sampler", choices=sorted(SAMPLER_NAMES), default="chi")
    p.add_argument("--cdf-x1", type=float, help="Sigma entry used by the analytic CDF (default --x1)")
    p.add_argument("--cdf-x2", type=float, help="Sigma entry used by the analytic CDF (default --x2)")
    p.add_argument("--workers", type=_positive_int, default=1, help="sampling threads")
    _add_out(p)

    p = sub.add_parser("limit", help="deterministic beta -> infinity condition number")
    _add_sigma(p, beta=False)
    _add_out(p)

    p = sub.add_parser("sweep", help="densities and sample medians across beta (CSV)")
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--x1", type=float, required=True)
    p.add_argument("--x2", type=float, required=True)
    p.add_argument("--betas", type=_beta_list, required=True, help="e.g. 1,2,4,16")
    _add_grid(p)
    p.add_argument("--n", type=_positive_int, default=10_000, help="draws per median (default 1e4)")
    p.add_argument("--seed", type=_seed, default=0)
    _add_out(p)
    return parser


def _grid(args) -> np.ndarray:
    lo, hi, m = args.min, args.max, args.points
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise UsageError("--min and --max must be finite")
    if lo < 1:
        raise UsageError(f"--min must be >= 1 for condition numbers, got {lo}")
    if not hi > lo:
        raise UsageError("--max must exceed --min")
    if m < 2:
        raise UsageError("--points must be at least 2")
    return np.linspace(lo, hi, m) if args.linear else np.geomspace(lo, hi, m)


def _emit(text: str, out):
    if out:
        with open(out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv(header, rows) -> str:
    lines = [header] + [",".join(fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def run_density(args) -> int:
    params = ModelParams(args.L, args.beta, args.x1, args.x2)
    s = _grid(args)
    _emit(_csv("sigma,density", zip(s, np.atleast_1d(cond_density(s, params)))), args.out)
    return EXIT_OK


def run_sample(args) -> int:
    params = ModelParams(args.L, args.beta, args.x1, args.x2)
    draws = draw_condition_numbers(params, args.n, args.seed, SAMPLER_NAMES[args.sampler], args.workers)
    if args.bins is None:
        _emit("sigma\n" + "".join(fmt(v) + "\n" for v in draws), args.out)
        return EXIT_OK
    lo, hi = default_histogram_range(draws)
    lo = lo if args.min is None else args.min
    hi = hi if args.max is None else args.max
    if not lo < hi:
        raise UsageError("histogram range requires --min < --max")
    grid = histogram(draws, args.bins, lo, hi)
    _emit(_csv("sigma,density", zip(grid.points, grid.values)), args.out)
    print(f"overflow: {grid.overflow} of {grid.n} samples outside [{fmt(lo)}, {fmt(hi)}]",
          file=sys.stderr)
    return EXIT_OK


def run_verify(args) -> int:
    params = ModelParams(args.L, args.beta, args.x1, args.x2)
    cdf_params = None
    if args.cdf_x1 is not None or args.cdf_x2 is not None:
        cdf_params = ModelParams(
            args.L, args.beta,
            args.x1 if args.cdf_x1 is None else args.cdf_x1,
            args.x2 if args.cdf_x2 is None else args.cdf_x2,
        )
    report = verify(params, args.n, args.seed, SAMPLER_NAMES[args.sampler],
                    cdf_params=cdf_params, workers=args.workers)
    _emit(report.to_json(), args.out)
    return EXIT_OK if report.passed else EXIT_FAIL


def run_limit(args) -> int:
    value = limit_condition_number(args.L, args.x1, args.x2)
    _emit(f"{value:#.12g}\n", args.out)
    return EXIT_OK


def run_sweep(args) -> int:
    s = _grid(args)
    rows = []
    for beta in args.betas:
        params = ModelParams(args.L, beta, args.x1, args.x2)
        dens = np.atleast_1d(cond_density(s, params))
        rows.extend((beta, si, di) for si, di in zip(s, dens))
        median = float(np.median(draw_condition_numbers(params, args.n, args.seed)))
        rows.append((beta, median, math.nan))
    _emit(_csv("beta,sigma,density", rows), args.out)
    return EXIT_OK


COMMANDS = {
    "density": run_density,
    "sample": run_sample,
    "verify": run_verify,
    "limit": run_limit,
    "sweep": run_sweep,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ValueError, IntegrationError) as exc:
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
