"""Command-line front end.

Exit status is 0 on success, 2 for invalid input and 3 when a quadrature or
eigensolver fails to converge.  Errors are reported as one line on stderr.
Floats are written in shortest round-trip form.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import __version__
from .analysis import default_lambda_grid, sandwich_report, weyl_fit
from .bounds import count_upper, lambda1_ball_bounds, riesz_upper, round_half_away
from .domains import Ball, Box, CTauEstimate, c_tau, c_tau_monte_carlo, read_mask, scale
from .errors import AccuracyError, ConvergenceError, LoglapError
from .solver.spectrum import Spectrum, eigensolve
from .specfun import BESSEL_NU_MIN, bessel_bound, bessel_bound_check, bessel_bound_region_max, bessel_j

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3


class _UsageExit(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageExit(message)


def _fmt(x) -> str:
    if x is None:
        return ""
    return repr(float(x))


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, str) else _fmt(v) for v in row])
    return buf.getvalue()


def _emit(args, text: str) -> None:
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _table_json(header, rows) -> str:
    recs = [dict(zip(header, (v if isinstance(v, str) else (None if v is None else float(v)) for v in row))) for row in rows]
    return json.dumps(recs, indent=1) + "\n"


def _write_table(args, header, rows) -> None:
    if args.format == "json":
        _emit(args, _table_json(header, rows))
    else:
        _emit(args, _csv(header, rows))


def _positive(kind):
    def conv(text):
        val = kind(text)
        if not val > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return val

    return conv


def _tau(text):
    val = float(text)
    if not 0.0 < val < 1.0:
        raise argparse.ArgumentTypeError(f"tau must lie in (0, 1), got {text}")
    return val


def _workers(args):
    return None if args.threads in (None, 0) else args.threads


# -- domain flags -------------------------------------------------------------


def _add_domain_flags(p, required=True):
    p.add_argument("--domain", choices=("ball", "box", "mask"), required=required)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--radius", type=_positive(float), default=1.0)
    p.add_argument("--lengths", type=_positive(float), nargs="+")
    p.add_argument("--mask", help="mask file: 'h <value>' then rows of 0/1, bottom row first")


def _domain_from_args(args):
    if args.domain == "ball":
        return Ball(args.dim, args.radius)
    if args.domain == "box":
        lengths = args.lengths or [1.0] * args.dim
        if len(lengths) == 1 and args.dim > 1:
            lengths = lengths * args.dim
        return Box(args.dim, tuple(lengths))
    if not args.mask:
        raise _UsageExit("--domain mask needs --mask PATH")
    return read_mask(args.mask)


# -- subcommands --------------------------------------------------------------


def cmd_bounds_table(args):
    header = ["d", "b1", "b2", "b3", "b4", "best"]
    rows = []
    for d in range(args.dmin, args.dmax + 1):
        b = lambda1_ball_bounds(d)
        vals = [*b.entries(), b.best]
        if args.digits is not None:
            vals = [None if v is None else round_half_away(v, args.digits) for v in vals]
        rows.append([str(d), *vals])
    _write_table(args, header, rows)


def cmd_trace(args):
    lam = np.linspace(args.lambda_min, args.lambda_max, args.points)
    rows = [
        [float(x), riesz_upper(args.dim, args.volume, float(x)), count_upper(args.dim, args.volume, float(x))]
        for x in lam
    ]
    _write_table(args, ["lambda", "riesz_upper", "count_upper"], rows)


def cmd_solve(args):
    domain = _domain_from_args(args)
    spec = eigensolve(
        domain,
        args.resolution,
        args.eigs,
        tol=args.tol,
        quad_tol=args.quad_tol,
        method=args.method,
        workers=_workers(args),
        seed=args.seed,
    )
    _emit(args, spec.to_json() + "\n")


def cmd_weyl(args):
    spec = Spectrum.load(args.spectrum)
    fit = weyl_fit(spec, (args.window[0], args.window[1]), args.samples)
    _emit(args, fit.to_json() + "\n" if args.format == "json" else fit.to_csv())


def cmd_ctau(args):
    domain = _domain_from_args(args)
    if args.seed is not None:
        value, err = c_tau_monte_carlo(domain, args.tau, samples=args.samples, seed=args.seed)
        sys.stdout.write(f"{value!r} +- {err!r} (monte carlo, {args.samples} samples, seed {args.seed})\n")
        return
    est = c_tau(domain, args.tau, rel_tol=args.rel_tol)
    sys.stdout.write(f"{est.value!r} +- {est.abs_error!r}\n")


def cmd_sandwich(args):
    spec = Spectrum.load(args.spectrum)
    domain = _domain_from_args(args) if args.domain else None
    if domain is not None and domain != spec.domain:
        raise _UsageExit(f"spectrum was computed for {spec.domain.describe()}, not {domain.describe()}")
    if args.c_tau is not None:
        est = CTauEstimate(args.c_tau, 0.0, args.tau, math.inf)
    else:
        est = c_tau(spec.domain, args.tau, rel_tol=args.rel_tol)
    if args.lambda_min is not None or args.lambda_max is not None:
        lo = args.lambda_min if args.lambda_min is not None else float(spec.eigenvalues[0]) - 0.5
        hi = args.lambda_max if args.lambda_max is not None else float(spec.eigenvalues[-1])
        grid = np.linspace(lo, hi, args.points)
    else:
        grid = default_lambda_grid(spec, args.points)
    report = sandwich_report(spec, args.tau, est, grid, domain=domain)
    _emit(args, report.to_json() + "\n" if args.format == "json" else report.to_csv())
    sys.stderr.write(f"{report.violations} upper-bound violations in {len(report.rows)} rows\n")


def cmd_scaling(args):
    spec = Spectrum.load(args.spectrum)
    if spec.resolution <= 0:
        raise _UsageExit("spectrum file lacks the resolution needed to rebuild a matched grid")
    scaled = eigensolve(
        scale(spec.domain, args.R),
        spec.resolution,
        spec.k,
        tol=spec.solver_tol or 1e-9,
        quad_tol=spec.quad_tol,
        workers=_workers(args),
    )
    shift = scaled.eigenvalues - spec.eigenvalues
    err = np.abs(shift + math.log(args.R))
    rows = [[str(j + 1), spec.eigenvalues[j], scaled.eigenvalues[j], shift[j], err[j]] for j in range(spec.k)]
    _write_table(args, ["j", "lambda", "lambda_scaled", "shift", "abs_error"], rows)
    sys.stderr.write(f"max shift error {float(err.max())!r} (expected shift {-math.log(args.R)!r})\n")


def cmd_bessel_check(args):
    rng = np.random.default_rng(args.seed)
    nu = rng.uniform(BESSEL_NU_MIN, args.nu_max, args.samples)
    xmax = np.array([bessel_bound_region_max(v) for v in nu])
    x = rng.uniform(0.0, 1.0, args.samples) * xmax
    violations = 0
    worst = -math.inf
    for v, xx in zip(nu, x):
        j = abs(float(bessel_j(float(v), float(xx))))
        b = float(bessel_bound(float(v), float(xx)))
        worst = max(worst, j / b if b > 0 else 0.0)
        if not bessel_bound_check(float(v), float(xx)):
            violations += 1
    sys.stdout.write(f"{violations} violations in {args.samples} samples (max ratio {worst!r})\n")


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="loglap", description="Spectra and spectral bounds of the logarithmic Laplacian.")
    p.add_argument("--version", action="version", version=f"loglap {__version__}")
    p.add_argument("--threads", type=int, default=-1, help="FFT worker threads (-1: all cores)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def out_flags(q, fmt=True):
        q.add_argument("--out", help="output path (default: stdout)")
        if fmt:
            q.add_argument("--format", choices=("csv", "json"), default="csv")

    q = sub.add_parser("bounds-table", help="lower bounds b1..b4 for lambda_1 of the unit ball")
    q.add_argument("--dmin", type=_positive(int), default=1)
    q.add_argument("--dmax", type=_positive(int), default=10)
    q.add_argument("--digits", type=int, default=None, help="round entries to this many decimals, ties away from zero")
    out_flags(q)
    q.set_defaults(func=cmd_bounds_table)

    q = sub.add_parser("trace", help="upper Riesz-mean and counting bounds as functions of lambda")
    q.add_argument("--dim", type=_positive(int), default=2)
    q.add_argument("--volume", type=_positive(float), default=1.0)
    q.add_argument("--lambda-min", type=float, default=0.0)
    q.add_argument("--lambda-max", type=float, default=5.0)
    q.add_argument("--points", type=_positive(int), default=101)
    out_flags(q)
    q.set_defaults(func=cmd_trace)

    q = sub.add_parser("solve", help="discrete Dirichlet eigenvalues, written as spectrum JSON")
    _add_domain_flags(q)
    q.add_argument("--resolution", type=_positive(int), required=True)
    q.add_argument("--eigs", type=_positive(int), default=10)
    q.add_argument("--tol", type=_positive(float), default=1e-9)
    q.add_argument("--quad-tol", type=_positive(float), default=1e-10)
    q.add_argument("--method", choices=("auto", "lanczos", "dense"), default="auto")
    q.add_argument("--seed", type=int, default=0, help="Lanczos start vector seed")
    out_flags(q, fmt=False)
    q.set_defaults(func=cmd_solve)

    q = sub.add_parser("weyl", help="Weyl-constant estimates from a spectrum")
    q.add_argument("--spectrum", required=True)
    q.add_argument("--window", type=float, nargs=2, required=True, metavar=("LO", "HI"))
    q.add_argument("--samples", type=_positive(int), default=201)
    out_flags(q)
    q.set_defaults(func=cmd_weyl)

    q = sub.add_parser("ctau", help="domain constant C_{Omega,tau}")
    _add_domain_flags(q)
    q.add_argument("--tau", type=_tau, default=0.5)
    q.add_argument("--rel-tol", type=_positive(float), default=1e-4)
    q.add_argument("--seed", type=int, default=None, help="use the Monte Carlo estimator with this seed")
    q.add_argument("--samples", type=_positive(int), default=10**6)
    q.set_defaults(func=cmd_ctau)

    q = sub.add_parser("sandwich", help="Riesz means against the upper and exact lower trace bounds")
    q.add_argument("--spectrum", required=True)
    _add_domain_flags(q, required=False)
    q.add_argument("--tau", type=_tau, default=0.5)
    q.add_argument("--c-tau", type=float, default=None, help="use this C value instead of computing it")
    q.add_argument("--rel-tol", type=_positive(float), default=1e-4)
    q.add_argument("--lambda-min", type=float, default=None)
    q.add_argument("--lambda-max", type=float, default=None)
    q.add_argument("--points", type=_positive(int), default=200)
    out_flags(q)
    q.set_defaults(func=cmd_sandwich)

    q = sub.add_parser("scaling", help="re-solve R * Omega and compare shifts with -log R")
    q.add_argument("--spectrum", required=True)
    q.add_argument("--R", type=_positive(float), required=True)
    out_flags(q)
    q.set_defaults(func=cmd_scaling)

    q = sub.add_parser("bessel-check", help="random sweep of |J_nu(x)| <= x^nu / (2^nu Gamma(nu+1))")
    q.add_argument("--nu-max", type=float, default=10.0)
    q.add_argument("--samples", type=_positive(int), default=10**4)
    q.add_argument("--seed", type=int, default=0)
    q.set_defaults(func=cmd_bessel_check)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command == "bessel-check" and not args.nu_max > BESSEL_NU_MIN:
            raise _UsageExit(f"--nu-max must exceed {BESSEL_NU_MIN!r}")
        code = args.func(args)
        return EXIT_OK if code is None else code
    except _UsageExit as exc:
        sys.stderr.write(f"loglap: error: {exc}\n")
        return EXIT_USAGE
    except (ConvergenceError, AccuracyError) as exc:
        sys.stderr.write(f"loglap: numerical failure: {exc}\n")
        return EXIT_NUMERIC
    except (LoglapError, ValueError, OSError) as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        sys.stderr.write(f"loglap: error: {msg}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
