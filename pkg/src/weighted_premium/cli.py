"""Command-line front end.

Subcommands::

    premium        one premium as JSON
    curve          premium curve as CSV (lambda,premium,error) or JSON
    calibrate      solve H[lambda, X] = target
    verify         log-supermodularity checks for one family (or all)
    check-weights  every family check plus the inequality suite

Exit codes: 0 success, 1 usage or parse error, 2 numerical failure
(divergence, no solution), 3 verification failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Sequence

import numpy as np

from . import calibration, verifier
from .errors import (
    DivergentExpectation,
    DomainEmpty,
    LossFileError,
    MaxIterExceeded,
    QuadratureFailure,
    SpecParseError,
    ValidationError,
    ZeroNormalizer,
)
from .loss_models import Empirical, Exponential, Gamma, LogNormal, LossModel, Pareto, Uniform
from .premium import premium, premium_curve
from .weights import BUILTINS, get_family

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_VERIFY = 0, 1, 2, 3

_PARAMETRIC = {
    "exp": (Exponential, 1),
    "lognormal": (LogNormal, 2),
    "pareto": (Pareto, 2),
    "gamma": (Gamma, 2),
    "uniform": (Uniform, 2),
}


def parse_dist_spec(spec: str) -> LossModel:
    """``exp:1.0``, ``lognormal:0:0.5``, ``pareto:2:1``, ``gamma:2:1``,
    ``uniform:0:2`` or ``empirical:path``."""
    name, sep, rest = spec.partition(":")
    key = name.strip().lower()
    if key == "empirical":
        if not rest:
            raise SpecParseError("empirical spec needs a file path", len(spec))
        return Empirical.from_file(rest)
    if key not in _PARAMETRIC:
        known = ", ".join([*_PARAMETRIC, "empirical"])
        raise SpecParseError(f"unknown distribution {name!r} (expected one of {known})", 0)
    cls, arity = _PARAMETRIC[key]
    params = []
    pos = len(name) + len(sep)
    fields = rest.split(":") if sep else []
    for i, field in enumerate(fields):
        if i >= arity:
            raise SpecParseError(f"{key} takes {arity} parameter(s)", pos - 1)
        try:
            value = float(field)
        except ValueError:
            raise SpecParseError(f"parameter {field!r} is not a number", pos) from None
        if not math.isfinite(value):
            raise ValidationError(f"parameter {field!r} must be finite")
        params.append(value)
        pos += len(field) + 1
    if len(params) != arity:
        raise SpecParseError(f"{key} takes {arity} parameter(s), got {len(params)}", len(spec))
    return cls(*params)


def _clean(obj):
    """Recursively replace non-finite floats with strings so the JSON stays standard."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), allow_nan=False)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="weighted-premium", description="Weighted insurance premiums H[lambda, X].")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, weight_required=True):
        sp.add_argument("--out", help="write the result here instead of stdout")
        sp.add_argument("--weight", required=weight_required, help="esscher, cte, kamps, w4, w5, w6 or w7")

    sp = sub.add_parser("premium", help="compute one premium")
    common(sp)
    sp.add_argument("--dist", required=True, help="e.g. exp:1.0, gamma:2:1, empirical:losses.csv")
    sp.add_argument("--lambda", dest="lam", type=float, required=True)

    sp = sub.add_parser("curve", help="premium curve over a lambda grid")
    common(sp)
    sp.add_argument("--dist", required=True)
    sp.add_argument("--lambda-min", type=float, required=True)
    sp.add_argument("--lambda-max", type=float, required=True)
    sp.add_argument("--points", type=int, default=50)
    sp.add_argument("--format", choices=("csv", "json"), default="csv")

    sp = sub.add_parser("calibrate", help="find lambda with H[lambda, X] = target")
    common(sp)
    sp.add_argument("--dist", required=True)
    sp.add_argument("--target", type=float, required=True)
    sp.add_argument("--tol", type=float, default=calibration.TOL_PREMIUM, help="premium tolerance")

    sp = sub.add_parser("verify", help="log-supermodularity checks")
    common(sp)
    sp.add_argument("--grid", type=int, default=64, help="points per axis")
    sp.add_argument("--tol", type=float, default=None, help="override the check tolerance")
    sp.add_argument("--dist", help="also audit the assumptions against this model")

    sp = sub.add_parser("check-weights", help="all family checks plus the inequality suite")
    sp.add_argument("--out")
    sp.add_argument("--grid", type=int, default=64)
    return p


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _curve_csv(points) -> str:
    lines = ["lambda,premium,error"]
    for pt in points:
        if pt.ok:
            lines.append(f"{pt.lam:.12g},{pt.result.premium:.12g},{pt.result.abs_error_estimate:.12g}")
        else:
            lines.append(f"{pt.lam:.12g},nan,nan")
    return "\n".join(lines)


def _verify_reports(family, grid: verifier.GridSpec, tol, model) -> list:
    kw = {} if tol is None else {"tol": tol}
    reports = [verifier.lattice_check(family, grid, **kw)]
    if family.smooth:
        reports.append(verifier.mixed_partial_check(family, grid, **kw))
    lams = grid.lambdas
    theta, lam = float(lams[len(lams) // 3]), float(lams[2 * len(lams) // 3])
    reports.append(verifier.ratio_monotone_check(family, theta, lam, grid.xs, **kw))
    if model is not None:
        reports.append(verifier.assumption_audit(family, model, (theta, lam)))
    return reports


def run(args: argparse.Namespace) -> int:
    cmd = args.command
    if cmd == "premium":
        res = premium(parse_dist_spec(args.dist), get_family(args.weight), args.lam)
        _emit(dumps(res.to_dict()), args.out)
        return EXIT_OK

    if cmd == "curve":
        if not (0 < args.lambda_min <= args.lambda_max) or args.points < 1:
            raise ValidationError("need 0 < lambda-min <= lambda-max and points >= 1")
        lams = np.geomspace(args.lambda_min, args.lambda_max, args.points) if args.points > 1 else [args.lambda_min]
        pts = premium_curve(parse_dist_spec(args.dist), get_family(args.weight), lams)
        if args.format == "csv":
            _emit(_curve_csv(pts), args.out)
        else:
            rows = [p.result.to_dict() if p.ok else {"lambda": p.lam, "error": p.error} for p in pts]
            _emit(dumps(rows), args.out)
        return EXIT_OK if all(p.ok for p in pts) else EXIT_NUMERIC

    if cmd == "calibrate":
        res = calibration.solve(parse_dist_spec(args.dist), get_family(args.weight), args.target, tol_premium=args.tol)
        _emit(dumps(res.to_dict()), args.out)
        return EXIT_OK if res.status.solved else EXIT_NUMERIC

    if cmd == "verify":
        grid = verifier.GridSpec.square(args.grid)
        model = parse_dist_spec(args.dist) if args.dist else None
        families = BUILTINS if args.weight.strip().lower() == "all" else (get_family(args.weight),)
        reports = [r for fam in families for r in _verify_reports(fam, grid, args.tol, model)]
        _emit(dumps([r.to_dict() | {"family": fam} for r, fam in _with_family(reports)]), args.out)
        return EXIT_OK if all(r.passed for r in reports) else EXIT_VERIFY

    if cmd == "check-weights":
        grid = verifier.GridSpec.square(args.grid)
        reports = verifier.family_suite(grid) + verifier.inequality_suite()
        _emit(dumps([r.to_dict() | {"family": fam} for r, fam in _with_family(reports)]), args.out)
        return EXIT_OK if all(r.passed for r in reports) else EXIT_VERIFY

    raise AssertionError(cmd)


def _with_family(reports):
    for r in reports:
        yield r, r.details.get("family")


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # --help exits 0, usage errors exit 1
        return int(exc.code or 0)
    try:
        return run(args)
    except (SpecParseError, ValidationError, LossFileError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DivergentExpectation, ZeroNormalizer, QuadratureFailure, DomainEmpty, MaxIterExceeded) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
