"""Inverting the premium curve: find lambda with H[lambda, X] = pi.

The curve is non-decreasing for log-supermodular families, so the
solver brackets the target geometrically and bisects on the predicate
``H(lambda) >= pi``.  When the curve can be flat (CTE, custom weights,
empirical models) the solution set is widened to its maximal plateau and
the leftmost point is reported.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergentPremium, DomainEmpty, MaxIterExceeded, QuadratureFailure, ZeroNormalizer
from .loss_models import Empirical, LossModel, mean
from .premium import DEFAULT_PREMIUM_OPTS, LambdaDomain, PremiumOptions, premium, probe_lambda_domain
from .weights import CTE, CustomWeight, WeightFamily

TOL_LAMBDA = 1e-10
TOL_PREMIUM = 1e-8
MAX_ITER = 200
LAMBDA_FLOOR = 1e-12
LAMBDA_CEILING = 1e8
DEFAULT_PROBE_GRID = tuple(np.geomspace(1e-4, 1e4, 33))


class Status(str, enum.Enum):
    UNIQUE = "UniqueSolution"
    PLATEAU = "PlateauSolution"
    BELOW = "NoSolutionBelowRange"
    ABOVE = "NoSolutionAboveRange"
    NOT_ATTAINED = "NotAttained"

    @property
    def solved(self) -> bool:
        return self in (Status.UNIQUE, Status.PLATEAU)


@dataclass(frozen=True)
class Bracket:
    status: Status | None
    lo: float
    hi: float
    h_lo: float
    h_hi: float
    evaluations: int


@dataclass(frozen=True)
class CalibrationResult:
    status: Status
    lambda_star: float | None
    plateau: tuple[float, float] | None
    residual: float
    iterations: int
    bracket: tuple[float, float] | None
    jump_at: float | None = None
    trace: tuple[tuple[float, float], ...] = field(default=(), repr=False)

    def to_dict(self) -> dict:
        out = {
            "status": self.status.value,
            "lambda_star": self.lambda_star,
            "plateau": list(self.plateau) if self.plateau else None,
            "residual": self.residual,
            "iterations": self.iterations,
        }
        if self.jump_at is not None:
            out["jump_at"] = self.jump_at
        return out


class _Curve:
    """Memoised H(lambda); +inf outside the domain."""

    def __init__(self, model, family, opts):
        self.model, self.family, self.opts = model, family, opts
        self.cache: dict[float, float] = {}

    def __call__(self, lam: float) -> float:
        if lam not in self.cache:
            try:
                self.cache[lam] = premium(self.model, self.family, lam, self.opts).premium
            except (DivergentPremium, ZeroNormalizer, QuadratureFailure):
                self.cache[lam] = math.inf
        return self.cache[lam]


def _plateau_possible(model: LossModel, family: WeightFamily) -> bool:
    return isinstance(family, (CTE, CustomWeight)) or isinstance(model, Empirical) or not family.continuous_in_lambda


def bracket_target(
    model: LossModel,
    family: WeightFamily,
    pi: float,
    domain: LambdaDomain | None = None,
    tol_premium: float = TOL_PREMIUM,
    opts: PremiumOptions = DEFAULT_PREMIUM_OPTS,
    _curve: _Curve | None = None,
) -> Bracket:
    """Find lo < hi with H(lo) < pi <= H(hi), or say on which side pi lies.

    The search starts inside the probed domain and halves or doubles
    lambda; steps that leave the domain are replaced by moves halfway to
    the domain edge.
    """
    if not (pi > 0 and math.isfinite(pi)):
        raise ValueError("target premium must be positive and finite")
    H = _curve or _Curve(model, family, opts)
    if domain is None:
        domain = probe_lambda_domain(model, family, DEFAULT_PROBE_GRID, opts)
    inner = domain.inner
    if inner is None:
        raise DomainEmpty(f"no finite premium for {family.name} on {model.spec()} over the probe grid")
    n0 = len(H.cache)

    def done(status, lo=math.nan, hi=math.nan):
        h_lo = H(lo) if math.isfinite(lo) else math.nan
        h_hi = H(hi) if math.isfinite(hi) else math.nan
        return Bracket(status, lo, hi, h_lo, h_hi, len(H.cache) - n0)

    try:
        net = mean(model)
    except Exception:
        net = math.nan
    if math.isfinite(net) and pi < net - tol_premium and domain.lower == 0:
        return done(Status.BELOW)

    lam = math.sqrt(inner[0] * inner[1]) if math.isfinite(inner[1]) else inner[0]
    h = H(lam)
    if h >= pi:
        hi = lam
        while True:
            lo = max(hi / 2, domain.lower + (hi - domain.lower) / 2) if domain.lower > 0 else hi / 2
            if H(lo) < pi:
                return done(None, lo, hi)
            hi = lo
            if hi < LAMBDA_FLOOR or (domain.lower > 0 and hi - domain.lower < TOL_LAMBDA):
                if H(hi) - pi <= tol_premium:
                    return done(None, hi, hi)
                return done(Status.BELOW)
    lo = lam
    upper = domain.upper
    while True:
        cand = 2 * lo if 2 * lo < upper else lo + (upper - lo) / 2
        if cand > LAMBDA_CEILING or cand - lo <= TOL_LAMBDA * max(1.0, lo):
            return done(Status.ABOVE)
        hc = H(cand)
        if math.isinf(hc):
            upper = cand
            continue
        if hc >= pi:
            return done(None, lo, cand)
        lo = cand


def _snap(lam: float, model: LossModel, tol: float) -> float:
    if isinstance(model, Empirical):
        xs = model.values
        i = int(np.argmin(np.abs(xs - lam)))
        if abs(xs[i] - lam) <= tol:
            return float(xs[i])
    return lam


def _right_edge(H, start: float, limit: float, level: float, tol_lambda: float, max_iter: int) -> tuple[float, int]:
    """Largest lambda >= start with H(lambda) <= level, to tol_lambda."""
    step = max(tol_lambda, 1e-12 * start)
    lo, hi = start, None
    it = 0
    while hi is None:
        cand = min(start + step, limit)
        it += 1
        if H(cand) > level:
            hi = cand
        elif cand >= limit or it > max_iter:
            return cand, it
        else:
            lo = cand
            step *= 2
    while hi - lo > tol_lambda and it < 2 * max_iter:
        mid = 0.5 * (lo + hi)
        if H(mid) > level:
            hi = mid
        else:
            lo = mid
        it += 1
    return lo, it


def solve(
    model: LossModel,
    family: WeightFamily,
    pi: float,
    tol_lambda: float = TOL_LAMBDA,
    tol_premium: float = TOL_PREMIUM,
    max_iter: int = MAX_ITER,
    domain: LambdaDomain | None = None,
    opts: PremiumOptions = DEFAULT_PREMIUM_OPTS,
) -> CalibrationResult:
    """Solve H[lambda, X] = pi by bisection; see :class:`Status` for outcomes."""
    H = _Curve(model, family, opts)
    br = bracket_target(model, family, pi, domain, tol_premium, opts, H)
    if br.status is not None:
        return CalibrationResult(br.status, None, None, math.nan, 0, None)

    lo, hi = br.lo, br.hi
    start = (lo, hi)
    trace = []
    it = 0
    while hi - lo > tol_lambda:
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        it += 1
        if it > max_iter:
            raise MaxIterExceeded(f"bisection exceeded {max_iter} iterations")
        if H(mid) >= pi:
            hi = mid
        else:
            lo = mid
        trace.append((lo, hi))

    snap_tol = 10 * tol_lambda
    r_lo, r_hi = abs(H(lo) - pi), abs(H(hi) - pi)
    if min(r_lo, r_hi) > tol_premium:
        if H(lo) < pi < H(hi):
            jump = _snap(hi, model, snap_tol)
            return CalibrationResult(Status.NOT_ATTAINED, None, None, min(r_lo, r_hi), it, start, jump, tuple(trace))
        return CalibrationResult(Status.NOT_ATTAINED, None, None, min(r_lo, r_hi), it, start, None, tuple(trace))

    star = lo if r_lo <= tol_premium else hi
    if _plateau_possible(model, family):
        # the bisection keeps H(hi) >= pi, so the left edge sits at the leftmost admissible point
        left = lo if r_lo <= tol_premium else hi
        limit = br.hi if br.hi > left else left
        dom_limit = LAMBDA_CEILING if domain is None else min(domain.upper, LAMBDA_CEILING)
        right, extra = _right_edge(H, left, max(limit, dom_limit), pi + tol_premium, tol_lambda, max_iter)
        it += extra
        left_s, right_s = _snap(left, model, snap_tol), _snap(right, model, snap_tol)
        flat = H(right) == H(left) and right - left > tol_lambda
        if flat:
            star = left_s
            residual = abs(H(star) - pi)
            return CalibrationResult(
                Status.PLATEAU, star, (left_s, right_s), residual, it, start, None, tuple(trace)
            )
    return CalibrationResult(Status.UNIQUE, star, None, abs(H(star) - pi), it, start, None, tuple(trace))


def roundtrip(
    model: LossModel,
    family: WeightFamily,
    lambda_true: float,
    opts: PremiumOptions = DEFAULT_PREMIUM_OPTS,
    **kwargs,
) -> CalibrationResult:
    """Solve for the premium produced by ``lambda_true``; should give it back."""
    pi = premium(model, family, lambda_true, opts).premium
    return solve(model, family, pi, opts=opts, **kwargs)
