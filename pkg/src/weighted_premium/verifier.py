"""Numerical checks of log-supermodularity, the weight-family assumptions,
and the auxiliary inequalities behind them.

Every check returns a :class:`CheckReport`.  ``worst_violation`` is the
largest value of a quantity that must be <= 0, or the smallest value of
one that must be >= 0 (the report says which in ``details["sense"]``).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import mpmath
import numpy as np

from .errors import AllZeroWeights, GridDegenerate
from .loss_models import Empirical, LossModel
from .weights import LambdaProfile, WeightFamily

EPS = float(np.finfo(float).eps)


@dataclass(frozen=True)
class GridSpec:
    """Log-spaced (lambda, x) grid."""

    lam_min: float = 1e-2
    lam_max: float = 10.0
    x_min: float = 1e-2
    x_max: float = 10.0
    n_lam: int = 64
    n_x: int = 64

    def __post_init__(self):
        if not (0 < self.lam_min < self.lam_max and 0 < self.x_min < self.x_max):
            raise ValueError("grid bounds must satisfy 0 < min < max")
        if self.n_lam < 2 or self.n_x < 2:
            raise ValueError("grid needs at least two points per axis")

    @classmethod
    def square(cls, n: int, lo: float = 1e-2, hi: float = 10.0) -> "GridSpec":
        return cls(lo, hi, lo, hi, n, n)

    @property
    def lambdas(self) -> np.ndarray:
        return np.geomspace(self.lam_min, self.lam_max, self.n_lam)

    @property
    def xs(self) -> np.ndarray:
        return np.geomspace(self.x_min, self.x_max, self.n_x)

    def to_dict(self) -> dict:
        return {
            "lambda_range": [self.lam_min, self.lam_max],
            "x_range": [self.x_min, self.x_max],
            "resolution": [self.n_lam, self.n_x],
        }


DEFAULT_GRID = GridSpec()


@dataclass
class CheckReport:
    property: str
    passed: bool
    worst_violation: float
    worst_location: tuple
    grid: dict
    tolerance: float
    details: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "property": self.property,
            "pass": bool(self.passed),
            "worst_violation": float(self.worst_violation),
            "worst_location": [float(v) for v in self.worst_location],
            "grid": self.grid,
            "tolerance": self.tolerance,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _loc(*vals) -> tuple:
    return tuple(float(v) for v in vals)


# -- log-supermodularity criteria -------------------------------------------


def _fd_steps(lam, x):
    return np.maximum(1e-4 * lam, 1e-7), np.maximum(1e-4 * x, 1e-7)


def mixed_partial_estimate(family: WeightFamily, lam, x, h=None, k=None):
    """Centred cross-difference estimate of d^2 L / d lambda dx with L = -log w."""
    lam = np.asarray(lam, dtype=float)
    x = np.asarray(x, dtype=float)
    dh, dk = _fd_steps(lam, x)
    h = dh if h is None else np.asarray(h, dtype=float)
    k = dk if k is None else np.asarray(k, dtype=float)
    with np.errstate(invalid="ignore", over="ignore"):
        L = lambda a, b: -np.asarray(family.eval_log(a, b), dtype=float)
        num = L(lam + h, x + k) - L(lam + h, x - k) - L(lam - h, x + k) + L(lam - h, x - k)
        return (num / (4.0 * h * k))[()]


def _half_spacing(v: np.ndarray) -> np.ndarray:
    gaps = np.diff(v)
    left = np.concatenate([[gaps[0]], gaps])
    right = np.concatenate([gaps, [gaps[-1]]])
    return 0.5 * np.minimum(left, right)


def mixed_partial_check(
    family: WeightFamily,
    grid: GridSpec = DEFAULT_GRID,
    steps: tuple[float, float] | None = None,
    tol: float = 1e-6,
) -> CheckReport:
    """Submodularity of L = -log w via the sign of its mixed partial (must be <= tol)."""
    lams, xs = grid.lambdas, grid.xs
    if not family.smooth:
        return CheckReport(
            "mixed_partial", True, -math.inf, (), grid.to_dict(), tol,
            {"skipped": True, "reason": f"{family.name} is not smooth; use lattice_check", "sense": "max <= tol"},
        )
    LL, XX = np.meshgrid(lams, xs, indexing="ij")
    if steps is None:
        h, k = _fd_steps(LL, XX)
    else:
        h, k = np.full_like(LL, steps[0]), np.full_like(XX, steps[1])
    if np.any(h > _half_spacing(lams)[:, None]) or np.any(k > _half_spacing(xs)[None, :]) or np.any(k >= XX):
        raise GridDegenerate("finite-difference steps exceed half the grid spacing")
    est = np.asarray(mixed_partial_estimate(family, LL, XX, h, k))
    finite = np.isfinite(est)
    if not finite.any():
        return CheckReport(
            "mixed_partial", True, -math.inf, (), grid.to_dict(), tol,
            {"skipped": True, "reason": "no finite estimates", "sense": "max <= tol"},
        )
    masked = np.where(finite, est, -np.inf)
    i, j = np.unravel_index(np.argmax(masked), masked.shape)
    worst = float(masked[i, j])
    return CheckReport(
        "mixed_partial",
        worst <= tol,
        worst,
        _loc(lams[i], xs[j]),
        grid.to_dict(),
        tol,
        {"family": family.name, "skipped_points": int((~finite).sum()), "sense": "max <= tol"},
    )


def _lattice_gap(family: WeightFamily, th, la, x1, x2):
    """Scaled log-gap of w(th,x1) w(la,x2) >= w(th,x2) w(la,x1), and the scale."""
    with np.errstate(invalid="ignore", over="ignore"):
        a1 = np.asarray(family.eval_log(th, x1), dtype=float)
        a2 = np.asarray(family.eval_log(la, x2), dtype=float)
        b1 = np.asarray(family.eval_log(th, x2), dtype=float)
        b2 = np.asarray(family.eval_log(la, x1), dtype=float)
        lhs, rhs = a1 + a2, b1 + b2
        both = np.isfinite(lhs) & np.isfinite(rhs)
        scale = np.maximum(1.0, np.abs(a1) + np.abs(a2) + np.abs(b1) + np.abs(b2))
        gap = np.where(both, (lhs - rhs) / np.where(both, scale, 1.0), 0.0)
        # at least one product vanishes: compare the products themselves
        zero_l = np.isneginf(lhs)
        zero_r = np.isneginf(rhs)
        gap = np.where(zero_l & ~zero_r, -np.exp(np.minimum(rhs, 700.0)), gap)
        gap = np.where(~zero_l & zero_r, 1.0, gap)
    return gap


def lattice_check(
    family: WeightFamily,
    grid: GridSpec = DEFAULT_GRID,
    tol: float = 1e-9,
    seed: int = 42,
    n_random: int = 200,
    subgrid: int = 16,
) -> CheckReport:
    """w(th,x1) w(la,x2) >= w(th,x2) w(la,x1) for th < la, x1 < x2.

    Positive products are compared in log scale with the gap divided by
    the magnitude of the log terms, so rounding in large exponents cannot
    register as a violation.
    """
    lams, xs = grid.lambdas, grid.xs
    rng = np.random.default_rng(seed)
    li = np.sort([rng.choice(lams.size, 2, replace=False) for _ in range(n_random)], axis=1).reshape(-1, 2)
    xi = np.sort([rng.choice(xs.size, 2, replace=False) for _ in range(n_random)], axis=1).reshape(-1, 2)
    th, la = lams[li[:, 0]], lams[li[:, 1]]
    x1, x2 = xs[xi[:, 0]], xs[xi[:, 1]]

    sl = lams[np.linspace(0, lams.size - 1, min(subgrid, lams.size)).round().astype(int)]
    sx = xs[np.linspace(0, xs.size - 1, min(subgrid, xs.size)).round().astype(int)]
    A, B = np.meshgrid(np.arange(sl.size - 1), np.arange(sx.size - 1), indexing="ij")
    th = np.concatenate([th, sl[A.ravel()]])
    la = np.concatenate([la, sl[A.ravel() + 1]])
    x1 = np.concatenate([x1, sx[B.ravel()]])
    x2 = np.concatenate([x2, sx[B.ravel() + 1]])

    gap = _lattice_gap(family, th, la, x1, x2)
    idx = int(np.argmin(gap))
    worst = float(gap[idx])
    return CheckReport(
        "lattice",
        worst >= -tol,
        worst,
        _loc(th[idx], la[idx], x1[idx], x2[idx]),
        grid.to_dict() | {"quadruples": int(gap.size), "seed": seed},
        tol,
        {"family": family.name, "sense": "min >= -tol"},
    )


def ratio_monotone_check(
    family: WeightFamily,
    theta: float,
    lam: float,
    x_grid: Sequence[float] | None = None,
    tol: float = 1e-9,
) -> CheckReport:
    """h(x) = w(lam,x)/w(theta,x) must be non-decreasing along the sorted grid.

    h is 0 where both weights vanish.  Violations are relative decreases
    ``(h_i - h_{i+1}) / h_i``.
    """
    if not theta < lam:
        raise ValueError("theta must be smaller than lambda")
    xs = np.sort(np.asarray(DEFAULT_GRID.xs if x_grid is None else x_grid, dtype=float))
    with np.errstate(invalid="ignore", over="ignore"):
        lt = np.asarray(family.eval_log(theta, xs), dtype=float)
        ll = np.asarray(family.eval_log(lam, xs), dtype=float)
    if np.all(np.isneginf(lt)):
        raise AllZeroWeights(f"w({theta}, x) vanishes on the whole grid for {family.name}")
    with np.errstate(invalid="ignore"):
        logh = np.where(np.isneginf(lt), np.where(np.isneginf(ll), -np.inf, np.inf), ll - lt)
    a, b = logh[:-1], logh[1:]
    with np.errstate(invalid="ignore", over="ignore"):
        drop = np.where(
            np.isfinite(a) & np.isfinite(b),
            -np.expm1(np.minimum(b - a, 700.0)),
            np.where(a == b, 0.0, np.where(a < b, -1.0, 1.0)),
        )
    if drop.size == 0:
        worst, idx = -math.inf, 0
    else:
        idx = int(np.argmax(drop))
        worst = float(drop[idx])
    return CheckReport(
        "ratio_monotone",
        worst <= tol,
        worst,
        _loc(theta, lam, xs[idx], xs[min(idx + 1, xs.size - 1)]),
        {"theta": theta, "lambda": lam, "x_range": [float(xs[0]), float(xs[-1])], "resolution": int(xs.size)},
        tol,
        {"family": family.name, "sense": "max <= tol"},
    )


# -- assumption audit -------------------------------------------------------

AUDIT_X_GRID = np.geomspace(1e-3, 20.0, 512)
EQUAL_TOL = 1e-12
ANCHOR_TOL = 1e-9
INFINITY_PROXY = 1e15


def _profile_violation(profile: LambdaProfile, lo: float, hi: float, family: WeightFamily, xs: np.ndarray):
    """Largest signed breach of the lambda-profile for the pair lo < hi."""
    with np.errstate(invalid="ignore", over="ignore"):
        w_lo = np.asarray(family.eval(lo, xs), dtype=float)
        w_hi = np.asarray(family.eval(hi, xs), dtype=float)
        d = w_hi - w_lo
    ok = np.isfinite(d)
    if profile is LambdaProfile.INCREASING:
        bad = np.where(ok, -d, -np.inf)
    elif profile in (LambdaProfile.DECREASING, LambdaProfile.NON_INCREASING):
        bad = np.where(ok, d, -np.inf)
    elif profile is LambdaProfile.MIXED_AT_X1:
        bad = np.where(xs < 1, d, np.where(xs > 1, -d, np.abs(d)))
        bad = np.where(ok, bad, -np.inf)
    else:
        return None
    i = int(np.argmax(bad))
    return float(bad[i]), float(xs[i])


def _equal_mass(family: WeightFamily, model: LossModel, theta: float, lam: float) -> tuple[float, list]:
    """F-mass of {x : w(theta,x) = w(lam,x)} up to EQUAL_TOL in log scale."""

    def equal(x):
        with np.errstate(invalid="ignore", over="ignore"):
            a = np.asarray(family.eval_log(theta, x), dtype=float)
            b = np.asarray(family.eval_log(lam, x), dtype=float)
            same_inf = (a == b) & ~np.isfinite(a)
            return same_inf | (np.isfinite(a) & np.isfinite(b) & (np.abs(a - b) <= EQUAL_TOL))

    if isinstance(model, Empirical):
        hit = equal(model.values)
        return float(math.fsum(model.weights[hit].tolist())), [float(v) for v in model.values[hit]]

    # quantile grid: each run of consecutive equal points is an interval of mass
    n = 4096
    q = (np.arange(n) + 0.5) / n
    xs = np.array([model.ppf(v) for v in q], dtype=float)
    hit = equal(xs)
    mass = 0.0
    where = []
    i = 0
    while i < n:
        if not hit[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and hit[j + 1]:
            j += 1
        if j > i:
            lo_q = 0.0 if i == 0 else q[i]
            hi_q = 1.0 if j == n - 1 else q[j]
            mass += hi_q - lo_q
            where.append((float(xs[i]), float(xs[j])))
        i = j + 1
    return mass, where


def assumption_audit(family: WeightFamily, model: LossModel, pair: tuple[float, float]) -> CheckReport:
    """Check lambda-monotonicity, separation and the common anchor value for one pair."""
    theta, lam = (float(pair[0]), float(pair[1]))
    if theta == lam:
        raise ValueError("the pair must consist of two different lambdas")
    lo, hi = min(theta, lam), max(theta, lam)
    results: dict[str, dict] = {}

    prof = _profile_violation(family.lambda_profile(), lo, hi, family, AUDIT_X_GRID)
    if prof is None:
        results["monotone_in_lambda"] = {"holds": None, "reason": "profile unknown"}
    else:
        results["monotone_in_lambda"] = {"holds": bool(prof[0] <= EQUAL_TOL), "worst": prof[0], "at_x": prof[1]}

    mass, where = _equal_mass(family, model, lo, hi)
    results["separation"] = {
        "holds": bool(mass <= EQUAL_TOL),
        "equal_set_mass": mass,
        "equal_set": where[:10],
        "metadata": family.separation,
    }

    anchor = family.anchor
    if anchor is None:
        results["anchor"] = {"holds": None, "reason": "no anchor metadata"}
    else:
        if anchor.x0 == 0:
            vals = [float(family.limit_at_zero(lo)), float(family.limit_at_zero(hi))]
        else:
            x0 = INFINITY_PROXY if math.isinf(anchor.x0) else anchor.x0
            vals = [float(family.eval(lo, x0)), float(family.eval(hi, x0))]
        dev = max(abs(v - anchor.value) for v in vals)
        results["anchor"] = {"holds": bool(dev <= ANCHOR_TOL and min(vals) > 0), "x0": anchor.x0, "values": vals, "deviation": dev}

    checked = [r["holds"] for r in results.values() if r["holds"] is not None]
    failed = [k for k, r in results.items() if r["holds"] is False]
    return CheckReport(
        "assumption_audit",
        all(checked),
        float(len(failed)),
        _loc(lo, hi),
        {"pair": [lo, hi], "model": model.spec()},
        EQUAL_TOL,
        {"family": family.name, "assumptions": results, "failed": failed, "sense": "failed count == 0"},
    )


# -- inequality suite -------------------------------------------------------

SUITE_GRID = np.geomspace(1e-4, 1e3, 200)
_SERIES_Y = 1e-2
_MP_DPS = 50


def _alt_series(y, coef):
    total = np.zeros_like(y)
    for k in range(12, 1, -1):
        total = total * y + (-1) ** k * coef(k)
    return total * y * y


def xlog1p_minus(y):
    """(1+y) log(1+y) - y, accurate for small y."""
    y = np.asarray(y, dtype=float)
    with np.errstate(invalid="ignore"):
        direct = (1.0 + y) * np.log1p(y) - y
    return np.where(y < _SERIES_Y, _alt_series(y, lambda k: 1.0 / (k * (k - 1))), direct)


def minus_log1p(y):
    """y - log(1+y), accurate for small y."""
    y = np.asarray(y, dtype=float)
    direct = y - np.log1p(y)
    return np.where(y < _SERIES_Y, _alt_series(y, lambda k: 1.0 / k), direct)


def _mp_map(fn, *arrays):
    with mpmath.workdps(_MP_DPS):
        out = [float(fn(*(mpmath.mpf(float(v)) for v in vals))) for vals in zip(*arrays)]
    return np.asarray(out, dtype=float)


def _min_report(name, values, locations, tol, grid, details):
    idx = int(np.argmin(values))
    worst = float(values[idx])
    return CheckReport(name, worst > tol, worst, _loc(*(loc[idx] for loc in locations)), grid, tol, details)


def log_chain_check(y_grid: Sequence[float] = SUITE_GRID) -> CheckReport:
    """(y+1) log(y+1) > y > log(y+1) for every y in the grid, strictly."""
    y = np.asarray(y_grid, dtype=float)
    if np.any(y <= 0):
        raise ValueError("grid values must be positive")
    upper = xlog1p_minus(y)
    lower = minus_log1p(y)
    margin = np.minimum(upper, lower)
    i = int(np.argmin(margin))
    return CheckReport(
        "log_chain",
        bool(np.all(upper > 0) and np.all(lower > 0)),
        float(margin[i]),
        _loc(y[i]),
        {"y_range": [float(y.min()), float(y.max())], "resolution": int(y.size)},
        0.0,
        {"sense": "min > 0", "min_upper_margin": float(upper.min()), "min_lower_margin": float(lower.min())},
    )


def _mp_rel_error_sides(lam, y):
    s = lam * y
    v = mpmath.power(s + 1, 1 / lam)
    lhs = (mpmath.e**y - v) / v
    rhs = y * (1 - s / ((s + 1) * mpmath.log1p(s)))
    return lhs, rhs


def rel_error_bound_sides(lam, y):
    """Log of both sides of the relative-error bound, computed without cancellation.

    lhs = (e^y - (lam y + 1)^(1/lam)) / (lam y + 1)^(1/lam) = expm1(g),
    g = y (s - log1p s)/s with s = lam y; rhs = y ((1+s) log1p s - s)/((1+s) log1p s).
    """
    lam, y = np.broadcast_arrays(np.asarray(lam, dtype=float), np.asarray(y, dtype=float))
    s = lam * y
    g = y * minus_log1p(s) / s
    with np.errstate(over="ignore"):
        log_lhs = np.where(g > 1.0, g + np.log1p(-np.exp(-np.maximum(g, 1.0))), np.log(np.expm1(np.minimum(g, 1.0))))
    log_rhs = np.log(y) + np.log(xlog1p_minus(s)) - np.log1p(s) - np.log(np.log1p(s))
    return log_lhs, log_rhs


def rel_error_bound_check(
    lambda_grid: Sequence[float] = SUITE_GRID,
    y_grid: Sequence[float] = SUITE_GRID,
    fallback_below: float = 1e-10,
) -> CheckReport:
    """(e^y - (lam y+1)^(1/lam)) / (lam y+1)^(1/lam) > y (1 - lam y/((lam y+1) log(lam y+1))) > 0.

    The first inequality is tested as log(lhs) - log(rhs) > 0; margins
    closer to zero than ``fallback_below`` are re-evaluated with mpmath.
    """
    L, Y = np.meshgrid(np.asarray(lambda_grid, float), np.asarray(y_grid, float), indexing="ij")
    L, Y = L.ravel(), Y.ravel()
    log_lhs, log_rhs = rel_error_bound_sides(L, Y)
    gap = log_lhs - log_rhs
    rhs_positive = np.isfinite(log_rhs)
    redo = np.abs(gap) < fallback_below
    if redo.any():

        def mp_gap(lam, y):
            lhs, rhs = _mp_rel_error_sides(lam, y)
            return mpmath.log(lhs) - mpmath.log(rhs)

        gap[redo] = _mp_map(mp_gap, L[redo], Y[redo])
    margin = np.where(rhs_positive, gap, -np.inf)
    with mpmath.workdps(30):
        spot_l, spot_r = (float(v) for v in _mp_rel_error_sides(mpmath.mpf(1), mpmath.mpf(1)))
    return _min_report(
        "relative_error_bound",
        margin,
        (L, Y),
        0.0,
        {"lambda_range": [float(L.min()), float(L.max())], "y_range": [float(Y.min()), float(Y.max())],
         "resolution": [len(lambda_grid), len(y_grid)]},
        {"sense": "min log(lhs/rhs) > 0 and rhs > 0", "mpmath_points": int(redo.sum()),
         "spot_lambda1_y1": {"lhs": spot_l, "rhs": spot_r}},
    )


def w7_gap(y):
    """((1+y) log(1+y))^2 - y^2 log(1+y) - y^2, with y = x + lambda."""
    y = np.asarray(y, dtype=float)
    L = np.log1p(y)
    direct = ((1.0 + y) * L) ** 2 - y * y * L - y * y
    small = y < 5e-2
    if np.any(small):
        direct = np.array(direct, dtype=float, copy=True).reshape(y.shape)
        direct[small] = _mp_map(lambda t: ((1 + t) * mpmath.log1p(t)) ** 2 - t * t * mpmath.log1p(t) - t * t, y[small])
    return direct[()]


def _mp_w4_gap(lam, x):
    u = mpmath.power(x + 1, lam)
    lg = mpmath.log1p(x)
    return lam**2 * u * lg * (mpmath.exp((u - 1) / lam) - x) + (lam * u * lg - u + 1) * (1 - (u - 1) * x)


def _ulogu_minus(t):
    """u log u - u + 1 for u = e^t, as a log, stable for small and large t."""
    t = np.asarray(t, dtype=float)
    small = t < _SERIES_Y
    series = np.zeros_like(t)
    term = np.ones_like(t)
    for k in range(2, 14):
        # t^k (k-1)/k!
        term = term * t / k if k > 2 else t * t / 2.0
        series = series + term * (k - 1)
    with np.errstate(over="ignore", invalid="ignore"):
        mid = np.log(np.exp(np.minimum(t, 700.0)) * np.minimum(t, 700.0) - np.expm1(np.minimum(t, 700.0)))
        big = t + np.log(t - 1.0 + np.exp(-np.maximum(t, 1.0)))
        with np.errstate(divide="ignore"):
            small_log = np.log(series)
    return np.where(small, small_log, np.where(t > 30.0, big, mid))


def w4_margin(lam, x):
    """Relative margin (A + B)/(A + |B|) of the two terms in the w4 positivity expression.

    A = lam^2 u log(1+x) (e^y - x), B = (u log u - u + 1)(1 - (u - 1) x),
    u = (1+x)^lam, y = (u - 1)/lam.  A > 0 always, so the sign of the
    margin is the sign of A + B; it is evaluated as tanh of half the
    log-ratio so that none of the (possibly astronomically large) terms
    has to be formed.
    """
    lam, x = np.broadcast_arrays(np.asarray(lam, dtype=float), np.asarray(x, dtype=float))
    t = lam * np.log1p(x)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        y = np.expm1(t) / lam
        log_a = 2 * np.log(lam) + t + np.log(np.log1p(x)) + y + np.log1p(-x * np.exp(-y))
        # log((u - 1) x), then log of (u - 1) x - 1 where it exceeds 1
        log_ex = np.where(t > 30.0, t + np.log1p(-np.exp(-np.maximum(t, 30.0))), np.log(np.expm1(np.minimum(t, 30.0)))) + np.log(x)
        neg_b = log_ex > 0
        log_minus_b = _ulogu_minus(t) + np.where(neg_b, log_ex + np.log1p(-np.exp(-np.where(neg_b, log_ex, 1.0))), 0.0)
        diff = np.where(np.isposinf(log_a), np.inf, log_a - log_minus_b)
        margin = np.where(neg_b, np.tanh(0.5 * diff), 1.0)
    return margin[()]


def positivity_check(
    lambda_grid: Sequence[float] = SUITE_GRID,
    x_grid: Sequence[float] = SUITE_GRID,
    fallback_below: float = 1e-8,
) -> tuple[CheckReport, CheckReport]:
    """Strict positivity of the two printed right-hand sides on a (lambda, x) grid."""
    L, X = np.meshgrid(np.asarray(lambda_grid, float), np.asarray(x_grid, float), indexing="ij")
    L, X = L.ravel(), X.ravel()
    grid = {"lambda_range": [float(L.min()), float(L.max())], "x_range": [float(X.min()), float(X.max())],
            "resolution": [len(lambda_grid), len(x_grid)]}

    m4 = np.asarray(w4_margin(L, X), dtype=float)
    redo = np.abs(m4) < fallback_below
    if redo.any():
        m4[redo] = _mp_map(lambda a, b: mpmath.sign(_mp_w4_gap(a, b)), L[redo], X[redo])
    r4 = _min_report("w4_term_positive", m4, (L, X), 0.0, grid,
                     {"sense": "min relative margin > 0", "mpmath_points": int(redo.sum())})

    y_unique, inverse = np.unique(L + X, return_inverse=True)
    f = np.asarray(w7_gap(y_unique), dtype=float)[inverse]
    r7 = _min_report("w7_term_positive", f, (L, X), 0.0, grid, {"sense": "min value > 0"})
    return r4, r7


def inequality_suite() -> list[CheckReport]:
    r4, r7 = positivity_check()
    return [log_chain_check(), r4, r7, rel_error_bound_check()]


def family_suite(grid: GridSpec = DEFAULT_GRID, families: Sequence[WeightFamily] | None = None) -> list[CheckReport]:
    """Lattice check for every family plus the mixed-partial check for the smooth ones."""
    from .weights import BUILTINS

    out = []
    for fam in families or BUILTINS:
        out.append(lattice_check(fam, grid))
        if fam.smooth:
            out.append(mixed_partial_check(fam, grid))
    return out
