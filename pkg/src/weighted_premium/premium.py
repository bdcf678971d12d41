"""Weighted premiums H[lambda, X] = E[X w(lambda, X)] / E[w(lambda, X)].

Two independent routes are provided.  :func:`premium` forms the ratio of
the two expectations; :func:`premium_tail` integrates the weighted
survival function 1 - F_w(x) over the half line.  For empirical models
both reduce to exact finite sums (shifted in log scale so that the
Esscher and w4 exponents cannot overflow).
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .errors import DivergentExpectation, DivergentPremium, QuadratureFailure, ZeroNormalizer
from .loss_models import (
    DEFAULT_OPTS,
    EPS,
    Empirical,
    Exponential,
    LossModel,
    QuadratureOpts,
    log_expectations,
    mean_with_error,
)
from .quadrature import GAUSS_INDEX, GAUSS_WEIGHTS, KRONROD_WEIGHTS, NODES, gk15_apply
from .weights import CTE, Esscher, Kamps, WeightFamily


class Path(str, enum.Enum):
    RATIO = "RatioOfExpectations"
    TAIL = "TailIntegral"
    EMPIRICAL = "EmpiricalExact"
    CLOSED_FORM = "ClosedForm"


@dataclass(frozen=True)
class PremiumOptions:
    closed_form: bool = False
    quadrature: QuadratureOpts = DEFAULT_OPTS


DEFAULT_PREMIUM_OPTS = PremiumOptions()


@dataclass(frozen=True)
class PremiumResult:
    premium: float
    net_premium: float
    loading: float
    path: Path
    abs_error_estimate: float
    lam: float
    normalizer: float = math.nan

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "premium": self.premium,
            "net_premium": self.net_premium,
            "loading": self.loading,
            "path": self.path.value,
            "abs_error_estimate": self.abs_error_estimate,
        }


@dataclass(frozen=True)
class ProbeRecord:
    lam: float
    finite: bool
    reason: str = ""


@dataclass(frozen=True)
class LambdaDomain:
    """Estimated domain of finite premiums from a probe grid.

    ``lower``/``upper`` bracket the longest run of consecutive finite grid
    points: they are the nearest non-finite probes (or 0 / inf when the
    run reaches the end of the grid), hence both ends are open.
    """

    lower: float
    upper: float
    lower_closed: bool
    upper_closed: bool
    probe_log: tuple[ProbeRecord, ...] = field(default_factory=tuple)

    @property
    def finite_lambdas(self) -> list[float]:
        return [r.lam for r in self.probe_log if r.finite]

    @property
    def inner(self) -> tuple[float, float] | None:
        """Smallest and largest probe of the run, or None when the run is empty."""
        run = [r.lam for r in self.probe_log if r.finite and self.contains(r.lam)]
        return (min(run), max(run)) if run else None

    @property
    def is_empty(self) -> bool:
        return self.inner is None

    def contains(self, lam: float) -> bool:
        above = lam >= self.lower if self.lower_closed else lam > self.lower
        below = lam <= self.upper if self.upper_closed else lam < self.upper
        return above and below

    def to_dict(self) -> dict:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "lower_closed": self.lower_closed,
            "upper_closed": self.upper_closed,
            "probes": [{"lambda": r.lam, "finite": r.finite, "reason": r.reason} for r in self.probe_log],
        }


@dataclass(frozen=True)
class CurvePoint:
    lam: float
    result: PremiumResult | None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.result is not None


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not math.isfinite(lam) or lam <= 0:
        raise ValueError(f"lambda must be positive and finite, got {lam!r}")
    return lam


def _net(model: LossModel) -> tuple[float, float]:
    try:
        m = mean_with_error(model)
    except DivergentExpectation:
        return math.inf, 0.0
    return m.value, m.abs_error


def _result(model, lam, value, err, path, normalizer=math.nan) -> PremiumResult:
    net, _ = _net(model)
    value, err = float(value), float(err)
    return PremiumResult(
        premium=value,
        net_premium=net,
        loading=value - net,
        path=path,
        abs_error_estimate=err,
        lam=lam,
        normalizer=float(normalizer),
    )


# -- empirical sums ---------------------------------------------------------


def _empirical_log_weights(model: Empirical, family: WeightFamily, lam: float) -> np.ndarray:
    with np.errstate(divide="ignore"):
        lw = np.asarray(family.eval_log(lam, model.values), dtype=float) + np.log(model.weights)
    if np.isnan(lw).any():
        raise FloatingPointError(f"{family.name} produced NaN at lambda={lam}")
    if not np.isfinite(lw).any():
        raise ZeroNormalizer(f"E[w({lam}, X)] = 0 for {family.name} on the empirical sample")
    return lw


def _shifted_weights(lw: np.ndarray) -> tuple[np.ndarray, float]:
    shift = float(lw.max())
    return np.exp(lw - shift), shift


def _empirical_rounding(n: int, lw: np.ndarray, value: float) -> float:
    """Forward error bound of the shifted weighted sums."""
    spread = float(np.max(np.abs(lw[np.isfinite(lw)])))
    return 8.0 * EPS * (n + 1.0 + spread) * abs(value)


def _empirical_premium(model: Empirical, family: WeightFamily, lam: float) -> PremiumResult:
    lw = _empirical_log_weights(model, family, lam)
    w, _ = _shifted_weights(lw)
    xs = model.values
    num = math.fsum((xs * w).tolist())
    den = math.fsum(w.tolist())
    value = num / den
    return _result(model, lam, value, _empirical_rounding(model.n, lw, value), Path.EMPIRICAL, den)


def _empirical_tail(model: Empirical, family: WeightFamily, lam: float) -> PremiumResult:
    lw = _empirical_log_weights(model, family, lam)
    w, _ = _shifted_weights(lw)
    xs = model.values
    total = math.fsum(w.tolist())
    # mass strictly above each step of the weighted survival function
    suffix = np.cumsum(w[::-1])[::-1]
    gaps = np.diff(np.concatenate([[0.0], xs]))
    value = math.fsum((gaps * suffix).tolist()) / total
    return _result(model, lam, value, _empirical_rounding(model.n, lw, value) * 2, Path.TAIL, total)


# -- parametric quadrature --------------------------------------------------


def _weight_log_integrands(family: WeightFamily, lam: float):
    def log_phi(x):
        lw = family.eval_log(lam, x)
        with np.errstate(divide="ignore"):
            return np.stack([np.log(x) + lw, lw])

    return log_phi


def _closed_form(model: LossModel, family: WeightFamily, lam: float) -> float | None:
    if not isinstance(model, Exponential):
        return None
    r = model.rate
    if isinstance(family, Esscher):
        if lam >= r:
            raise DivergentPremium(f"Esscher premium of Exp({r}) is infinite for lambda >= {r}")
        return 1.0 / (r - lam)
    if isinstance(family, CTE):
        return lam + 1.0 / r
    if isinstance(family, Kamps):
        c = 1.0 / lam
        return (2.0 * r + c) / (r * (r + c))
    return None


def premium(
    model: LossModel,
    family: WeightFamily,
    lam: float,
    opts: PremiumOptions = DEFAULT_PREMIUM_OPTS,
) -> PremiumResult:
    """H[lambda, X] as the ratio E[X w] / E[w].

    Raises :class:`DivergentPremium` outside the domain and
    :class:`ZeroNormalizer` when no mass carries positive weight.
    """
    lam = _check_lambda(lam)
    if isinstance(model, Empirical):
        return _empirical_premium(model, family, lam)
    if opts.closed_form:
        value = _closed_form(model, family, lam)
        if value is not None:
            return _result(model, lam, value, 4 * EPS * value, Path.CLOSED_FORM)

    try:
        res = log_expectations(
            model,
            _weight_log_integrands(family, lam),
            breakpoints=family.x_breakpoints(lam),
            opts=opts.quadrature,
        )
    except DivergentExpectation as exc:
        raise DivergentPremium(f"{family.name} premium diverges at lambda={lam}: {exc}") from exc
    log_num, log_den = res.log_value
    if not np.isfinite(log_den):
        raise ZeroNormalizer(f"E[w({lam}, X)] = 0 for {family.name} on {model.spec()}")
    value = math.exp(log_num - log_den)
    rel = math.exp(res.log_error[0] - log_num) + math.exp(res.log_error[1] - log_den)
    err = value * (rel + 4 * EPS)
    return _result(model, lam, value, err, Path.RATIO, math.exp(log_den) if log_den < 700 else math.inf)


def _double_tail(logg, a, b, shift):
    """For each cell [a, b]: K15 and G7 estimates of int_a^b int_x^b g(t) dt dx."""
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    x = mid[:, None] + half[:, None] * NODES  # (m, 15) outer nodes
    ih = 0.5 * (b[:, None] - x)  # inner half widths, (m, 15)
    im = 0.5 * (b[:, None] + x)
    t = im[..., None] + ih[..., None] * NODES  # (m, 15, 15)
    g = np.exp(logg(t) - shift)
    inner_k = ih * (g @ KRONROD_WEIGHTS)
    inner_g = ih * (g[..., GAUSS_INDEX] @ GAUSS_WEIGHTS)
    outer_k = half * (inner_k @ KRONROD_WEIGHTS)
    outer_g = half * (inner_g[:, GAUSS_INDEX] @ GAUSS_WEIGHTS)
    err = np.abs(outer_k - outer_g)
    scaled = np.where(outer_k > 0, outer_k * np.minimum(1.0, (200.0 * err / np.where(outer_k > 0, outer_k, 1.0)) ** 1.5), err)
    return outer_k, np.maximum(scaled, 50 * EPS * outer_k)


def premium_tail(
    model: LossModel,
    family: WeightFamily,
    lam: float,
    opts: PremiumOptions = DEFAULT_PREMIUM_OPTS,
) -> PremiumResult:
    """H[lambda, X] as the integral of the weighted survival function.

    The weighted density ``g = w f`` is integrated cell by cell; on each
    cell ``[a, b]`` the survival integral splits into the mass beyond
    ``b`` times the cell width plus a triangular double integral, which is
    computed with nested Kronrod rules and refined until its error
    estimate meets the tolerance.
    """
    lam = _check_lambda(lam)
    if isinstance(model, Empirical):
        return _empirical_tail(model, family, lam)

    def logg(x):
        with np.errstate(invalid="ignore"):
            out = family.eval_log(lam, x) + model.logpdf(x)
        return np.where(np.isnan(out), -np.inf, out)

    def log_w(x):
        return np.asarray(family.eval_log(lam, x), dtype=float)[None]

    try:
        res = log_expectations(
            model, log_w, breakpoints=family.x_breakpoints(lam), opts=opts.quadrature, keep_cells=True
        )
    except DivergentExpectation as exc:
        raise DivergentPremium(f"{family.name} premium diverges at lambda={lam}: {exc}") from exc
    if not np.isfinite(res.log_value[0]):
        raise ZeroNormalizer(f"E[w({lam}, X)] = 0 for {family.name} on {model.spec()}")

    a, b, lv, le = res.cells
    order = np.argsort(a, kind="stable")
    a, b, lv, le = a[order], b[order], lv[0, order], le[0, order]
    shift = float(np.max(lv))
    mass = np.exp(lv - shift)
    mass_err = np.exp(le - shift)

    rel_tol = opts.quadrature.rel_tol
    for _ in range(60):
        beyond = np.concatenate([np.cumsum(mass[::-1])[::-1][1:], [0.0]])
        tri, tri_err = _double_tail(logg, a, b, shift)
        contrib = (b - a) * beyond + tri
        total = contrib.sum()
        if tri_err.sum() <= rel_tol * total:
            break
        frac = (b - a) / (b[-1] - a[0])
        split = tri_err > rel_tol * total * frac
        if not split.any():
            break
        m = 0.5 * (a + b)
        sa, sb, sm = a[split], b[split], m[split]
        half_l = 0.5 * (sm - sa)
        half_r = 0.5 * (sb - sm)
        vl = np.exp(logg((0.5 * (sa + sm))[:, None] + half_l[:, None] * NODES) - shift)
        vr = np.exp(logg((0.5 * (sm + sb))[:, None] + half_r[:, None] * NODES) - shift)
        kl, el = gk15_apply(vl, half_l)
        kr, er = gk15_apply(vr, half_r)
        a = np.concatenate([a[~split], sa, sm])
        b = np.concatenate([b[~split], sm, sb])
        mass = np.concatenate([mass[~split], kl, kr])
        mass_err = np.concatenate([mass_err[~split], el, er])
        order = np.argsort(a, kind="stable")
        a, b, mass, mass_err = a[order], b[order], mass[order], mass_err[order]
    else:
        raise QuadratureFailure(f"tail integral did not converge for {family.name} at lambda={lam}")

    norm = mass.sum()
    # the survival function equals one below the support
    value = max(model.support()[0], 0.0) + total / norm
    # each cell's mass error is carried with lever arm b (it shifts the tail beyond every earlier cell)
    err = (tri_err.sum() + float(np.dot(mass_err, b))) / norm + value * mass_err.sum() / norm
    trunc = math.exp(res.log_truncation[0] - shift) if np.isfinite(res.log_truncation[0]) else 0.0
    err += trunc * res.upper_limit / norm + 4 * EPS * value * math.sqrt(a.size)
    return _result(model, lam, value, err, Path.TAIL)


# -- weighted distribution --------------------------------------------------


class WeightedCdf:
    """F_w(x) = E[1{X <= x} w(lambda, X)] / E[w(lambda, X)].

    The normalizer is computed once at construction; raises
    :class:`ZeroNormalizer` when it vanishes.
    """

    def __init__(self, model: LossModel, family: WeightFamily, lam: float, opts: QuadratureOpts = DEFAULT_OPTS):
        self.model = model
        self.family = family
        self.lam = _check_lambda(lam)
        self.opts = opts
        if isinstance(model, Empirical):
            self._lw = _empirical_log_weights(model, family, self.lam)
            self._w, _ = _shifted_weights(self._lw)
            self._total = math.fsum(self._w.tolist())
            self.normalizer = self._total
            self._norm_rel_err = 0.0
        else:
            res = self._log_integral()
            if not np.isfinite(res.log_value[0]):
                raise ZeroNormalizer(f"E[w({lam}, X)] = 0 for {family.name} on {model.spec()}")
            self._log_norm = float(res.log_value[0])
            self._norm_rel_err = math.exp(res.log_error[0] - self._log_norm)
            self.normalizer = math.exp(self._log_norm) if self._log_norm < 700 else math.inf

    def _log_integral(self, upper: float | None = None):
        fam, lam = self.family, self.lam

        def log_phi(x):
            return np.asarray(fam.eval_log(lam, x), dtype=float)[None]

        try:
            return log_expectations(
                self.model, log_phi, breakpoints=fam.x_breakpoints(lam), opts=self.opts, upper=upper
            )
        except DivergentExpectation as exc:
            raise DivergentPremium(f"normalizer of {fam.name} diverges at lambda={lam}") from exc

    def evaluate(self, x: float) -> tuple[float, float]:
        """``(F_w(x), abs_error)``."""
        x = float(x)
        if x < 0:
            return 0.0, 0.0
        if isinstance(self.model, Empirical):
            k = int(np.searchsorted(self.model.values, x, side="right"))
            if k == self.model.n:
                return 1.0, 0.0
            value = math.fsum(self._w[:k].tolist()) / self._total
            return value, _empirical_rounding(self.model.n, self._lw, value)
        lo, hi = self.model.support()
        if x >= hi:
            return 1.0, 0.0
        if x <= lo:
            return 0.0, 0.0
        res = self._log_integral(upper=x)
        if not np.isfinite(res.log_value[0]):
            return 0.0, 0.0
        value = math.exp(res.log_value[0] - self._log_norm)
        rel = math.exp(res.log_error[0] - res.log_value[0]) + self._norm_rel_err
        return min(value, 1.0), value * rel + 4 * EPS

    def __call__(self, x: float) -> float:
        return self.evaluate(x)[0]


def weighted_cdf(model: LossModel, family: WeightFamily, lam: float, x: float) -> float:
    return WeightedCdf(model, family, lam)(x)


def weighted_distribution(model: Empirical, family: WeightFamily, lam: float) -> Empirical:
    """The law of X_w for an empirical X: atoms re-weighted by w(lambda, x)."""
    if not isinstance(model, Empirical):
        raise TypeError("weighted_distribution is only available for empirical models")
    lw = _empirical_log_weights(model, family, lam)
    w, _ = _shifted_weights(lw)
    return Empirical(model.sample, tuple(w.tolist()))


# -- domain and curves ------------------------------------------------------


def probe_lambda_domain(
    model: LossModel,
    family: WeightFamily,
    grid: Sequence[float],
    opts: PremiumOptions = DEFAULT_PREMIUM_OPTS,
) -> LambdaDomain:
    """Classify each grid value as finite or not and bracket the longest finite run."""
    grid = [float(v) for v in grid]
    if not grid:
        raise ValueError("probe grid must not be empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("probe grid must be strictly increasing")
    records = []
    for lam in grid:
        try:
            premium(model, family, lam, opts)
        except DivergentPremium as exc:
            records.append(ProbeRecord(lam, False, f"divergent: {exc}"))
        except ZeroNormalizer:
            records.append(ProbeRecord(lam, False, "zero normalizer"))
        except QuadratureFailure as exc:
            records.append(ProbeRecord(lam, False, f"quadrature failure: {exc}"))
        else:
            records.append(ProbeRecord(lam, True))

    best, start = (0, -1), None
    for i, r in enumerate(records + [ProbeRecord(math.inf, False)]):
        if r.finite and start is None:
            start = i
        elif not r.finite and start is not None:
            if i - start > best[1] - best[0] + 1 or best[1] < 0:
                best = (start, i - 1)
            start = None
    if best[1] < 0:
        return LambdaDomain(grid[0], grid[0], False, False, tuple(records))
    i0, i1 = best
    lower = records[i0 - 1].lam if i0 > 0 else 0.0
    upper = records[i1 + 1].lam if i1 + 1 < len(records) else math.inf
    return LambdaDomain(lower, upper, False, False, tuple(records))


def premium_curve(
    model: LossModel,
    family: WeightFamily,
    lambdas: Sequence[float],
    opts: PremiumOptions = DEFAULT_PREMIUM_OPTS,
) -> list[CurvePoint]:
    """Pointwise premiums; failures are recorded on the point, not raised."""
    lambdas = [float(v) for v in lambdas]
    if any(b < a for a, b in zip(lambdas, lambdas[1:])):
        raise ValueError("lambdas must be sorted ascending")
    out = []
    for lam in lambdas:
        try:
            out.append(CurvePoint(lam, premium(model, family, lam, opts)))
        except (DivergentPremium, ZeroNormalizer, QuadratureFailure) as exc:
            out.append(CurvePoint(lam, None, f"{type(exc).__name__}: {exc}"))
    return out
