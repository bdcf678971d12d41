"""Positive loss distributions and expectations of transforms of them.

Parametric models integrate against their density with the log-scale
Gauss-Kronrod routine in :mod:`weighted_premium.quadrature`.  The range
``[0, T]`` with ``T`` the ``1 - 1e-7`` quantile is integrated first; the
upper limit is then doubled until the last slab adds less than ``1e-10``
of the running total.  Empirical models use exact finite sums.
"""

from __future__ import annotations

import bisect
import functools
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import special

from .errors import DivergentExpectation, LossFileError, QuadratureFailure, ValidationError
from .quadrature import log_quad

EPS = float(np.finfo(float).eps)

TRUNCATION_LEVEL = 1e-7
CONVERGED_GROWTH = 1e-10
DIVERGENT_GROWTH = 1e-6
DIVERGENT_RUN = 5
# A slab shrinking at least this fast relative to the previous one is
# treated as a convergent tail even while the running total still grows.
GEOMETRIC_DECAY = 0.75
MAX_DOUBLINGS = 120

_SPLIT_LEVELS = (1e-6, 1e-3, 0.01, 0.05, 0.25, 0.5, 0.75, 0.9, 0.99, 0.999, 0.9999, 1 - 1e-5, 1 - 1e-6)

LogPhi = Callable[[np.ndarray], np.ndarray]


def _positive(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0:
        raise ValidationError(f"{name} must be a positive finite number, got {value!r}")
    return value


@dataclass(frozen=True)
class QuadratureOpts:
    rel_tol: float = 1e-12
    max_intervals: int = 4000


DEFAULT_OPTS = QuadratureOpts()


@dataclass(frozen=True)
class Expectation:
    """Value of E[phi(X)] with its absolute error estimate."""

    value: float
    abs_error: float
    exact: bool = False
    upper_limit: float = math.inf
    doublings: int = 0


@dataclass(frozen=True)
class LogExpectation:
    """Several expectations computed on shared nodes, in log scale.

    ``cells`` keeps the final partition when it was requested:
    ``(a, b, log_values, log_errors)`` with values of shape ``(k, m)``.
    """

    log_value: np.ndarray
    log_error: np.ndarray
    upper_limit: float
    doublings: int
    log_truncation: np.ndarray
    cells: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray] | None = None


class LossModel:
    """A positive loss variable X described by its distribution.

    Subclasses supply ``logpdf``, ``cdf``, ``ppf`` and ``support``.
    """

    kind: str = "abstract"
    is_continuous: bool = True

    def params(self) -> tuple[float, ...]:
        raise NotImplementedError

    def support(self) -> tuple[float, float]:
        raise NotImplementedError

    def logpdf(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def cdf(self, x):
        raise NotImplementedError

    def ppf(self, q: float) -> float:
        raise NotImplementedError

    @property
    def truncation_anchor(self) -> float:
        """Upper end of the first quadrature range, the 1 - 1e-7 quantile."""
        return self.ppf(1.0 - TRUNCATION_LEVEL)

    def mean(self) -> float:
        return mean(self)

    def expect_transform(self, phi: Callable, opts: QuadratureOpts = DEFAULT_OPTS) -> Expectation:
        return expect_transform(self, phi, opts)

    def spec(self) -> str:
        return ":".join([self.kind, *(repr(float(p)) for p in self.params())])

    def _split_points(self) -> list[float]:
        return [self.ppf(q) for q in _SPLIT_LEVELS]


@dataclass(frozen=True)
class Exponential(LossModel):
    rate: float
    kind = "exp"

    def __post_init__(self):
        object.__setattr__(self, "rate", _positive("rate", self.rate))

    def params(self):
        return (self.rate,)

    def support(self):
        return 0.0, math.inf

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            return np.where(x >= 0, math.log(self.rate) - self.rate * x, -np.inf)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x > 0, -np.expm1(-self.rate * np.maximum(x, 0.0)), 0.0)[()]

    def ppf(self, q):
        return -math.log1p(-q) / self.rate


@dataclass(frozen=True)
class LogNormal(LossModel):
    mu: float
    sigma: float
    kind = "lognormal"

    def __post_init__(self):
        if not math.isfinite(float(self.mu)):
            raise ValidationError(f"mu must be finite, got {self.mu!r}")
        object.__setattr__(self, "mu", float(self.mu))
        object.__setattr__(self, "sigma", _positive("sigma", self.sigma))

    def params(self):
        return (self.mu, self.sigma)

    def support(self):
        return 0.0, math.inf

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            lx = np.log(x)
            z = (lx - self.mu) / self.sigma
            out = -0.5 * z * z - lx - math.log(self.sigma) - 0.5 * math.log(2 * math.pi)
        return np.where(x > 0, out, -np.inf)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            z = (np.log(np.maximum(x, 0.0)) - self.mu) / self.sigma
        return special.ndtr(z)[()]

    def ppf(self, q):
        return math.exp(self.mu + self.sigma * float(special.ndtri(q)))


@dataclass(frozen=True)
class Pareto(LossModel):
    """Pareto type I: P[X > x] = (xm / x)^alpha for x >= xm."""

    alpha: float
    xm: float
    kind = "pareto"

    def __post_init__(self):
        object.__setattr__(self, "alpha", _positive("alpha", self.alpha))
        object.__setattr__(self, "xm", _positive("xm", self.xm))

    def params(self):
        return (self.alpha, self.xm)

    def support(self):
        return self.xm, math.inf

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = math.log(self.alpha) + self.alpha * math.log(self.xm) - (self.alpha + 1) * np.log(x)
        return np.where(x >= self.xm, out, -np.inf)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            return np.where(x >= self.xm, -np.expm1(self.alpha * np.log(self.xm / np.maximum(x, self.xm))), 0.0)[()]

    def ppf(self, q):
        return self.xm * math.exp(-math.log1p(-q) / self.alpha)


@dataclass(frozen=True)
class Gamma(LossModel):
    shape: float
    scale: float
    kind = "gamma"

    def __post_init__(self):
        object.__setattr__(self, "shape", _positive("shape", self.shape))
        object.__setattr__(self, "scale", _positive("scale", self.scale))

    def params(self):
        return (self.shape, self.scale)

    def support(self):
        return 0.0, math.inf

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        k, s = self.shape, self.scale
        with np.errstate(divide="ignore", invalid="ignore"):
            out = special.xlogy(k - 1, x) - x / s - special.gammaln(k) - k * math.log(s)
        return np.where(x > 0, out, -np.inf)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return special.gammainc(self.shape, np.maximum(x, 0.0) / self.scale)[()]

    def ppf(self, q):
        return self.scale * float(special.gammaincinv(self.shape, q))


@dataclass(frozen=True)
class Uniform(LossModel):
    a: float
    b: float
    kind = "uniform"

    def __post_init__(self):
        a, b = float(self.a), float(self.b)
        if not (math.isfinite(a) and math.isfinite(b)) or a < 0:
            raise ValidationError(f"uniform bounds must be finite with a >= 0, got ({a!r}, {b!r})")
        if b <= a:
            raise ValidationError(f"uniform needs b > a, got ({a!r}, {b!r})")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    def params(self):
        return (self.a, self.b)

    def support(self):
        return self.a, self.b

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where((x >= self.a) & (x <= self.b), -math.log(self.b - self.a), -np.inf)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.clip((x - self.a) / (self.b - self.a), 0.0, 1.0)[()]

    def ppf(self, q):
        return self.a + q * (self.b - self.a)

    @property
    def truncation_anchor(self) -> float:
        return self.b


@dataclass(frozen=True)
class Empirical(LossModel):
    """Empirical distribution of a positive sample, stored sorted ascending.

    ``probs`` optionally attaches unequal atom probabilities (used for
    weighted distributions); when omitted every sample point has mass 1/n
    and ties simply stack their masses.
    """

    sample: tuple[float, ...]
    probs: tuple[float, ...] | None = field(default=None)
    kind = "empirical"
    is_continuous = False

    def __post_init__(self):
        xs = [float(v) for v in self.sample]
        if not xs:
            raise ValidationError("empirical sample must contain at least one value")
        for i, v in enumerate(xs):
            if not math.isfinite(v) or v <= 0:
                raise ValidationError(f"empirical sample values must be positive, got {v!r} at index {i}")
        if self.probs is None:
            object.__setattr__(self, "sample", tuple(sorted(xs)))
            return
        ps = [float(p) for p in self.probs]
        if len(ps) != len(xs):
            raise ValidationError("probs must have the same length as sample")
        if any(not math.isfinite(p) or p < 0 for p in ps) or math.fsum(ps) <= 0:
            raise ValidationError("probs must be non-negative with a positive total")
        total = math.fsum(ps)
        pairs = sorted(zip(xs, ps), key=lambda t: t[0])
        object.__setattr__(self, "sample", tuple(x for x, _ in pairs))
        object.__setattr__(self, "probs", tuple(p / total for _, p in pairs))

    @property
    def n(self) -> int:
        return len(self.sample)

    @property
    def values(self) -> np.ndarray:
        return np.asarray(self.sample, dtype=float)

    @property
    def weights(self) -> np.ndarray:
        """Atom probabilities, uniform when ``probs`` is not set."""
        if self.probs is None:
            return np.full(self.n, 1.0 / self.n)
        return np.asarray(self.probs, dtype=float)

    def params(self):
        return ()

    def spec(self) -> str:
        return f"empirical[n={self.n}]"

    def support(self):
        return self.sample[0], self.sample[-1]

    def logpdf(self, x):
        raise TypeError("empirical distributions have no density")

    def cdf(self, x):
        if np.ndim(x) == 0:
            return self._cdf_scalar(float(x))
        return np.array([self._cdf_scalar(float(v)) for v in np.ravel(x)]).reshape(np.shape(x))

    def _cdf_scalar(self, x: float) -> float:
        k = bisect.bisect_right(self.sample, x)
        if self.probs is None:
            return k / self.n
        return min(1.0, math.fsum(self.probs[:k]))

    def ppf(self, q):
        if self.probs is None:
            k = max(0, math.ceil(q * self.n) - 1)
            return self.sample[min(k, self.n - 1)]
        acc = np.cumsum(self.probs)
        return self.sample[min(int(np.searchsorted(acc, q)), self.n - 1)]

    @property
    def truncation_anchor(self) -> float:
        return self.sample[-1]

    @classmethod
    def from_file(cls, path: str | Path) -> "Empirical":
        return cls(tuple(read_losses(path)))


def read_losses(path: str | Path) -> list[float]:
    """Read one positive decimal per line; '#' starts a comment."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise LossFileError(f"cannot read {path}: {exc.strerror or exc}") from exc
    return parse_losses(text.splitlines())


def parse_losses(lines: Iterable[str]) -> list[float]:
    values = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            v = float(line)
        except ValueError:
            raise LossFileError(f"not a number: {line!r}", lineno) from None
        if not math.isfinite(v) or v <= 0:
            raise LossFileError(f"loss must be positive and finite, got {line!r}", lineno)
        values.append(v)
    if not values:
        raise LossFileError("no loss values found")
    return values


def log_expectations(
    model: LossModel,
    log_phi: LogPhi,
    *,
    breakpoints: Sequence[float] = (),
    opts: QuadratureOpts = DEFAULT_OPTS,
    keep_cells: bool = False,
    upper: float | None = None,
) -> LogExpectation:
    """log E[phi_j(X)] for a parametric model, several phi_j at once.

    ``log_phi`` maps an array of abscissae to the stacked log-transforms,
    shape ``(k, *x.shape)``.  With ``upper`` the integral stops there,
    i.e. ``log E[phi_j(X) 1{X <= upper}]``.  Raises :class:`DivergentExpectation` when the
    growth diagnostic trips for any of the k integrals.
    """
    if isinstance(model, Empirical):
        raise TypeError("use exact sums for empirical models")

    def logf(x):
        with np.errstate(over="ignore"):
            lp = log_phi(x)
        lp = lp if lp.ndim == x.ndim + 1 else lp[None]
        with np.errstate(invalid="ignore"):
            out = lp + model.logpdf(x)
        # -inf + +inf can only happen outside the support
        return np.where(np.isnan(out), -np.inf, out)

    lo, hi = model.support()
    if upper is not None:
        hi = min(hi, float(upper))
        if not hi > lo:
            raise ValueError("upper limit must exceed the lower end of the support")
    anchor = model.truncation_anchor
    bps = [float(b) for b in breakpoints if lo < b < hi]
    core_end = min(max([anchor, *bps]), hi)
    edges = sorted({lo, core_end, *(p for p in model._split_points() if lo < p < core_end), *(b for b in bps if b < core_end)})

    try:
        core = log_quad(logf, edges, rel_tol=opts.rel_tol, max_intervals=opts.max_intervals)
    except OverflowError as exc:
        raise DivergentExpectation(f"integrand of {model.spec()} overflows on [{lo}, {core_end}]") from exc
    if not core.converged:
        raise QuadratureFailure(f"no convergence on [{lo}, {core_end}] for {model.spec()}")
    k = core.log_value.size
    log_total = core.log_value.copy()
    log_err = core.log_error.copy()
    cells = [(core.a, core.b, core.log_cell_values, core.log_cell_errors)] if keep_cells else None

    upper = core_end
    doublings = 0
    log_trunc = np.full(k, -np.inf)
    done = np.full(k, upper >= hi)
    run = np.zeros(k, dtype=int)
    prev_inc = np.full(k, np.nan)
    while not done.all():
        if doublings >= MAX_DOUBLINGS or not math.isfinite(2 * upper):
            raise QuadratureFailure(f"tail of {model.spec()} did not settle after {doublings} doublings")
        new_upper = min(2 * upper if upper > 0 else 1.0, hi)
        slab_edges = [upper, *(b for b in bps if upper < b < new_upper), new_upper]
        try:
            slab = log_quad(
                logf,
                slab_edges,
                rel_tol=opts.rel_tol,
                log_abs_tol=np.log(opts.rel_tol) + log_total,
                max_intervals=opts.max_intervals,
            )
        except OverflowError as exc:
            raise DivergentExpectation(
                f"integrand of {model.spec()} overflows on [{upper:.6g}, {new_upper:.6g}]"
            ) from exc
        if not slab.converged:
            raise QuadratureFailure(f"no convergence on [{upper}, {new_upper}] for {model.spec()}")
        doublings += 1
        with np.errstate(invalid="ignore", over="ignore"):
            growth = np.exp(slab.log_value - log_total)
            ratio = np.exp(slab.log_value - prev_inc)
        for j in range(k):
            if done[j]:
                continue
            if np.isfinite(log_total[j]) and growth[j] <= CONVERGED_GROWTH:
                done[j] = True
                log_trunc[j] = slab.log_value[j]
                continue
            decaying = np.isfinite(prev_inc[j]) and ratio[j] <= GEOMETRIC_DECAY
            if growth[j] > DIVERGENT_GROWTH and not decaying:
                run[j] += 1
            else:
                run[j] = 0
            if run[j] >= DIVERGENT_RUN:
                raise DivergentExpectation(
                    f"integral over [0, {new_upper:.6g}] of {model.spec()} still growing after "
                    f"{DIVERGENT_RUN} consecutive doublings"
                )
        prev_inc = slab.log_value.copy()
        log_total = np.logaddexp(log_total, slab.log_value)
        log_err = np.logaddexp(log_err, slab.log_error)
        if cells is not None:
            cells.append((slab.a, slab.b, slab.log_cell_values, slab.log_cell_errors))
        upper = new_upper
        if upper >= hi:
            done[:] = True
        elif upper > 1e300:
            break

    merged = None
    if cells is not None:
        merged = (
            np.concatenate([c[0] for c in cells]),
            np.concatenate([c[1] for c in cells]),
            np.concatenate([c[2] for c in cells], axis=1),
            np.concatenate([c[3] for c in cells], axis=1),
        )
    return LogExpectation(
        log_value=log_total,
        log_error=np.logaddexp(log_err, log_trunc),
        upper_limit=upper,
        doublings=doublings,
        log_truncation=log_trunc,
        cells=merged,
    )


def expect_transform(model: LossModel, phi: Callable, opts: QuadratureOpts = DEFAULT_OPTS) -> Expectation:
    """E[phi(X)] for a non-negative transform ``phi``.

    Exact (ascending-order) sample average for empirical models, adaptive
    quadrature otherwise.  ``phi`` must accept numpy arrays.
    """
    if isinstance(model, Empirical):
        xs = model.values
        vals = np.asarray(phi(xs), dtype=float)
        if model.probs is None:
            # exactly rounded sum, then one division
            value = math.fsum(vals.tolist()) / model.n
        else:
            value = math.fsum((vals * model.weights).tolist())
        return Expectation(value, 2 * model.n * EPS * abs(value), exact=True, upper_limit=model.sample[-1])

    def log_phi(x):
        with np.errstate(divide="ignore", over="ignore"):
            return np.log(np.asarray(phi(x), dtype=float))[None]

    res = log_expectations(model, log_phi, opts=opts)
    with np.errstate(over="ignore"):
        value = float(np.exp(res.log_value[0]))
        err = float(np.exp(res.log_error[0]))
    return Expectation(value, err, upper_limit=res.upper_limit, doublings=res.doublings)


@functools.lru_cache(maxsize=256)
def _mean_cached(model: LossModel) -> Expectation:
    if isinstance(model, Empirical):
        return expect_transform(model, lambda x: x)

    def log_x(x):
        with np.errstate(divide="ignore"):
            return np.log(x)[None]

    res = log_expectations(model, log_x)
    return Expectation(float(np.exp(res.log_value[0])), float(np.exp(res.log_error[0])),
                       upper_limit=res.upper_limit, doublings=res.doublings)


def mean_with_error(model: LossModel) -> Expectation:
    return _mean_cached(model)


def mean(model: LossModel) -> float:
    """Net premium E[X]; raises DivergentExpectation for infinite-mean models."""
    return _mean_cached(model).value


def cdf(model: LossModel, x):
    return model.cdf(x)
