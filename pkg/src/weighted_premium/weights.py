"""Parametric weight functions (lambda, x) -> w(lambda, x).

Seven built-in families plus :class:`CustomWeight`.  Each family carries
the metadata the monotonicity results rely on: how w moves with lambda,
the anchor point where all members agree, whether distinct members can
coincide on a set of positive probability, and whether the exponent can
overflow double precision.

All evaluators are vectorised over numpy arrays and broadcast ``lam``
against ``x``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import SpecParseError

SERIES_SWITCH = 1e-4
W7_LIMIT_SWITCH = 1e-8


class LambdaProfile(str, enum.Enum):
    INCREASING = "IncreasingInLambda"
    DECREASING = "DecreasingInLambda"
    NON_INCREASING = "NonIncreasingInLambda"
    MIXED_AT_X1 = "MixedAtX1"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class Anchor:
    """Point x0 (0, 1 or inf) where w(lambda, x0) = value for every lambda."""

    x0: float
    value: float = 1.0


def _arrays(lam, x):
    lam = np.asarray(lam, dtype=float)
    x = np.asarray(x, dtype=float)
    return np.broadcast_arrays(lam, x)


def _xlog1p_ratio(t):
    """t / log(1 + t), switching to its series below SERIES_SWITCH."""
    t = np.asarray(t, dtype=float)
    small = np.abs(t) < SERIES_SWITCH
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = t / np.log1p(t)
        series = 1.0 + t / 2.0 - t * t / 12.0
    return np.where(small, series, direct)


def _log_xlog1p_ratio(t):
    """log(t / log(1 + t)) without losing precision for small or huge t."""
    t = np.asarray(t, dtype=float)
    small = np.abs(t) < SERIES_SWITCH
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = np.log(t) - np.log(np.log1p(t))
        series = np.log1p(t / 2.0 - t * t / 12.0)
    return np.where(small, series, direct)


def _exprel(t):
    """(e^t - 1) / t with the series below SERIES_SWITCH."""
    t = np.asarray(t, dtype=float)
    small = np.abs(t) < SERIES_SWITCH
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        direct = np.expm1(t) / t
        series = 1.0 + t / 2.0 + t * t / 6.0
    return np.where(small, series, direct)


def _log_exprel(t):
    t = np.asarray(t, dtype=float)
    small = np.abs(t) < SERIES_SWITCH
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        big = t > 30.0
        mid = np.log(np.expm1(np.where(big, 1.0, t)) / np.where(big, 1.0, t))
        # log((e^t - 1)/t) = t + log1p(-e^-t) - log t
        large = t + np.log1p(-np.exp(-np.where(big, t, 30.0))) - np.log(np.where(big, t, 1.0))
    return np.where(small, np.log1p(t / 2.0 + t * t / 6.0), np.where(big, large, mid))


class WeightFamily:
    """Base class; subclasses implement :meth:`eval_log` (and maybe ``eval``)."""

    name: str = "weight"
    label: str = "custom"
    profile: LambdaProfile = LambdaProfile.UNKNOWN
    anchor: Anchor | None = None
    separation: bool | None = None
    overflow_risk: bool = False
    smooth: bool = True
    continuous_in_lambda: bool = True

    def eval(self, lam, x):
        with np.errstate(over="ignore"):
            return np.exp(self.eval_log(lam, x))

    def eval_log(self, lam, x):
        raise NotImplementedError

    def eval_with_flag(self, lam, x):
        """``(value, overflowed)``; ``overflowed`` marks entries returned as +inf."""
        value = self.eval(lam, x)
        return value, np.isposinf(value)

    def limit_at_zero(self, lam):
        raise NotImplementedError

    def lambda_profile(self) -> LambdaProfile:
        return self.profile

    def x_breakpoints(self, lam: float) -> tuple[float, ...]:
        """Points where ``x -> w(lam, x)`` jumps."""
        return ()

    @property
    def strictly_loading_monotone(self) -> bool:
        """Anchor, separation and lambda-monotonicity metadata all hold."""
        return (
            self.anchor is not None
            and self.separation is True
            and self.profile is not LambdaProfile.UNKNOWN
        )

    def __repr__(self):
        return f"<{type(self).__name__} {self.name}>"


class Esscher(WeightFamily):
    name, label = "esscher", "w1"
    profile = LambdaProfile.INCREASING
    anchor = Anchor(0.0)
    separation = True
    overflow_risk = True

    def eval_log(self, lam, x):
        lam, x = _arrays(lam, x)
        return (lam * x)[()]

    def limit_at_zero(self, lam):
        return 1.0


class CTE(WeightFamily):
    """Indicator 1{x > lambda}: the conditional tail expectation."""

    name, label = "cte", "w2"
    profile = LambdaProfile.NON_INCREASING
    anchor = Anchor(math.inf)
    separation = False
    smooth = False
    continuous_in_lambda = False

    def eval(self, lam, x):
        lam, x = _arrays(lam, x)
        return (x > lam).astype(float)[()]

    def eval_log(self, lam, x):
        lam, x = _arrays(lam, x)
        return np.where(x > lam, 0.0, -np.inf)[()]

    def limit_at_zero(self, lam):
        return 0.0

    def x_breakpoints(self, lam):
        return (float(lam),)


class Kamps(WeightFamily):
    name, label = "kamps", "w3"
    profile = LambdaProfile.DECREASING
    anchor = Anchor(math.inf)
    separation = True

    def eval(self, lam, x):
        lam, x = _arrays(lam, x)
        return (-np.expm1(-x / lam))[()]

    def eval_log(self, lam, x):
        lam, x = _arrays(lam, x)
        r = x / lam
        with np.errstate(divide="ignore", over="ignore"):
            # log1p(-e^-r) keeps full relative accuracy once e^-r is small
            tail = np.log1p(-np.exp(-np.maximum(r, math.log(2.0))))
            return np.where(r > math.log(2.0), tail, np.log(-np.expm1(-r)))[()]

    def limit_at_zero(self, lam):
        return 0.0


class W4(WeightFamily):
    """exp(((1 + x)^lam - 1) / lam) - x."""

    name, label = "w4", "w4"
    profile = LambdaProfile.INCREASING
    anchor = Anchor(0.0)
    separation = True
    overflow_risk = True

    @staticmethod
    def _exponent(lam, x):
        # ((1+x)^lam - 1)/lam, accurate for small lam*log1p(x)
        return np.expm1(lam * np.log1p(x)) / lam

    def eval(self, lam, x):
        lam, x = _arrays(lam, x)
        with np.errstate(over="ignore"):
            y = self._exponent(lam, x)
            return (np.exp(y) - x)[()]

    def eval_log(self, lam, x):
        lam, x = _arrays(lam, x)
        with np.errstate(over="ignore"):
            y = self._exponent(lam, x)
            # e^y >= 1 + x > x, so the log1p argument stays in (-1, 0]
            return (y + np.log1p(-x * np.exp(-y)))[()]

    def limit_at_zero(self, lam):
        return 1.0


class W5(WeightFamily):
    """((1 + lam)^x - 1) / (x lam)."""

    name, label = "w5", "w5"
    profile = LambdaProfile.MIXED_AT_X1
    anchor = Anchor(1.0)
    separation = True

    def eval(self, lam, x):
        lam, x = _arrays(lam, x)
        c = np.log1p(lam)
        with np.errstate(over="ignore"):
            return (_exprel(x * c) * (c / lam))[()]

    def eval_log(self, lam, x):
        lam, x = _arrays(lam, x)
        c = np.log1p(lam)
        return (_log_exprel(x * c) + np.log(c / lam))[()]

    def limit_at_zero(self, lam):
        return math.log1p(lam) / lam


class W6(WeightFamily):
    """x lam / log(1 + x lam)."""

    name, label = "w6", "w6"
    profile = LambdaProfile.INCREASING
    anchor = Anchor(0.0)
    separation = True

    def eval(self, lam, x):
        lam, x = _arrays(lam, x)
        return _xlog1p_ratio(x * lam)[()]

    def eval_log(self, lam, x):
        lam, x = _arrays(lam, x)
        return _log_xlog1p_ratio(x * lam)[()]

    def limit_at_zero(self, lam):
        return 1.0


class W7(WeightFamily):
    """log(1 + x + lam) / (x + lam) * x / log(1 + x)."""

    name, label = "w7", "w7"
    profile = LambdaProfile.DECREASING
    anchor = Anchor(math.inf)
    separation = True

    def eval(self, lam, x):
        lam, x = _arrays(lam, x)
        s = x + lam
        out = np.log1p(s) / s * _xlog1p_ratio(x)
        return np.where(x < W7_LIMIT_SWITCH, np.log1p(lam) / lam, out)[()]

    def eval_log(self, lam, x):
        lam, x = _arrays(lam, x)
        s = x + lam
        out = np.log(np.log1p(s) / s) + _log_xlog1p_ratio(x)
        return np.where(x < W7_LIMIT_SWITCH, np.log(np.log1p(lam) / lam), out)[()]

    def limit_at_zero(self, lam):
        return math.log1p(lam) / lam


class CustomWeight(WeightFamily):
    """User-supplied weight; lambda-dependent metadata stays Unknown.

    ``fn(lam, x)`` must be vectorised over numpy arrays.  ``log_fn`` is
    optional and defaults to ``log(fn)``.
    """

    label = "custom"

    def __init__(
        self,
        fn: Callable,
        log_fn: Callable | None = None,
        name: str = "custom",
        breakpoints: Callable[[float], tuple[float, ...]] | None = None,
        smooth: bool = True,
    ):
        self._fn = fn
        self._log_fn = log_fn
        self._breakpoints = breakpoints
        self.name = name
        self.smooth = smooth

    def eval(self, lam, x):
        lam, x = _arrays(lam, x)
        return np.asarray(self._fn(lam, x), dtype=float)[()]

    def eval_log(self, lam, x):
        lam, x = _arrays(lam, x)
        if self._log_fn is not None:
            return np.asarray(self._log_fn(lam, x), dtype=float)[()]
        with np.errstate(divide="ignore"):
            return np.log(np.asarray(self._fn(lam, x), dtype=float))[()]

    def limit_at_zero(self, lam):
        return float(self.eval(lam, 1e-300))

    def x_breakpoints(self, lam):
        return tuple(self._breakpoints(lam)) if self._breakpoints else ()


def constant_weight() -> CustomWeight:
    return CustomWeight(lambda lam, x: np.ones(np.broadcast(lam, x).shape), lambda lam, x: np.zeros(np.broadcast(lam, x).shape), name="constant")


def negative_control() -> CustomWeight:
    """e^(-lam x) (1 + x): log-submodular, so loading monotonicity checks must reject it."""
    return CustomWeight(
        lambda lam, x: np.exp(-lam * x) * (1.0 + x),
        lambda lam, x: -lam * x + np.log1p(x),
        name="negative-control",
    )


def product_weight(first: WeightFamily, lam_first: float, second: WeightFamily, lam_second: float) -> CustomWeight:
    """x -> first(lam_first, x) * second(lam_second, x), ignoring its own lambda."""
    bps = tuple(first.x_breakpoints(lam_first)) + tuple(second.x_breakpoints(lam_second))
    return CustomWeight(
        lambda lam, x: first.eval(lam_first, x) * second.eval(lam_second, x),
        lambda lam, x: first.eval_log(lam_first, x) + second.eval_log(lam_second, x),
        name=f"{first.name}*{second.name}",
        breakpoints=lambda lam: bps,
        smooth=first.smooth and second.smooth,
    )


ESSCHER = Esscher()
CTE_WEIGHT = CTE()
KAMPS = Kamps()
W4_WEIGHT = W4()
W5_WEIGHT = W5()
W6_WEIGHT = W6()
W7_WEIGHT = W7()

BUILTINS: tuple[WeightFamily, ...] = (ESSCHER, CTE_WEIGHT, KAMPS, W4_WEIGHT, W5_WEIGHT, W6_WEIGHT, W7_WEIGHT)

_ALIASES = {f.name: f for f in BUILTINS} | {f.label: f for f in BUILTINS}


def get_family(spec: str) -> WeightFamily:
    """Look up a built-in family by name (esscher, cte, kamps, w4..w7) or label w1..w7."""
    key = spec.strip().lower()
    try:
        return _ALIASES[key]
    except KeyError:
        names = ", ".join(f.name for f in BUILTINS)
        raise SpecParseError(f"unknown weight family {spec!r}; expected one of {names}", 0) from None
