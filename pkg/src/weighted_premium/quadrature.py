"""Vectorised adaptive Gauss-Kronrod (G7/K15) quadrature in log scale.

Integrands are supplied through their logarithm so that values such as
``exp(lambda * x) * pdf(x)`` never have to be formed directly.  The
integrator keeps a running shift equal to the largest log-integrand value
seen so far and works with ``exp(log f - shift)``; every stored partial
result is rescaled whenever the shift grows.

Several integrands can be integrated at once on shared nodes: ``logf``
receives an array of abscissae of shape ``(m, 15)`` and must return the
log-integrands stacked along a new leading axis, shape ``(k, m, 15)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

# QUADPACK qk15 abscissae and weights (non-negative half, descending).
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS_INDEX = np.arange(1, 15, 2)
GAUSS_WEIGHTS = np.concatenate([_WG[:-1], _WG[::-1]])

_EPS = np.finfo(float).eps
_TINY = np.finfo(float).tiny

LogIntegrand = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class QuadResult:
    """Outcome of :func:`log_quad`.

    ``log_value``/``log_error`` have one entry per integrand.  The final
    partition is kept in ``a``/``b`` together with per-cell log values and
    log error estimates, shape ``(k, m)``.
    """

    log_value: np.ndarray
    log_error: np.ndarray
    converged: bool
    n_eval: int
    a: np.ndarray
    b: np.ndarray
    log_cell_values: np.ndarray
    log_cell_errors: np.ndarray


def gk15_apply(vals: np.ndarray, half: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Kronrod estimate and QUADPACK-style error estimate for each interval.

    ``vals`` has shape ``(..., m, 15)`` (already on linear scale), ``half``
    is the half-width of each of the ``m`` intervals.
    """
    kron = half * (vals @ KRONROD_WEIGHTS)
    gauss = half * (vals[..., GAUSS_INDEX] @ GAUSS_WEIGHTS)
    resabs = half * (np.abs(vals) @ KRONROD_WEIGHTS)
    with np.errstate(divide="ignore", invalid="ignore"):
        mean = np.where(half > 0, kron / (2.0 * half), 0.0)
        resasc = half * (np.abs(vals - mean[..., None]) @ KRONROD_WEIGHTS)
        err = np.abs(kron - gauss)
        scaled = resasc * np.minimum(1.0, (200.0 * err / resasc) ** 1.5)
    err = np.where((resasc > 0) & (err > 0), scaled, err)
    floor = np.where(resabs > _TINY / (50.0 * _EPS), 50.0 * _EPS * resabs, 0.0)
    return kron, np.maximum(err, floor)


def _select_splits(err: np.ndarray, noise: np.ndarray, tol: np.ndarray) -> np.ndarray:
    """Intervals to bisect: per integrand, the largest errors until the rest fit in tol/2.

    Intervals at the rounding-noise level cannot improve; their error is
    charged to the budget but they are never selected.
    """
    refinable = err > 2.0 * noise
    need = np.zeros(err.shape[1], dtype=bool)
    for j in range(err.shape[0]):
        e = np.where(refinable[j], err[j], 0.0)
        budget = 0.5 * tol[j] - (err[j].sum() - e.sum())
        order = np.argsort(-e, kind="stable")
        # error left over after splitting the first m intervals of `order`
        left = e.sum() - np.cumsum(e[order])
        m = int(np.searchsorted(-left, -max(budget, 0.0))) + 1
        chosen = order[:m]
        need[chosen[e[chosen] > 0]] = True
    return need


def _log(v: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(v)


def log_quad(
    logf: LogIntegrand,
    edges: Sequence[float] | np.ndarray,
    *,
    rel_tol: float = 1e-12,
    log_abs_tol: float | np.ndarray = -np.inf,
    max_intervals: int = 4000,
) -> QuadResult:
    """Integrate ``exp(logf(x))`` over ``[edges[0], edges[-1]]``.

    ``edges`` is the initial partition (breakpoints of the integrand go
    here).  Until the summed error meets ``max(rel_tol * |I|,
    exp(log_abs_tol))`` each pass bisects the intervals with the largest
    errors, enough of them that the rest fit in half the tolerance.  Intervals whose error is
    at the rounding-noise level of ``log f`` are not refined further; the
    noise is folded into the reported error.
    """
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2:
        raise ValueError("need at least two edges")
    keep = np.concatenate([[True], np.diff(edges) > 0])
    edges = edges[keep]
    if edges.size < 2:
        z = np.array([-np.inf])
        empty = np.empty(0)
        return QuadResult(z, z, True, 0, empty, empty, np.empty((1, 0)), np.empty((1, 0)))

    a_new, b_new = edges[:-1], edges[1:]
    a_done = np.empty(0)
    b_done = np.empty(0)
    k_done: np.ndarray | None = None
    e_done: np.ndarray | None = None
    n_done: np.ndarray | None = None
    shift = -np.inf
    n_eval = 0
    converged = False
    log_abs_tol = np.atleast_1d(np.asarray(log_abs_tol, dtype=float))

    while True:
        mid = 0.5 * (a_new + b_new)
        half = 0.5 * (b_new - a_new)
        x = mid[:, None] + half[:, None] * NODES
        lv = np.asarray(logf(x), dtype=float)
        if lv.ndim == 2:
            lv = lv[None]
        if np.isnan(lv).any():
            raise FloatingPointError("log-integrand returned NaN")
        if np.isposinf(lv).any():
            raise OverflowError("integrand is infinite at a quadrature node")
        n_eval += x.size
        new_max = lv.max() if lv.size else -np.inf
        if new_max > shift:
            if k_done is not None and np.isfinite(shift):
                scale = math.exp(shift - new_max)
                k_done = k_done * scale
                e_done = e_done * scale
                n_done = n_done * scale
            shift = new_max
        if np.isfinite(shift):
            vals = np.exp(lv - shift)
        else:
            vals = np.zeros_like(lv)
        kron, err = gk15_apply(vals, half)
        # rounding in log f of size eps*|log f| bounds the attainable accuracy
        with np.errstate(invalid="ignore"):
            spread = np.max(np.where(np.isfinite(lv), np.abs(lv), 0.0), axis=-1)
        noise = 4.0 * _EPS * spread * np.abs(kron)
        err = np.maximum(err, noise)

        if k_done is None:
            k_done = np.empty((kron.shape[0], 0))
            e_done = np.empty((kron.shape[0], 0))
            n_done = np.empty((kron.shape[0], 0))
        a_all = np.concatenate([a_done, a_new])
        b_all = np.concatenate([b_done, b_new])
        k_all = np.concatenate([k_done, kron], axis=1)
        e_all = np.concatenate([e_done, err], axis=1)
        n_all = np.concatenate([n_done, noise], axis=1)

        total = k_all.sum(axis=1)
        err_total = e_all.sum(axis=1)
        with np.errstate(over="ignore"):
            abs_tol = np.exp(log_abs_tol - shift) if np.isfinite(shift) else np.full_like(total, np.inf)
        tol = np.maximum(rel_tol * np.abs(total), abs_tol)
        if np.all(err_total <= tol):
            converged = True
            break
        if a_all.size >= max_intervals:
            break
        need = _select_splits(e_all, n_all, tol)
        mids = 0.5 * (a_all + b_all)
        splittable = (mids > a_all) & (mids < b_all)
        split = need & splittable
        if not split.any():
            # every interval still above tolerance is limited by rounding noise
            converged = not need.any()
            break
        a_done, b_done = a_all[~split], b_all[~split]
        k_done, e_done, n_done = k_all[:, ~split], e_all[:, ~split], n_all[:, ~split]
        a_s, b_s, m_s = a_all[split], b_all[split], mids[split]
        a_new = np.concatenate([a_s, m_s])
        b_new = np.concatenate([m_s, b_s])

    order = np.argsort(a_all, kind="stable")
    a_all, b_all = a_all[order], b_all[order]
    k_all, e_all = k_all[:, order], e_all[:, order]
    return QuadResult(
        log_value=shift + _log(total),
        log_error=shift + _log(err_total),
        converged=converged,
        n_eval=n_eval,
        a=a_all,
        b=b_all,
        log_cell_values=shift + _log(k_all),
        log_cell_errors=shift + _log(e_all),
    )

