"""Acceptance criteria 1-10; each test prints and records one PASS/FAIL line."""

import math
import time
from dataclasses import dataclass

import numpy as np
import pytest

import conftest
from weighted_premium import (
    BUILTINS,
    CTE_WEIGHT,
    ESSCHER,
    KAMPS,
    W4_WEIGHT,
    W5_WEIGHT,
    W6_WEIGHT,
    W7_WEIGHT,
    Empirical,
    Exponential,
    Gamma,
    GridSpec,
    Pareto,
    Status,
    Uniform,
    WeightedCdf,
    ZeroNormalizer,
    cdf,
    lattice_check,
    mixed_partial_check,
    negative_control,
    premium,
    premium_tail,
    probe_lambda_domain,
    product_weight,
    roundtrip,
    solve,
    weighted_distribution,
)
from weighted_premium.verifier import inequality_suite

TIME_LIMIT = 10.0
PROBE_GRID = np.geomspace(0.05, 10.0, 25)


def record(n: int, ok: bool, elapsed: float, msg: str) -> None:
    ok = ok and elapsed < TIME_LIMIT
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} ({elapsed:.2f}s) {msg}"
    conftest.ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


@dataclass
class Cell:
    model: object
    family: object
    lams: np.ndarray
    ratio: list
    tail: list


@pytest.fixture(scope="module")
def matrix():
    """7 families x 4 models on a 50-point grid inside the probed domain, both routes."""
    t0 = time.perf_counter()
    models = [Exponential(1.0), Gamma(2.0, 1.0), Uniform(0.0, 2.0), Empirical(conftest.fixed_sample())]
    cells = []
    for m in models:
        for fam in BUILTINS:
            lo, hi = probe_lambda_domain(m, fam, PROBE_GRID).inner
            lams = np.geomspace(lo, hi, 50)
            ratio = [premium(m, fam, lam) for lam in lams]
            tail = [premium_tail(m, fam, lam) for lam in lams]
            cells.append(Cell(m, fam, lams, ratio, tail))
    return cells, time.perf_counter() - t0


def test_criterion_1_closed_forms():
    t0 = time.perf_counter()
    m = Exponential(1.0)
    cases = [(ESSCHER, lam, 1 / (1 - lam)) for lam in (0.1, 0.5, 0.9)]
    cases += [(CTE_WEIGHT, lam, lam + 1) for lam in (0.5, 2.0, 5.0)]
    cases += [(KAMPS, lam, (1 + 2 * lam) / (1 + lam)) for lam in (0.5, 1.0, 2.0)]
    worst = max(abs(premium(m, fam, lam).premium - exact) for fam, lam, exact in cases)
    record(1, worst <= 1e-6, time.perf_counter() - t0, f"9 closed forms, worst error {worst:.2e}")


def test_criterion_2_monotone(matrix):
    cells, build = matrix
    t0 = time.perf_counter()
    drops, flats, checked = [], [], 0
    for c in cells:
        strict = not isinstance(c.model, Empirical)
        for p, q in zip(c.ratio, c.ratio[1:]):
            err = p.abs_error_estimate + q.abs_error_estimate
            checked += 1
            if q.premium < p.premium - 2 * err:
                drops.append((c.model.spec(), c.family.name, q.lam))
            if strict and q.premium - p.premium <= err:
                flats.append((c.model.spec(), c.family.name, q.lam))
    elapsed = build + time.perf_counter() - t0
    record(2, not drops and not flats, elapsed,
           f"{checked} steps over {len(cells)} curves, {len(drops)} decreases, {len(flats)} non-strict steps")


def test_criterion_3_log_supermodularity():
    t0 = time.perf_counter()
    lattice = {f.name: lattice_check(f, tol=1e-9).passed for f in BUILTINS}
    smooth = {f.name: mixed_partial_check(f).passed for f in (ESSCHER, KAMPS, W4_WEIGHT, W5_WEIGHT, W6_WEIGHT, W7_WEIGHT)}
    control = lattice_check(negative_control(), tol=1e-9).passed
    ok = all(lattice.values()) and all(smooth.values()) and not control
    record(3, ok, time.perf_counter() - t0,
           f"lattice {sum(lattice.values())}/7, mixed partial {sum(smooth.values())}/6, negative control fails: {not control}")


def test_criterion_4_loading(matrix):
    cells, build = matrix
    t0 = time.perf_counter()
    bad = []
    for c in cells:
        mean = c.ratio[0].net_premium
        bad += [(c.family.name, r.lam) for r in c.ratio if r.premium < mean - 2 * r.abs_error_estimate]
    n = sum(len(c.ratio) for c in cells)
    record(4, not bad, build + time.perf_counter() - t0, f"{n} premiums, {len(bad)} below the mean")


def test_criterion_5_path_agreement(matrix):
    cells, build = matrix
    t0 = time.perf_counter()
    worst, bad = 0.0, 0
    for c in cells:
        for r, t in zip(c.ratio, c.tail):
            budget = r.abs_error_estimate + t.abs_error_estimate
            diff = abs(r.premium - t.premium)
            worst = max(worst, diff / budget if budget > 0 else (math.inf if diff else 0.0))
            bad += diff > budget
    record(5, bad == 0, build + time.perf_counter() - t0,
           f"{sum(len(c.ratio) for c in cells)} pairs, {bad} outside the combined error, worst |diff|/budget {worst:.2f}")


def test_criterion_6_composition_and_sandwich():
    t0 = time.perf_counter()
    rng = np.random.default_rng(6)
    comp = 0.0
    for _ in range(10):
        model = Empirical(tuple(rng.gamma(2.0, 1.0, 40)))
        lu, lw = rng.uniform(0.1, 2.0, 2)
        direct = WeightedCdf(model, product_weight(KAMPS, lu, ESSCHER, lw), 1.0)
        reweighted = WeightedCdf(weighted_distribution(model, KAMPS, lu), ESSCHER, lw)
        comp = max(comp, max(abs(direct(x) - reweighted(x)) for x in model.values))

    model = Empirical(conftest.fixed_sample())
    xs = np.linspace(0.0, float(model.values.max()) * 1.05, 256)
    F_hw = WeightedCdf(model, product_weight(ESSCHER, 0.5, KAMPS, 1.0), 1.0)
    F_w = WeightedCdf(model, KAMPS, 1.0)
    breaches = sum(not (F_hw(x) <= F_w(x) <= float(cdf(model, x))) for x in xs)
    record(6, comp <= 1e-9 and breaches == 0, time.perf_counter() - t0,
           f"composition worst {comp:.1e}, sandwich breaches {breaches}/256")


def test_criterion_7_empirical_cte_steps():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    mismatches, checked, continuity = 0, 0, 0
    for _ in range(20):
        n = int(rng.integers(2, 51))
        xs = np.sort(np.round(rng.gamma(2.0, 1.0, n), 2) + 0.01)
        model = Empirical(tuple(xs))
        distinct = np.unique(xs)
        for lo, hi in zip(np.concatenate([[0.0], distinct[:-1]]), distinct):
            tail = xs[xs > lo]
            expected = math.fsum(tail.tolist()) / tail.size
            for lam in (lo, 0.5 * (lo + hi), np.nextafter(hi, lo)):
                if lam <= 0:
                    continue
                checked += 1
                mismatches += premium(model, CTE_WEIGHT, lam).premium != expected
            if lo > 0:
                # right-continuous: the value at the jump equals the value just to its right
                continuity += premium(model, CTE_WEIGHT, lo).premium != premium(model, CTE_WEIGHT, np.nextafter(lo, hi)).premium
        try:
            premium(model, CTE_WEIGHT, distinct[-1])
            mismatches += 1
        except ZeroNormalizer:
            pass
    record(7, mismatches == 0 and continuity == 0, time.perf_counter() - t0,
           f"20 samples, {checked} evaluations, {mismatches} mismatches, {continuity} right-continuity breaks")


def test_criterion_8_inequalities():
    t0 = time.perf_counter()
    reps = inequality_suite()
    spot = reps[-1].details["spot_lambda1_y1"]
    spot_ok = abs(spot["lhs"] - 0.359141) < 1e-6 and abs(spot["rhs"] - 0.278652) < 1e-6
    summary = ", ".join(f"{r.property} min margin {r.worst_violation:.2e}" for r in reps)
    record(8, all(r.passed for r in reps) and spot_ok, time.perf_counter() - t0,
           f"{summary}; spot lhs {spot['lhs']:.6f} rhs {spot['rhs']:.6f}")


def test_criterion_9_calibration():
    t0 = time.perf_counter()
    worst, runs = 0.0, 0
    for model in (Exponential(1.0), Gamma(2.0, 1.0), Uniform(0.0, 2.0)):
        for fam in (ESSCHER, KAMPS, W4_WEIGHT, W5_WEIGHT, W6_WEIGHT, W7_WEIGHT):
            domain = probe_lambda_domain(model, fam, PROBE_GRID)
            lo, hi = domain.inner
            for lam in np.geomspace(max(lo, 0.05), min(hi, 5.0), 10):
                res = roundtrip(model, fam, float(lam), domain=domain)
                err = abs(res.lambda_star - lam) if res.status is Status.UNIQUE else math.inf
                worst = max(worst, err)
                runs += 1
    e3 = Empirical([1.0, 2.0, 3.0])
    plateau = solve(e3, CTE_WEIGHT, 2.5)
    jump = solve(e3, CTE_WEIGHT, 2.25)
    steps_ok = (
        plateau.status is Status.PLATEAU
        and plateau.lambda_star == 1.0
        and plateau.plateau[0] == 1.0
        and abs(plateau.plateau[1] - 2.0) <= 1e-9
        and jump.status is Status.NOT_ATTAINED
        and jump.jump_at == 1.0
    )
    record(9, worst <= 1e-6 and steps_ok, time.perf_counter() - t0,
           f"{runs} roundtrips, worst |lambda* - lambda| {worst:.1e}; plateau {plateau.plateau}, jump at {jump.jump_at}")


def test_criterion_10_domain_probe():
    t0 = time.perf_counter()
    d = probe_lambda_domain(Exponential(1.0), ESSCHER, [0.25, 0.5, 0.9, 1.1, 2.0])
    exp_ok = [r.finite for r in d.probe_log] == [True, True, True, False, False] and d.lower == 0.0 and d.upper <= 1.1
    grid = np.geomspace(1e-3, 1e2, 16)
    p = probe_lambda_domain(Pareto(2.0, 1.0), ESSCHER, grid)
    pareto_ok = p.is_empty and not any(r.finite for r in p.probe_log)
    record(10, exp_ok and pareto_ok, time.perf_counter() - t0,
           f"Exp(1) interval ({d.lower}, {d.upper}), Pareto(2,1) finite at {sum(r.finite for r in p.probe_log)}/{len(grid)} probes")
