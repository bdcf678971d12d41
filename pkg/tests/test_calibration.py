import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from weighted_premium import (
    CTE_WEIGHT,
    ESSCHER,
    KAMPS,
    W4_WEIGHT,
    W5_WEIGHT,
    W6_WEIGHT,
    W7_WEIGHT,
    DomainEmpty,
    Empirical,
    Exponential,
    Gamma,
    MaxIterExceeded,
    Pareto,
    Status,
    Uniform,
    bracket_target,
    premium,
    probe_lambda_domain,
    roundtrip,
    solve,
)

E3 = Empirical([1.0, 2.0, 3.0])


# -- bracketing -------------------------------------------------------------


def test_bracket_contains_solution():
    br = bracket_target(Exponential(1.0), ESSCHER, 2.0)
    assert br.status is None
    assert br.lo < 0.5 <= br.hi
    assert br.h_lo < 2.0 <= br.h_hi


def test_bracket_above_range():
    assert bracket_target(Exponential(1.0), KAMPS, 3.0).status is Status.ABOVE


def test_bracket_below_range():
    assert bracket_target(Exponential(1.0), KAMPS, 0.9).status is Status.BELOW


def test_bracket_domain_empty():
    with pytest.raises(DomainEmpty):
        bracket_target(Pareto(2.0, 1.0), ESSCHER, 3.0)
    with pytest.raises(DomainEmpty):
        solve(Pareto(2.0, 1.0), ESSCHER, 3.0)


def test_bracket_rejects_bad_target():
    for pi in (0.0, -1.0, math.inf):
        with pytest.raises(ValueError):
            bracket_target(Exponential(1.0), ESSCHER, pi)


# -- solve ------------------------------------------------------------------


def test_solve_esscher():
    res = solve(Exponential(1.0), ESSCHER, 2.0)
    assert res.status is Status.UNIQUE
    assert res.lambda_star == pytest.approx(0.5, abs=1e-8)
    assert res.residual <= 1e-8


def test_solve_cte_exponential():
    res = solve(Exponential(1.0), CTE_WEIGHT, 3.5)
    assert res.status is Status.UNIQUE
    assert res.lambda_star == pytest.approx(2.5, abs=1e-8)


def test_solve_empirical_plateau():
    res = solve(E3, CTE_WEIGHT, 2.5)
    assert res.status is Status.PLATEAU
    assert res.lambda_star == 1.0
    assert res.plateau[0] == 1.0 and res.plateau[1] == pytest.approx(2.0, abs=1e-9)
    assert res.residual == 0.0
    d = res.to_dict()
    assert d["status"] == "PlateauSolution" and d["plateau"][0] == 1.0


def test_solve_empirical_jump():
    res = solve(E3, CTE_WEIGHT, 2.25)
    assert res.status is Status.NOT_ATTAINED
    assert res.lambda_star is None
    assert res.jump_at == 1.0
    assert res.to_dict()["jump_at"] == 1.0


def test_solve_out_of_range():
    assert solve(Exponential(1.0), KAMPS, 3.0).status is Status.ABOVE
    assert solve(Exponential(1.0), KAMPS, 0.9).status is Status.BELOW
    assert not Status.ABOVE.solved and Status.PLATEAU.solved


def test_result_json_fields():
    d = solve(Exponential(1.0), ESSCHER, 2.0).to_dict()
    assert set(d) == {"status", "lambda_star", "plateau", "residual", "iterations"}
    assert d["plateau"] is None


def test_max_iter_exceeded():
    with pytest.raises(MaxIterExceeded):
        solve(Exponential(1.0), ESSCHER, 2.0, max_iter=5)


def test_bisection_invariants():
    res = solve(Gamma(2.0, 1.0), W6_WEIGHT, 2.7)
    lo0, hi0 = res.bracket
    prev = hi0 - lo0
    for lo, hi in res.trace:
        assert lo0 <= lo <= hi <= hi0
        assert hi - lo == pytest.approx(prev / 2, rel=1e-12)
        prev = hi - lo
    bound = math.ceil(math.log2((hi0 - lo0) / 1e-10))
    assert len(res.trace) <= bound
    assert res.status is Status.UNIQUE
    assert res.lambda_star in (res.trace[-1][0], res.trace[-1][1])


def test_lambda_star_in_bracket():
    res = solve(Uniform(0.0, 2.0), W4_WEIGHT, 1.3)
    lo, hi = res.bracket
    assert lo <= res.lambda_star <= hi


@settings(max_examples=15, deadline=None)
@given(st.floats(1.05, 1.9), st.floats(1.05, 1.9))
def test_monotone_consistency(p1, p2):
    p1, p2 = sorted((p1, p2))
    m = Exponential(1.0)
    a, b = solve(m, KAMPS, p1), solve(m, KAMPS, p2)
    assert a.status.solved and b.status.solved
    assert a.lambda_star <= b.lambda_star + 1e-10


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(1, 200), min_size=2, max_size=12).map(lambda v: [x / 10 for x in v]), st.floats(0.0, 1.0))
def test_empirical_cte_solutions(sample, u):
    m = Empirical(sample)
    xs = sorted(set(sample))
    if len(xs) < 2:
        return
    levels = [premium(m, CTE_WEIGHT, max(lo, 1e-3)).premium for lo in [0.0] + xs[:-1]]
    # level k is attained on [x_k, x_{k+1}); the first one, the mean, is skipped
    k = 1 + min(int(u * (len(levels) - 1)), len(levels) - 2)
    res = solve(m, CTE_WEIGHT, levels[k])
    assert res.status.solved
    assert res.residual <= 1e-8
    assert res.lambda_star == xs[k - 1]


# -- roundtrips -------------------------------------------------------------


def test_roundtrip_examples():
    assert roundtrip(Exponential(1.0), KAMPS, 1.0).lambda_star == pytest.approx(1.0, abs=1e-6)
    assert roundtrip(Exponential(1.0), ESSCHER, 0.25).lambda_star == pytest.approx(0.25, abs=1e-6)
    res = roundtrip(E3, CTE_WEIGHT, 1.5)
    assert res.status is Status.PLATEAU
    assert res.plateau[0] <= 1.5 <= res.plateau[1]
    assert res.lambda_star == 1.0


ROUNDTRIP_FAMILIES = [ESSCHER, KAMPS, W4_WEIGHT, W5_WEIGHT, W6_WEIGHT, W7_WEIGHT]
ROUNDTRIP_MODELS = [Exponential(1.0), Gamma(2.0, 1.0), Uniform(0.0, 2.0)]


@pytest.mark.parametrize("model", ROUNDTRIP_MODELS, ids=lambda m: m.spec())
@pytest.mark.parametrize("fam", ROUNDTRIP_FAMILIES, ids=lambda f: f.name)
def test_roundtrip_grid(model, fam):
    domain = probe_lambda_domain(model, fam, np.geomspace(0.05, 10.0, 25))
    lo, hi = domain.inner
    for lam in np.geomspace(max(lo, 0.05), min(hi, 5.0), 10):
        res = roundtrip(model, fam, float(lam), domain=domain)
        assert res.status is Status.UNIQUE, (lam, res)
        assert abs(res.lambda_star - lam) <= 1e-6
