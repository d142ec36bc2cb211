import numpy as np
import pytest

from competition.coexist import (
    CoexistencePair, build_pair, decay_check, picard_solve, solve_coexistence, verify_pair, verify_sandwich,
)
from competition.errors import NonexistenceError
from competition.expr import parse
from competition.growth import from_text
from competition.lingrid import Grid, ScalarField
from competition.logistic import solve_logistic
from oracles import newton_system

LV = ["15 - u - 0.1*v", "15 - 0.1*u - v"]
LV3 = ["12 - u1 - 0.05*(u2 + u3)", "12 - u2 - 0.05*(u1 + u3)", "12 - u3 - 0.05*(u1 + u2)"]
G200 = Grid.unit_interval(200)


@pytest.fixture(scope="module")
def lv():
    m = from_text(LV)
    return m, build_pair(G200, m)


@pytest.fixture(scope="module")
def lv_solution(lv):
    m, pair = lv
    return solve_coexistence(G200, m, pair)


def test_pair_is_made_of_logistic_solutions(lv):
    m, pair = lv
    up = solve_logistic(G200, parse("15 - u", 1)).theta.values
    lo = solve_logistic(G200, parse("13.5 - u", 1)).theta.values
    for i in range(2):
        assert np.max(np.abs(pair.uppers[i].values - up)) <= 1e-7
        assert np.max(np.abs(pair.lowers[i].values - lo)) <= 1e-7
        assert np.all(pair.lowers[i].values <= pair.uppers[i].values)
    assert pair.substituted == ()


def test_pair_inequalities_hold(lv):
    m, pair = lv
    rep = verify_pair(G200, m, pair)
    assert rep.ok and not rep.failures()
    assert all(c.margin >= 0 for c in rep.checks)


def test_swapped_pair_fails_with_negative_margins(lv):
    m, pair = lv
    rep = verify_pair(G200, m, CoexistencePair(pair.lowers, pair.uppers))
    assert not rep.ok
    assert all(c.margin < 0 for c in rep.checks)
    assert not any(rep.ordered)


def test_local_bump_fails_near_the_node(lv):
    m, pair = lv
    k = 87
    bumped = pair.uppers[0].values.copy()
    bumped[k] += 0.5
    rep = verify_pair(G200, m, CoexistencePair((ScalarField(G200, bumped), pair.uppers[1]), pair.lowers))
    fails = rep.failures()
    assert [(c.species, c.kind) for c in fails] == [(0, "upper")]
    assert abs(fails[0].worst_node - k) <= 1


def test_missing_lower_logistic_is_an_error():
    m = from_text(["10 - u - 0.2*v", "15 - 0.1*u - v"])
    with pytest.raises(NonexistenceError):
        build_pair(Grid.unit_interval(60), m)


def test_symmetric_coexistence(lv_solution):
    res = lv_solution
    u, v = (f.values for f in res.fields)
    assert max(res.residuals) <= 1e-7
    assert np.max(np.abs(u - v)) <= 1e-6
    assert res.sandwich.ok and res.sandwich.strict
    assert res.unique_in_sector and res.maximal_minimal_gap <= 1e-8
    assert res.max_violation == 0.0
    assert res.sandwich_certificate == [True, True]


def test_matches_coupled_newton_on_coarse_grid():
    g = Grid.unit_interval(40)
    m = from_text(LV)
    res = solve_coexistence(g, m, build_pair(g, m))
    rates = lambda U: [15 - U[0] - 0.1 * U[1], 15 - 0.1 * U[0] - U[1]]
    jac = lambda U: [[-np.ones(40), -0.1 * np.ones(40)], [-0.1 * np.ones(40), -np.ones(40)]]
    x = g.coordinates()[0]
    ref = newton_system((1.0,), (40,), rates, jac, [6 * np.sin(np.pi * x)] * 2)
    for f, r in zip(res.fields, ref):
        assert np.max(np.abs(f.values - r)) <= 1e-6


def test_asymmetric_model_against_newton():
    g = Grid.unit_interval(40)
    m = from_text(["18 - u - 0.3*v", "14 - 0.2*u - 1.5*v"])
    res = solve_coexistence(g, m, build_pair(g, m))
    rates = lambda U: [18 - U[0] - 0.3 * U[1], 14 - 0.2 * U[0] - 1.5 * U[1]]
    one = np.ones(40)
    jac = lambda U: [[-one, -0.3 * one], [-0.2 * one, -1.5 * one]]
    x = g.coordinates()[0]
    ref = newton_system((1.0,), (40,), rates, jac, [np.sin(np.pi * x) * 5, np.sin(np.pi * x) * 2])
    assert res.unique_in_sector
    for f, r in zip(res.fields, ref):
        assert np.max(np.abs(f.values - r)) <= 1e-6


def test_degenerate_start_returns_immediately(lv, lv_solution):
    m, _ = lv
    sol = lv_solution.fields
    res = solve_coexistence(G200, m, CoexistencePair(sol, sol))
    assert res.iterations <= 2
    for a, b in zip(res.fields, sol):
        assert np.max(np.abs(a.values - b.values)) <= 1e-8


def test_sandwich_violations_detected(lv, lv_solution):
    _, pair = lv
    too_big = [ScalarField(G200, 1.1 * f.values) for f in pair.uppers]
    cert = verify_sandwich(too_big, pair)
    assert not cert.ok and not any(s.upper_ok for s in cert.species)
    at_lower = verify_sandwich(pair.lowers, pair)
    assert at_lower.ok and not at_lower.strict
    assert all(s.lower_margin == 0.0 for s in at_lower.species)


def test_sequences_stay_monotone_and_in_sector(lv):
    m, pair = lv
    snaps = []
    solve_coexistence(G200, m, pair, callback=lambda k, up, lo: snaps.append(([a.copy() for a in up],
                                                                           [b.copy() for b in lo])))
    prev_up = [f.values for f in pair.uppers]
    prev_lo = [f.values for f in pair.lowers]
    for up, lo in snaps:
        for i in range(2):
            assert np.all(up[i] <= prev_up[i] + 1e-12) and np.all(lo[i] >= prev_lo[i] - 1e-12)
            assert np.all(lo[i] <= up[i] + 1e-12)
            assert np.all(pair.lowers[i].values <= lo[i] + 1e-12) and np.all(up[i] <= pair.uppers[i].values + 1e-12)
        prev_up, prev_lo = up, lo


def test_three_species_symmetry():
    m = from_text(LV3)
    pair = build_pair(G200, m)
    for i in (1, 2):
        assert np.max(np.abs(pair.uppers[i].values - pair.uppers[0].values)) <= 1e-8
        assert np.max(np.abs(pair.lowers[i].values - pair.lowers[0].values)) <= 1e-8
    res = solve_coexistence(G200, m, pair)
    assert res.sandwich.ok and max(res.residuals) <= 1e-7
    for f in res.fields[1:]:
        assert np.max(np.abs(f.values - res.fields[0].values)) <= 1e-6


def test_decay_when_intrinsic_rate_is_subcritical():
    m = from_text(["5 - u - 0.1*v", "15 - 0.1*u - v"])
    d = decay_check(G200, m, 0)
    assert d.decayed and d.sup_norm <= 1e-6


def test_forced_pair_substitutes_missing_bounds():
    m = from_text(["5 - u - 0.1*v", "15 - 0.1*u - v"])
    pair = build_pair(G200, m, force=True)
    assert pair.substituted == (0,)
    assert np.all(pair.uppers[0].values == m.capacities[0]) and not np.any(pair.lowers[0].values)
    res = solve_coexistence(G200, m, pair)
    assert np.max(res.maximal[0].values) <= 1e-6


def test_nonunique_sector_reports_both_limits():
    # lower section of u has no logistic solution, so its forced lower bound is 0
    m = from_text(["11 - u - 0.1*v", "15 - 0.1*u - v"])
    res = solve_coexistence(G200, m, build_pair(G200, m, force=True))
    assert not res.unique_in_sector and res.maximal_minimal_gap > 0.1
    assert max(res.residuals_maximal) <= 1e-8 and max(res.residuals_minimal) <= 1e-8
    favour_u, favour_v = res.extreme_solutions()
    assert favour_u[0].values.max() > 0.1 and not np.any(favour_v[0].values)


def test_picard_from_interior_start(lv, lv_solution):
    m, pair = lv
    start = [0.3 * lo.values + 0.7 * up.values for lo, up in zip(pair.lowers, pair.uppers)]
    fields, its = picard_solve(G200, m, start)
    for a, b in zip(fields, lv_solution.fields):
        assert np.max(np.abs(a.values - b.values)) <= 1e-7
