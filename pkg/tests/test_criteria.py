import json

import numpy as np
import pytest

from competition.coexist import build_pair, decay_check, solve_coexistence
from competition.criteria import (
    REPORT_KEYS, check_existence, check_nonexistence, check_uniqueness_2sp, check_uniqueness_Nsp,
    coupling_constant, evaluate_criteria, theta_ratio, verify_uniqueness_empirically,
)
from competition.errors import RatioDegeneracyError
from competition.growth import from_text
from competition.lingrid import Grid, ScalarField
from oracles import discrete_lambda1

LV = ["15 - u - 0.1*v", "15 - 0.1*u - v"]
LV3 = ["12 - u1 - 0.05*(u2 + u3)", "12 - u2 - 0.05*(u1 + u3)", "12 - u3 - 0.05*(u1 + u2)"]
G = Grid.unit_interval(200)
LAM = discrete_lambda1((1.0,), (200,))


@pytest.fixture(scope="module")
def lv():
    m = from_text(LV)
    return m, build_pair(G, m)


def test_existence_margins_symmetric_model(lv):
    m, _ = lv
    ex = check_existence(G, m)
    assert ex["verdict"]
    for row in ex["margins"]:
        assert row["margin"] == pytest.approx(13.5 - LAM, abs=1e-8)
        assert row["margin"] == pytest.approx(13.5 - np.pi**2, abs=1e-3)


def test_existence_fails_for_strong_competitor_load():
    m = from_text(["10 - u - 0.2*v", "10 - 0.1*u - v"])
    ex = check_existence(G, m)
    assert ex["margins"][0]["value"] == pytest.approx(8.0, abs=1e-8)
    assert not ex["verdict"]


def test_zero_margin_boundaries():
    m = from_text(["13.5 - u"])
    assert not check_existence(G, m, lambda1=13.5)["verdict"]
    assert check_nonexistence(G, m, lambda1=13.5)["verdict"]


def test_nonexistence():
    assert check_nonexistence(G, from_text(["5 - u - 0.1*v", "15 - 0.1*u - v"]))["verdict"]
    nx = check_nonexistence(G, from_text(LV))
    assert not nx["verdict"]
    assert nx["margins"][1]["margin"] == pytest.approx(LAM - 15.0, abs=1e-8)


def test_two_species_uniqueness_symmetric(lv):
    m, pair = lv
    u = check_uniqueness_2sp(G, m, pair)
    assert u["lhs"] == pytest.approx(4.0)
    assert u["R1"] == pytest.approx(u["R2"], rel=1e-9)
    r = u["R1"]
    assert u["rhs"] == pytest.approx(2 * r * 0.01 + 2 * 0.01, rel=1e-12)
    assert u["verdict"] == (r <= 199) and u["verdict"]
    assert r == pytest.approx(theta_ratio(pair.uppers[0], pair.lowers[1]))


def test_strong_coupling_is_recorded():
    m = from_text(["15 - u - 1.9*v", "15 - 1.9*u - v"], strict=True)
    ex = check_existence(G, m)
    # 15 - 1.9*15 < lambda1: no pair, report still assembled
    rep = evaluate_criteria(G, m)
    assert not ex["verdict"] and rep.uniqueness_2sp["status"] == "skipped"


def test_moderate_coupling_verdict_follows_margin():
    m = from_text(["40 - u - 0.5*v", "35 - 0.6*u - 0.8*v"])
    pair = build_pair(G, m)
    u = check_uniqueness_2sp(G, m, pair)
    assert u["margin"] == pytest.approx(u["lhs"] - u["rhs"])
    assert u["verdict"] == (u["lhs"] >= u["rhs"])


def test_decoupled_system():
    # zero cross partials fail the strict competition check, so record instead of raising
    m = from_text(["15 - u", "14 - v"], strict=False)
    pair = build_pair(G, m)
    u = check_uniqueness_2sp(G, m, pair)
    assert u["rhs"] == 0.0 and u["verdict"]
    n = check_uniqueness_Nsp(G, m, pair)
    assert all(s["rhs"] == 0.0 for s in n["species"]) and n["verdict"]


def test_nonconstant_cross_partial_uses_magnitudes():
    m = from_text(["15 - u - 0.1*(1 + u)*v", "15 - 0.1*u - v"])
    pair = build_pair(G, m)
    u = check_uniqueness_2sp(G, m, pair)
    assert u["sup_neg_g_v"] == pytest.approx(1.6, abs=1e-8)
    assert u["rhs"] > u["rhs_literal"]


def test_three_species_uniqueness():
    m = from_text(LV3)
    pair = build_pair(G, m)
    n = check_uniqueness_Nsp(G, m, pair)
    k = n["K"]
    assert np.isfinite(k) and k == pytest.approx(coupling_constant(pair))
    for s in n["species"]:
        assert s["lhs"] == pytest.approx(2.0)
        assert s["rhs"] == pytest.approx(2 * 0.05 * (1 + k))
    assert n["verdict"] == (k < 19)
    assert check_uniqueness_2sp(G, m, pair) is None


def test_both_uniqueness_tests_reported_for_two_species(lv):
    m, pair = lv
    rep = evaluate_criteria(G, m, pair=pair)
    assert rep.uniqueness_2sp["status"] == rep.uniqueness_Nsp["status"] == "evaluated"
    assert rep.uniqueness_2sp["lhs"] != rep.uniqueness_Nsp["species"][0]["lhs"]


def test_ratio_degeneracy():
    g = Grid.unit_interval(5)
    with pytest.raises(RatioDegeneracyError):
        theta_ratio(ScalarField(g, np.ones(5)), ScalarField(g, [1.0, 1.0, 0.0, 1.0, 1.0]))


def test_report_shape_and_determinism(lv):
    m, _ = lv
    a = evaluate_criteria(G, m).to_json(sort_keys=True)
    b = evaluate_criteria(G, m).to_json(sort_keys=True)
    assert a == b
    d = json.loads(a)
    assert set(d) == set(REPORT_KEYS)
    assert d["sampling"]["resolution"] == 101
    assert d["grid"]["interior_counts"] == [200]
    for row in d["existence"]:
        assert row["verdict"] == (row["margin"] > 0)
    for row in d["nonexistence"]:
        assert row["verdict"] == (row["margin"] >= 0)


def test_empirical_uniqueness(lv):
    m, pair = lv
    w = verify_uniqueness_empirically(G, m, pair)
    assert w.unique and w.gap <= 1e-7 and len(w.start_gaps) == 3
    u, v = (f.values for f in w.solution.fields)
    assert np.max(np.abs(u - v)) <= 1e-7


def test_existence_implies_pair_and_nonexistence_implies_decay():
    for texts in (LV, ["12 - u - 0.2*v", "13 - 0.3*u - v"], ["5 - u - 0.1*v", "15 - 0.1*u - v"],
                  ["15 - u - 0.1*v", "9 - 0.1*u - v"]):
        m = from_text(texts)
        rep = evaluate_criteria(G, m)
        if rep.existence_verdict:
            pair = build_pair(G, m)
            assert solve_coexistence(G, m, pair).sandwich.ok
        if rep.nonexistence_verdict:
            for i, row in enumerate(rep.nonexistence):
                if row["verdict"]:
                    assert decay_check(G, m, i).sup_norm <= 1e-6
