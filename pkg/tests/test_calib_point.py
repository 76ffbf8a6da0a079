import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from admissible import sample_rejected, stratified
from pelve_lab import (GPD, Constant, Exponential, PiecewiseQuantile, Uniform, bound_c2,
                       build_two_point_quantile, calibrate_one_point, classify_two_point, pelve,
                       solve_xi_from_c)
from pelve_lab.calib_point import TwoPointConstraint
from pelve_lab.errors import DomainError, InfeasibleConstraintError


def c_of_xi(xi):
    return math.e if xi == 0 else math.exp(-math.log1p(-xi) / xi)


@pytest.mark.parametrize("c,xi", [(2.0, -1.0), (math.e, 0.0), (4.0, 0.5)])
def test_solve_xi_examples(c, xi):
    assert solve_xi_from_c(c) == pytest.approx(xi, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(-50, 0.95))
def test_solve_xi_inverts(xi):
    c = c_of_xi(xi)
    if c > 1 + 1e-9:
        assert c_of_xi(solve_xi_from_c(c)) == pytest.approx(c, rel=1e-10)


def test_solve_xi_domain():
    with pytest.raises(DomainError):
        solve_xi_from_c(1.0)


def test_one_point_examples():
    m = calibrate_one_point(0.01, 2.0)
    assert isinstance(m, GPD) and m.xi == pytest.approx(-1.0, abs=1e-12)
    assert calibrate_one_point(0.1, math.e).xi == pytest.approx(0.0, abs=1e-12)
    assert isinstance(calibrate_one_point(0.05, 1.0), Constant)
    with pytest.raises(InfeasibleConstraintError):
        calibrate_one_point(0.5, 3.0)


@pytest.mark.parametrize("tup,case", [((0.05, 1, 0.1, 1), 1), ((0.05, 1, 0.1, 2), 2), ((0.01, 5, 0.04, 1.25), 3),
                                      ((0.01, 2.5, 0.05, 3), 4), ((0.01, 3, 0.02, 4), 5)])
def test_classification_examples(tup, case):
    assert classify_two_point(*tup).case == case


@pytest.mark.parametrize("tup", [(0.1, 3, 0.2, 1.2), (0.2, 2, 0.1, 3), (0.1, 0.5, 0.2, 2), (0.1, 2, 0.2, 6),
                                 (0.1, 11, 0.2, 2), (0.1, 2, 0.2, 1), (0.1, math.nan, 0.2, 2)])
def test_rejections(tup):
    con = classify_two_point(*tup)
    assert not con.admissible and con.reason
    with pytest.raises(InfeasibleConstraintError):
        build_two_point_quantile(con)


def test_boundary_tie_resolved_as_equality():
    # c2 a hair (1e-14 relative) off c1*eps1/eps2 is still Case 3
    assert classify_two_point(0.01, 5, 0.04, 1.25 * (1 + 1e-14)).case == 3


def test_case2_knots_and_constants():
    res = build_two_point_quantile(classify_two_point(0.05, 1, 0.1, 2))
    k = res.constants
    assert k["a1"] == pytest.approx((0 - 1) / (0.1 - 0.05))
    assert k["a2"] == pytest.approx((0 - 1) * (0.05 + 0.1) / (0.2 - 0.1) ** 2)
    s = np.array([0.0, 0.02, 0.05, 0.1, 0.15, 0.2])
    assert np.allclose(res.curve.value(s), [1, 1, 1, 0, k["a2"] * 0.15 + k["b2"], k["a2"] * 0.2 + k["b2"]])
    assert pelve(res.curve, 0.05) == pytest.approx(1.0, abs=1e-9)
    assert pelve(res.curve, 0.1) == pytest.approx(2.0, abs=1e-9)


def _k(const, xi, s):
    # the head's k in the stored (possibly rescaled) form:
    # (k(s) + shift) e^{log_scale}, expanded so that nothing cancels
    if const["k_shift"] != 0:
        return math.exp(const["k_log_scale"] - xi * math.log(s)) / xi
    return (s ** -xi - 1) / xi if xi != 0 else -math.log(s)


@pytest.mark.parametrize("tup", [(0.01, 5, 0.04, 1.25), (0.01, 2.5, 0.05, 3), (0.01, 3, 0.02, 4), (0.02, 1.3, 0.1, 2.5)])
def test_case_constants_recomputed(tup):
    res = build_two_point_quantile(classify_two_point(*tup))
    e1, c1, e2, c2 = tup
    k = res.constants
    xi = k["xi"]
    assert xi == pytest.approx(solve_xi_from_c(c1), abs=1e-14)
    assert k["k_eps1"] == pytest.approx(_k(k, xi, e1), rel=1e-12)
    case = res.case
    if case == 3:
        assert k["a"] == pytest.approx(2 * (k["k_eps1"] * e1 - k["k"]) / (c1 * e1 - e2) ** 2, rel=1e-12)
        assert k["b"] == pytest.approx(k["k_eps1"] - k["a"] * e2, rel=1e-12)
        assert res.curve.value(e1) == res.curve.value(e2)  # exact plateau
    elif case == 4:
        m = c1 * e1
        assert k["k_c1eps1"] == pytest.approx(_k(k, xi, m), rel=1e-12)
        assert k["a"] == pytest.approx(2 * m * (k["k_c1eps1"] - k["k_eps1"]) / (c2 * e2 - e2) ** 2, rel=1e-12)
        assert k["b"] == pytest.approx(k["k_c1eps1"] - k["a"] * e2, rel=1e-12)
    else:
        m = c1 * e1
        a1 = (k["k_eps1"] * e1 - k["k"]) / ((e2 - e1) * (m - 0.5 * (e1 + e2)))
        assert k["a1"] == pytest.approx(a1, rel=1e-12)
        assert k["b1"] == pytest.approx(k["k_eps1"] - a1 * e1, rel=1e-12)
        plateau = k["a1"] * e2 + k["b1"]
        assert k["a2"] == pytest.approx(2 * m * (plateau - k["k_eps1"]) / (m - c2 * e2) ** 2, rel=1e-12)
    assert pelve(res.curve, e1) == pytest.approx(c1, abs=1e-6)
    assert pelve(res.curve, e2) == pytest.approx(c2, abs=1e-6)


def test_continuity_at_breakpoints():
    for _, tup in stratified(20, seed=3):
        res = build_two_point_quantile(classify_two_point(*tup))
        e1, c1, e2, c2 = tup
        curve = res.curve
        for b in (e1, e2, c1 * e1, c2 * e2):
            if 0 < b < 1:
                lo, hi = b * (1 - 1e-13), b * (1 + 1e-13)
                steep = max(abs(curve.slope(lo)), abs(curve.slope(hi)))
                jump = abs(curve.value(lo) - curve.value(hi))
                assert jump <= 1e-12 * (1 + abs(curve.value(b))) + 2 * steep * (hi - lo)


def test_stratified_round_trip_sample():
    for case, tup in stratified(40, seed=11):
        res = build_two_point_quantile(classify_two_point(*tup))
        assert res.case == case
        assert res.roundtrip["error_eps1"] <= 1e-6 and res.roundtrip["error_eps2"] <= 1e-6


def test_random_rejections():
    rng = np.random.default_rng(5)
    for _ in range(300):
        assert not classify_two_point(*sample_rejected(rng)).admissible


def test_interior_flag_and_continuation():
    res = build_two_point_quantile(classify_two_point(0.01, 2.5, 0.05, 3))
    assert res.interior
    assert res.continuation.startswith("linear")
    edge = build_two_point_quantile(classify_two_point(0.05, 1, 0.1, 10))
    assert not edge.interior
    assert edge.continuation.startswith("none")


def test_result_json_reimports():
    res = build_two_point_quantile(classify_two_point(0.01, 3, 0.02, 4))
    doc = json.loads(json.dumps(res.to_json()))
    again = PiecewiseQuantile(doc["model"]["knots"], doc["model"].get("head"))
    assert pelve(again, 0.01) == pytest.approx(3, abs=1e-6)
    assert TwoPointConstraint.from_json(doc["constraint"]).case == 5


def test_khat_ktilde_order():
    with pytest.raises(DomainError):
        build_two_point_quantile(classify_two_point(0.05, 1, 0.1, 2), khat=0.0, ktilde=1.0)


@pytest.mark.parametrize("model,e1,e2,value", [(Exponential(1.0), 0.01, 0.05, math.e), (Uniform(), 0.1, 0.2, 2.0)])
def test_bound_c2_contains_true_value(model, e1, e2, value):
    b = bound_c2(model, e1, e2)
    assert b.lower <= value <= b.upper
    assert b.lower >= max(1.0, b.c1 * e1 / e2)


def test_bound_c2_random_gpd():
    rng = np.random.default_rng(2)
    for _ in range(100):
        g = GPD(rng.uniform(-2, 0.8))
        e1 = rng.uniform(0.001, 0.05)
        e2 = e1 * rng.uniform(1.5, 5)
        if g.mean > g.value(e2):
            continue
        b = bound_c2(g, e1, e2)
        p2 = pelve(g, e2)
        assert b.lower - 1e-9 <= p2 <= b.upper + 1e-9


def test_bound_c2_degenerate_flat():
    pq = PiecewiseQuantile([[0.0, 1.0], [0.2, 1.0], [1.0, 0.0]])
    b = bound_c2(pq, 0.05, 0.1)
    assert b.degenerate and b.lower == b.upper == max(1.0, b.c1 * 0.05 / 0.1)
