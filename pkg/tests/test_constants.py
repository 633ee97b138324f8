import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from burkholder.constants import (
    CSV_HEADER,
    certify_lemmas,
    compute_C,
    compute_c,
    compute_s1,
    compute_z1,
    constants_from_series,
    find_z0,
    fmt17,
    reflection_report,
    solve,
    tangency_formula,
    v_func,
)
from burkholder.errors import RootBeyondRange
from burkholder.specfun import Params, build_series, evaluate

from .conftest import solved

MATRIX = [(p, d) for p in (0.8, 1, 1.5, 2, 3, 6) for d in (1.5, 2, 3, 5) if p + d > 2]


@pytest.mark.parametrize("d", [1.5, 2, 3, 5])
def test_z0_vanishes_at_p2(d):
    _, b = solved(2.0, d)
    assert abs(b.z0) <= 1e-12
    assert b.C_pd == pytest.approx(1.0, abs=1e-12)
    assert b.c == pytest.approx(1.0, abs=1e-12)
    assert b.s1 is None
    assert b.z1 == b.z0


def test_legendre_roots():
    _, b6 = solved(6.0, 2.0)
    assert b6.z0 == pytest.approx(-1 / math.sqrt(3), abs=1e-12)
    assert b6.C_pd == pytest.approx(2 + math.sqrt(3), abs=1e-11)
    _, b12 = solved(12.0, 2.0)
    assert b12.z0 == pytest.approx(-math.sqrt(0.6), abs=1e-12)
    r = math.sqrt(0.6)
    assert b12.C_pd == pytest.approx((1 + r) / (1 - r), rel=1e-11)


def test_c_legendre_both_routes():
    series, b = solved(6.0, 2.0)
    z0 = -1 / math.sqrt(3)
    closed = 12 * (1 - 1 / math.sqrt(3)) ** 5 / (64 * math.sqrt(3) * (1 + 1 / math.sqrt(3)))
    assert b.c == pytest.approx(closed, rel=1e-12)
    assert tangency_formula(6, z0, -3 * z0) == pytest.approx(closed, rel=1e-14)


def test_s1_p6():
    _, b = solved(6.0, 2.0)
    K = 2 - math.sqrt(3)
    t = K**1.5
    assert b.s1 == pytest.approx((t - 1) / (t + 1), rel=1e-12)
    assert b.s1 < b.z0 < 0
    assert b.s1 == pytest.approx(-0.756, abs=1e-3)


def test_s1_absent_p2():
    assert compute_s1(Params(2, 3), 0.0) is None


def test_s1_p15():
    _, b = solved(1.5, 2.5)
    assert b.s1 < 0 and b.s1 < b.z0


@pytest.mark.parametrize("p,d", [(0.5, 1.5), (0.7, 1.3), (0.4, 1.5)])
def test_no_root_subcritical(p, d):
    series, b = solve(Params(p, d))
    assert find_z0(series) is None
    assert b.status == "no-finite-constant"
    assert b.C_pd == math.inf
    assert b.to_dict()["C_pd"] is None


def test_root_beyond_range():
    # near-critical root lies far to the right; a short series cannot see it
    series = build_series(Params(0.55, 1.5), s_max=0.5)
    with pytest.raises(RootBeyondRange):
        find_z0(series)


@pytest.mark.parametrize("p,d", MATRIX)
def test_bundle_invariants(p, d):
    series, b = solved(float(p), float(d))
    assert abs(evaluate(series, b.z0)) <= 1e-12
    assert b.gprime_z0 > 0
    assert np.sign(b.z0) == np.sign(2 - p) or abs(b.z0) <= 1e-12
    assert b.C_pd >= 1 - 1e-12
    assert b.C_pd == pytest.approx(compute_C(Params(p, d), b.z0))
    if p >= 1:
        assert b.c * b.gprime_z0 == pytest.approx(v_func(b.z0, p, b.K, 1), rel=1e-10)
        assert b.z1 == b.z0
    if b.s1 is not None:
        assert b.s1 < 0 and b.s1 < b.z0


def test_c_p09_is_maximal():
    series, b = solved(0.9, 2.0)
    p, K, c = 0.9, b.K, b.c
    grid = np.linspace(-1, b.z0, 4001)
    g, v = evaluate(series, grid), v_func(grid, p, K)
    assert np.all(c * g >= v - 1e-12)
    # any larger constant breaks the inequality just left of the tangency point
    pts = b.z1 - np.logspace(-9, -3, 61)
    gp, vp = evaluate(series, pts), v_func(pts, p, K)
    assert np.any(c * (1 + 1e-6) * gp < vp)
    assert b.c_upper is not None and c <= b.c_upper * (1 + 1e-12)


def test_z1_p09_tangency():
    series, b = solved(0.9, 2.0)
    z1 = compute_z1(series, b.z0, b.c)
    assert b.s1 < z1 <= b.z0
    sc = 1 + sum(abs(evaluate(series, z1, k)) for k in range(3))
    assert abs(b.c * evaluate(series, z1) - v_func(z1, 0.9, b.K)) <= 1e-10 * sc
    assert abs(b.c * evaluate(series, z1, 1) - v_func(z1, 0.9, b.K, 1)) <= 1e-8 * sc
    assert len(b.z1_candidates) >= 1


def test_z1_p15():
    series, b = solved(1.5, 2.0)
    assert compute_z1(series, b.z0, b.c) == b.z0


@given(st.floats(0.62, 0.99), st.floats(1.5, 6))
@settings(max_examples=15, deadline=None)
def test_c_below_upper_bound(p, d):
    series, b = solve(Params(p, d))
    assert b.c <= b.c_upper * (1 + 1e-12)
    grid = np.linspace(-1, b.z0, 1001)
    sc = 1 + sum(np.abs(evaluate(series, grid, k)) for k in range(3))
    assert np.all(b.c * evaluate(series, grid) - v_func(grid, p, b.K) >= -1e-10 * sc)


@pytest.mark.parametrize("p,d", MATRIX)
def test_lemma_suite(p, d):
    series, b = solved(float(p), float(d))
    reports = certify_lemmas(series, b, grid_n=2001, tol=1e-9)
    failed = [r.line() for r in reports if not r.passed]
    assert not failed, failed


@pytest.mark.parametrize("p", [0.9, 3.0, 6.0])
def test_reflection_d2(p):
    series, _ = solved(p, 2.0)
    assert reflection_report(series).passed


def test_near_critical_status(monkeypatch):
    # roots beyond 1 - 1e-4 exceed the default term budget, so exercise the
    # flag with a lowered threshold on a root near 0.993
    import burkholder.constants as C
    series, b = solve(Params(0.01, 3))
    assert b.status == "ok" and b.z0 > 0.99
    monkeypatch.setattr(C, "NEAR_CRITICAL", 0.99)
    assert C.constants_from_series(series).status == "near-critical"


def test_csv_row_format():
    _, b = solved(2.0, 2.0)
    row = b.csv_row()
    assert len(row) == len(CSV_HEADER)
    assert row[5] == ""  # s1 absent
    assert fmt17(0.1) == "0.10000000000000001"
    _, none = solve(Params(0.4, 1.5))
    assert none.csv_row()[2:7] == ["", "", "", "", ""]
    assert none.csv_row()[7] == "no-finite-constant"


def test_constants_from_series_matches_solve():
    series, b = solved(3.0, 2.0)
    assert constants_from_series(series) == b
    assert compute_c(series, b.z0) == b.c
