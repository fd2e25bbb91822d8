import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from iwatsuka.gauge import GaugeFunction, rebase_gauge, turning_points, vector_potential
from iwatsuka.profiles import Bump, Constant, Step, Tabulated, TanhStep


def test_vector_potential_examples():
    assert vector_potential(GaugeFunction(Constant(1.0)), -5.0) == pytest.approx(-5.0)
    g = GaugeFunction(Step(1.0, 2.0, 0.0))
    assert g(-2.0) == pytest.approx(-2.0)
    assert g(3.0) == pytest.approx(6.0)


def test_tanh_potential_against_quadrature():
    b = TanhStep(1.0, 2.0, 0.0, 1.0)
    g = GaugeFunction(b)
    closed = 1.5 * 10 + 0.5 * math.log(math.cosh(10.0))
    ref, _ = quad(b, 0.0, 10.0, epsabs=1e-12, epsrel=1e-12)
    assert g(10.0) == pytest.approx(closed, abs=1e-8)
    assert g(10.0) == pytest.approx(ref, abs=1e-8)


def test_tabulated_potential_is_trapezoid():
    b = Tabulated((0.0, 1.0, 3.0), (1.0, 3.0, 1.0), 1.0, 1.0)
    g = GaugeFunction(b)
    assert g(1.0) == pytest.approx(2.0)
    assert g(3.0) == pytest.approx(6.0)
    assert g(5.0) == pytest.approx(8.0)
    assert g(-2.0) == pytest.approx(-2.0)


def test_rebase_examples():
    g = rebase_gauge(GaugeFunction(Constant(1.0)), 3.0)
    assert g(7.0) == pytest.approx(4.0)
    step = GaugeFunction(Step(1.0, 2.0, 0.0))
    assert rebase_gauge(step, 3.0)(-2.0) == pytest.approx(-8.0)
    same = rebase_gauge(step, 0.0)
    xs = np.linspace(-5, 5, 21)
    assert np.array_equal(same(xs), step(xs))


@settings(max_examples=50, deadline=None)
@given(base=st.floats(-10, 10), x=st.floats(-30, 30))
def test_rebase_subtracts_value_at_base(base, x):
    g = GaugeFunction(TanhStep(-1.0, 2.0, 0.5, 0.8))
    r = rebase_gauge(g, base)
    assert r(base) == pytest.approx(0.0, abs=1e-12)
    assert r(x) == pytest.approx(g(x) - g(base), abs=1e-10 * (1 + abs(g(x))))


@pytest.mark.parametrize("b", [Constant(1.3), TanhStep(1.0, 2.0, 0.0, 1.0), Bump(1.0, 2.0, -1.0, 1.0, 2)])
def test_derivative_of_potential_is_field(b):
    g = GaugeFunction(b)
    x = 0.37
    errs = [abs((g(x + h) - g(x - h)) / (2 * h) - b(x)) for h in (1e-2, 5e-3)]
    assert errs[1] < errs[0] / 3.5 or errs[1] < 1e-10


def test_turning_point_examples():
    tp = turning_points(GaugeFunction(Constant(1.0)), -5.0)
    assert tp.roots == pytest.approx([5.0]) and tp.uniqueness
    tp = turning_points(GaugeFunction(Step(1.0, 2.0, 0.0)), -6.0)
    assert tp.roots == pytest.approx([3.0]) and tp.uniqueness


def test_turning_points_sign_changing_field():
    g = GaugeFunction(TanhStep(-1.0, 1.0, 0.0, 0.5))
    tp = turning_points(g, -4.0)
    assert len(tp.roots) == 2 and not tp.uniqueness
    # dense sign scan oracle
    xs = np.linspace(-50, 50, 200_001)
    f = -4.0 + g(xs)
    assert np.count_nonzero(np.diff(np.sign(f)) != 0) == 2
    for r in tp.roots:
        assert abs(-4.0 + g(r)) <= 1e-12 * 5


def test_turning_points_absent():
    # A_y >= 0 everywhere for this field, so xi = 1 never vanishes
    tp = turning_points(GaugeFunction(TanhStep(-1.0, 1.0, 0.0, 0.5)), 1.0)
    assert tp.roots == () or list(tp.roots) == []
    assert not tp.uniqueness and not tp.found


def test_turning_points_expands_box():
    tp = turning_points(GaugeFunction(Constant(1.0)), -300.0, search_box=(-50.0, 50.0))
    assert tp.roots == pytest.approx([300.0])


@settings(max_examples=60, deadline=None)
@given(xi=st.floats(-80, 80), base=st.floats(-5, 5))
def test_rebase_and_shift_give_same_roots(xi, base):
    g = GaugeFunction(Step(1.0, 2.0, 0.0))
    r = rebase_gauge(g, base)
    a = turning_points(g, xi)
    b = turning_points(r, xi + g(base))
    assert len(a.roots) == len(b.roots) == 1
    assert b.roots[0] == pytest.approx(a.roots[0], abs=1e-9 * (1 + abs(xi)))


@settings(max_examples=60, deadline=None)
@given(lo=st.floats(0.2, 3), hi=st.floats(0.2, 3), xi=st.floats(-60, 60))
def test_positive_field_has_at_most_one_root(lo, hi, xi):
    g = GaugeFunction(TanhStep(lo, hi, 0.0, 1.0))
    tp = turning_points(g, xi)
    assert len(tp.roots) <= 1
    for r in tp.roots:
        assert abs(xi + g(r)) <= 1e-12 * (1 + abs(xi))
