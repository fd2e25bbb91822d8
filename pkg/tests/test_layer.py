import math
import warnings

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from iwatsuka.errors import ProfileError
from iwatsuka.layer import (CurveSpec, JoinWarning, LayerGeometry, arc_chain, builtin_curve,
                            check_unit_speed, circular_bend, curvature, curve_from_samples,
                            effective_profile, layer_ac_check, layer_bands, layer_potential_V, line,
                            load_curve_csv, s_bend, smooth_bend, write_curve_csv,
                            write_effective_profile_csv)
from iwatsuka.profiles import ac_condition

DEG = math.pi / 180


def test_line_curvature_zero():
    c = line(0.3)
    t = curvature(c, "fd")
    assert np.max(np.abs(t.kappa)) < 1e-9
    e = effective_profile(c, 2.0)
    assert np.allclose(e.b_eff.y, 2.0 * math.cos(0.3))
    assert np.allclose(e.w_eff.y, 0.0)


def test_circle_samples():
    R = 3.0
    s = np.linspace(0, 10, 2001)
    c = curve_from_samples(s, R * np.sin(s / R), R * (1 - np.cos(s / R)))
    t = curvature(c)
    assert t.method == "fd"
    assert np.max(np.abs(t.kappa - 1 / R)) < 1e-5


def test_bend_curvature_away_from_joins():
    c = circular_bend(2.0, 0.0, 60 * DEG)
    t = curvature(c, "fd")
    j0, j1 = c.joins
    arc = (c.s > j0 + 0.05) & (c.s < j1 - 0.05)
    straight = (c.s < j0 - 0.05) | (c.s > j1 + 0.05)
    assert np.max(np.abs(t.kappa[arc] - 0.5)) < 1e-4
    assert np.max(np.abs(t.kappa[straight])) < 1e-4
    assert j1 - j0 == pytest.approx(2.0 * math.pi / 3)


def test_bend_geometry():
    c = circular_bend(2.0, 0.0, 60 * DEG)
    check_unit_speed(c)
    # the outgoing lead points at 60 degrees
    dx, dz = c.x[-1] - c.x[-2], c.z[-1] - c.z[-2]
    assert math.atan2(dz, dx) == pytest.approx(60 * DEG, abs=1e-9)
    pos = np.hypot(np.diff(c.x), np.diff(c.z))
    assert np.allclose(pos, c.ds, rtol=1e-6)


def test_unit_speed_violation_names_location():
    s = np.linspace(0, 1, 101)
    c = curve_from_samples(s, 2 * s, 0 * s)
    with pytest.raises(ProfileError, match="s="):
        curvature(c)


def test_grid_must_be_uniform():
    s = np.array([0.0, 0.1, 0.2, 0.35, 0.4, 0.5])
    with pytest.raises(ProfileError, match="uniform"):
        curve_from_samples(s, s, 0 * s)
    with pytest.raises(ProfileError):
        curve_from_samples([0, 1, 2], [0, 1, 2], [0, 0, 0])


@settings(max_examples=25, deadline=None)
@given(a_in=st.floats(-3, 3), a_out=st.floats(-3, 3), width=st.floats(0.3, 3))
def test_builtins_are_unit_speed(a_in, a_out, width):
    check_unit_speed(smooth_bend(a_in, a_out, width, half_length=10.0, ds=0.02))
    if abs(a_out - a_in) > 1e-3:
        check_unit_speed(circular_bend(1.5, a_in, a_out, lead=5.0, ds=0.02))


@settings(max_examples=25, deadline=None)
@given(a_in=st.floats(-3, 3), a_out=st.floats(-3, 3), width=st.floats(0.3, 3), B0=st.floats(0.1, 5))
def test_effective_profile_bounds(a_in, a_out, width, B0):
    e = effective_profile(smooth_bend(a_in, a_out, width, half_length=10.0, ds=0.02), B0)
    assert np.all(np.abs(e.b_eff.y) <= B0 * (1 + 1e-12))
    assert np.all(np.asarray(e.w_eff.y) <= 0.0)


def test_effective_profile_bend_tails():
    e = effective_profile(circular_bend(2.0, 0.0, 60 * DEG), 1.0)
    t = e.tails
    assert (t.b_under_minus, t.b_over_minus) == (1.0, 1.0)
    assert t.b_under_plus == pytest.approx(0.5) and t.b_over_plus == pytest.approx(0.5)
    assert (t.w_under_plus, t.w_over_plus, t.w_under_minus, t.w_over_minus) == (0, 0, 0, 0)
    assert t.provenance == "exact"


def test_sampled_curve_has_sampled_tails():
    R = 2.0
    s = np.linspace(-5, 5, 1001)
    c = curve_from_samples(s, R * np.sin(s / R), R * (1 - np.cos(s / R)))
    e = effective_profile(c, 1.0)
    assert e.tails.provenance == "sampled"
    assert layer_ac_check(e).decision.heuristic


def test_ac_bend_60():
    r = layer_ac_check(effective_profile(circular_bend(2.0, 0.0, 60 * DEG), 1.0))
    assert r.decision.verdict and r.clause == "curvature_gap"
    assert r.swapped and r.scaled_margin == pytest.approx(2.0)
    assert r.limit_clause


def test_ac_bend_120_sign_split():
    r = layer_ac_check(effective_profile(circular_bend(2.0, 0.0, 120 * DEG), 1.0))
    assert r.decision.verdict and r.clause == "sign_split"


def test_ac_line_false():
    r = layer_ac_check(effective_profile(line(0.2), 1.0))
    assert not r.decision.verdict and r.clause == "none" and not r.limit_clause


def test_ac_right_angle_edge_case():
    # one lead has x' = 0: neither displayed condition holds, the limit clause does
    r = layer_ac_check(effective_profile(circular_bend(2.0, 0.0, 90 * DEG), 1.0))
    assert not r.decision.verdict and r.clause == "none"
    assert r.limit_clause


@pytest.mark.parametrize("c", [circular_bend(2.0, 0.0, 60 * DEG), circular_bend(1.0, 0.0, 120 * DEG),
                               s_bend(1.0, 40 * DEG), smooth_bend(0.2, 1.0, 0.7), line(1.0)])
def test_ac_is_delegated(c):
    e = effective_profile(c, 1.3)
    assert layer_ac_check(e).decision == ac_condition(e.tails)


def test_v_zero_on_line():
    geom = LayerGeometry(0.5, 0.3)
    s = np.linspace(-5, 5, 11)
    assert np.all(layer_potential_V(line(0.0), geom, s, method="exact") == 0.0)
    # fourth differences of positions leave round-off of order eps |x| / ds^4
    assert np.max(np.abs(layer_potential_V(line(0.0), geom, s))) < 1e-6


def test_v_on_arc_interior():
    R, a, u = 2.0, 0.3, 0.5
    c = circular_bend(R, 0.0, 90 * DEG)
    s_mid = 0.5 * sum(c.joins)
    f = 1 - a * u / R
    assert layer_potential_V(c, LayerGeometry(a, u), s_mid) == pytest.approx(-(1 / (4 * R ** 2)) / f ** 2,
                                                                             rel=1e-4)


def _v_oracle(turn, width, a, u, s0):
    s = sp.symbols("s", real=True)
    k = sp.Abs(sp.Float(turn, 30)) / (2 * sp.Float(width, 30)) * sp.sech(s / sp.Float(width, 30)) ** 2
    kd, kdd = sp.diff(k, s), sp.diff(k, s, 2)
    a, u = sp.Float(a, 30), sp.Float(u, 30)
    f = 1 - a * u * k
    V = -k ** 2 / (4 * f ** 2) - a * u * kdd / (2 * f ** 3) - 5 * a ** 2 * u ** 2 * kd ** 2 / (4 * f ** 4)
    return float(V.subs(s, s0).evalf(30))


@pytest.mark.parametrize("s0", [0.0, 0.4, -1.1])
def test_v_smooth_bend_against_symbolic(s0):
    c = smooth_bend(0.0, 1.0, 1.0, ds=0.005)
    ref = _v_oracle(1.0, 1.0, 0.1, 0.5, s0)
    geom = LayerGeometry(0.1, 0.5)
    assert layer_potential_V(c, geom, s0, method="exact") == pytest.approx(ref, abs=1e-13)
    # interpolation between nodes adds an O(ds^2) error to the stencil error
    assert layer_potential_V(c, geom, s0) == pytest.approx(ref, abs=1e-5)


def test_v_limit_thin_layer():
    c = smooth_bend(0.0, 1.0, 1.0)
    t = curvature(c)
    i = int(np.argmin(np.abs(c.s - 0.3)))
    s0 = c.s[i]
    diffs = [abs(layer_potential_V(c, LayerGeometry(a, 0.7), s0) + t.kappa[i] ** 2 / 4)
             for a in (1e-1, 1e-2, 1e-3)]
    assert diffs[2] < diffs[1] < diffs[0] and diffs[2] < 1e-3


def test_v_rejects_thick_layer():
    c = circular_bend(0.5, 0.0, 90 * DEG)
    with pytest.raises(ProfileError, match="thick"):
        layer_potential_V(c, LayerGeometry(0.6, 0.1), 0.0)
    with pytest.raises(ProfileError):
        LayerGeometry(0.1, 1.0)
    with pytest.raises(ProfileError):
        LayerGeometry(-0.1, 0.0)


def test_v_warns_at_joins():
    c = circular_bend(2.0, 0.0, 60 * DEG)
    with pytest.warns(JoinWarning):
        layer_potential_V(c, LayerGeometry(0.1, 0.2), c.joins[1])
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        layer_potential_V(c, LayerGeometry(0.1, 0.2), 0.5 * sum(c.joins))


def test_fd_curvature_second_order():
    errs = []
    for ds in (0.04, 0.02, 0.01):
        c = smooth_bend(0.0, 1.0, 1.0, ds=ds)
        exact = c.curvature_fn(c.s)[0]
        m = np.abs(c.s) < 5
        errs.append(np.max(np.abs(curvature(c, "fd").kappa[m] - exact[m])))
    assert 3.5 <= errs[0] / errs[1] <= 4.5
    assert 3.5 <= errs[1] / errs[2] <= 4.5


def test_smooth_bend_closed_form_derivatives():
    turn, width = -1.1, 0.6
    c = smooth_bend(0.3, 0.3 + turn, width)
    x = sp.symbols("x", real=True)
    k = abs(turn) / (2 * width) * sp.sech(x / width) ** 2
    for s0 in (-1.3, 0.0, 0.25, 2.0):
        got = [float(v) for v in c.curvature_fn(np.array(s0))]
        want = [float(sp.diff(k, x, n).subs(x, s0)) for n in range(3)]
        assert got == pytest.approx(want, rel=1e-12, abs=1e-14)
    # total turning equals the integral of the curvature
    assert np.trapezoid(c.curvature_fn(c.s)[0], c.s) == pytest.approx(abs(turn), abs=1e-6)


def test_layer_bands_line_is_landau():
    s = layer_bands(effective_profile(line(0.0), 1.0), [-5.0, 0.0, 5.0], 3)
    assert np.allclose(s.bands, np.array([[1.0], [3.0], [5.0]]), atol=1e-3)


def test_layer_bands_bend_tails_follow_side_convention():
    s = layer_bands(effective_profile(circular_bend(2.0, 0.0, 60 * DEG), 1.0), [-40.0, 40.0], 1)
    assert s.band(1)[0] == pytest.approx(0.5, abs=5e-2)
    assert s.band(1)[1] == pytest.approx(1.0, abs=5e-2)


def test_curvature_binding_dip():
    e = effective_profile(smooth_bend(0.0, 60 * DEG, 0.2), 1.0)
    s = layer_bands(e, np.linspace(-10, 10, 21), 1)
    assert s.band(1).min() < 0.5


def test_arc_chain_validation_and_builtin_lookup():
    with pytest.raises(ProfileError):
        arc_chain([(0.0, 1.0)])
    with pytest.raises(ProfileError, match="available"):
        builtin_curve("racetrack-9")
    with pytest.raises(ProfileError, match="parameters"):
        builtin_curve("line", wobble=1)
    assert isinstance(builtin_curve("s_bend", radius=1.0, angle=0.5), CurveSpec)


def test_csv_roundtrip(tmp_path):
    c = circular_bend(2.0, 0.0, 60 * DEG, lead=3.0, ds=0.05)
    p = tmp_path / "curve.csv"
    write_curve_csv(c, p)
    back = load_curve_csv(p)
    assert np.array_equal(back.x, c.x) and np.array_equal(back.s, c.s)
    q = tmp_path / "eff.csv"
    write_effective_profile_csv(effective_profile(c, 1.0), q)
    assert q.read_text().splitlines()[0] == "s,b_eff,w_eff,kappa"


def test_curve_csv_errors(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("s,x\n0,1\n")
    with pytest.raises(ProfileError):
        load_curve_csv(p)
