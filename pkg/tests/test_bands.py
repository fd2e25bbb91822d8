import json
import math

import numpy as np
import pytest

from iwatsuka.bands import (SIDE_CONVENTION, diagnose, export_sweep, k_eps_witness, nonconstancy_check,
                            sandwich_check, sweep, tail_check)
from iwatsuka.errors import EigenvalueCollisionError, NonConfiningError
from iwatsuka.fiber import SolverOptions
from iwatsuka.gauge import GaugeFunction, rebase_gauge
from iwatsuka.profiles import Bump, Constant, Step, TanhStep, tail_bounds

ZERO = Constant(0.0)
STEP = Step(1.0, 2.0, 0.0)


@pytest.fixture(scope="module")
def step_sweep():
    return sweep(STEP, ZERO, np.linspace(-40, 40, 41), 2)


def test_landau_flat():
    s = sweep(Constant(1.0), ZERO, [-5.0, 0.0, 5.0], 3)
    assert s.bands.shape == (3, 3)
    assert np.allclose(s.bands, np.array([[1.0], [3.0], [5.0]]), atol=5e-4)
    assert np.all(np.ptp(s.bands, axis=1) < 1e-8)


def test_step_band_goes_from_two_to_one(step_sweep):
    b1 = step_sweep.band(1)
    assert b1[0] == pytest.approx(2.0, abs=1e-3)
    assert b1[-1] == pytest.approx(1.0, abs=1e-3)
    assert np.all(np.diff(b1) <= 1e-9)
    assert np.all(np.diff(step_sweep.bands, axis=0) > 0)


def test_negative_bump_band():
    s = sweep(Bump(1.0, -3.0, -1.0, 1.0, 1), ZERO, np.linspace(-30, 30, 31), 1)
    assert np.all(np.isfinite(s.bands))
    assert s.band(1)[0] == pytest.approx(1.0, abs=1e-3)
    assert s.band(1)[-1] == pytest.approx(1.0, abs=1e-3)


def test_tail_check_step(step_sweep):
    rep = tail_check(step_sweep, tail_bounds(STEP, ZERO))
    first = [e for e in rep if e.band == 1 and e.end == "xi_min"][0]
    assert first.tail_side == "plus" and first.interval == (2.0, 2.0) and first.ok
    assert all(e.ok for e in rep)


def test_tail_check_with_electric_step():
    w = Step(0.5, 0.0, 0.0)
    s = sweep(STEP, w, [-40.0, 40.0], 1)
    rep = tail_check(s, tail_bounds(STEP, w))
    last = [e for e in rep if e.end == "xi_max"][0]
    assert last.interval == pytest.approx((1.5, 1.5)) and last.ok


def test_tail_check_landau():
    s = sweep(Constant(1.0), ZERO, [-10.0, 10.0], 3)
    rep = tail_check(s, tail_bounds(Constant(1.0), ZERO))
    assert len(rep) == 6 and all(e.ok for e in rep)


def test_tail_check_marks_short_sweeps():
    s = sweep(STEP, ZERO, [-5.0, 5.0], 1)
    rep = tail_check(s, tail_bounds(STEP, ZERO), xi_tail=40.0)
    assert all(e.ok is None and "does not reach" in e.note for e in rep)


def test_nonconstancy(step_sweep):
    v = nonconstancy_check(step_sweep, tail_bounds(STEP, ZERO))
    assert v[0].by_tail_intervals and v[0].nonconstant
    s = sweep(Constant(1.0), ZERO, [-5.0, 0.0, 5.0], 2)
    v = nonconstancy_check(s, tail_bounds(Constant(1.0), ZERO))
    assert v[0].by_tail_intervals is False and not v[0].by_oscillation and not v[0].nonconstant


def test_nonconstancy_by_divergence():
    b = TanhStep(-1.0, 1.0, 0.0, 0.5)
    s = sweep(b, ZERO, np.linspace(0, 30, 7), 2)
    t = tail_bounds(b, ZERO)
    v = nonconstancy_check(s, t)
    assert v[0].by_tail_intervals is None
    assert v[0].by_divergence and v[0].nonconstant
    rep = tail_check(s, t)
    assert all(e.ok is None for e in rep)


def test_sweep_errors():
    with pytest.raises(ValueError):
        sweep(STEP, ZERO, [], 1)
    with pytest.raises(ValueError):
        sweep(STEP, ZERO, [1.0, 0.0], 1)
    with pytest.raises(NonConfiningError):
        sweep(Step(0.0, 1.0, 0.0), ZERO, [0.0], 1)


def test_collision_is_reported():
    # deep symmetric double well: the two lowest levels are degenerate to round-off
    b = TanhStep(-1.0, 1.0, 0.0, 0.5)
    with pytest.raises(EigenvalueCollisionError, match="xi="):
        sweep(b, ZERO, [-30.0], 2)


def test_gauge_rebase_covariance(step_sweep):
    g = GaugeFunction(STEP)
    shift = g(3.0)
    s2 = sweep(STEP, ZERO, step_sweep.xi_grid + shift, 2, gauge=rebase_gauge(g, 3.0))
    assert np.max(np.abs(s2.bands - step_sweep.bands)) < 1e-8


@pytest.mark.parametrize("c", [-0.7, 2.5])
def test_constant_w_shift(c):
    xi = np.linspace(-10, 10, 5)
    a = sweep(STEP, ZERO, xi, 2)
    b = sweep(STEP, Constant(c), xi, 2)
    assert np.max(np.abs(b.bands - a.bands - c)) < 1e-10 * 50


def test_lipschitz_bound(step_sweep):
    d = diagnose(step_sweep)
    g = GaugeFunction(STEP)
    delta = float(step_sweep.xi_grid[1] - step_sweep.xi_grid[0])
    bound = 0.0
    for meta in step_sweep.solver_meta:
        xs = np.linspace(meta["left"], meta["right"], 2001)
        bound = max(bound, 2 * np.max(np.abs(meta["xi"] + g(xs))))
    assert d.lipschitz_max <= bound + delta
    assert d.min_gap > 0


def test_parallel_sweep_matches_serial():
    xi = np.linspace(-20, 20, 6)
    a = sweep(STEP, ZERO, xi, 2)
    b = sweep(STEP, ZERO, xi, 2, SolverOptions(workers=2))
    assert np.array_equal(a.bands, b.bands)


def test_k_eps_witness_step():
    k = k_eps_witness(STEP, ZERO, tail_bounds(STEP, ZERO), 0.1)
    assert 0 < k < 0.01


def _envelope_oracle(t, eps, K, x_xi, xs):
    """Direct formulas for the plus-side envelopes, written out independently."""
    bmin, bmax = min(t.b_under_plus, t.b_under_minus), max(t.b_over_plus, t.b_over_minus)
    lo_in, hi_in = t.b_under_plus - 2 * eps, t.b_over_plus + 2 * eps
    under = np.where(xs >= -K, (lo_in * (xs - x_xi)) ** 2,
                     ((bmin - eps) * (xs + K) + lo_in * (-K - x_xi)) ** 2) + t.w_under_plus - eps
    over = np.where(xs >= -K, (hi_in * (xs - x_xi)) ** 2,
                    ((bmax + eps) * (xs + K) + hi_in * (-K - x_xi)) ** 2) + t.w_over_plus + eps
    return under, over


@pytest.mark.parametrize("xi", [-40.0, -0.5])
def test_sandwich_step_agrees_with_oracle(xi):
    r = sandwich_check(STEP, ZERO, xi, 0.1, 2)
    t = tail_bounds(STEP, ZERO)
    xs = r.grid.nodes()
    g = GaugeFunction(STEP)
    under, over = _envelope_oracle(t, 0.1, r.K_eps, r.x_xi, xs)
    v = (xi + g(xs)) ** 2
    assert r.pointwise_ok == bool(np.all((under <= v) & (v <= over)))
    assert r.ok
    assert np.all(r.eig_under <= r.eig + 1e-9) and np.all(r.eig <= r.eig_over + 1e-9)


def test_sandwich_far_tail_values():
    r = sandwich_check(STEP, ZERO, -40.0, 0.1, 2)
    assert r.ok and r.side == "plus"
    assert r.eig == pytest.approx([2.0, 6.0], abs=1e-3)
    for (lo, hi), e in zip(r.limit_interval, r.eig):
        assert lo <= e <= hi


def test_sandwich_false_before_the_tail():
    r = sandwich_check(TanhStep(1.0, 2.0, 0.0, 1.0), ZERO, -3.0, 0.1, 2)
    assert not r.ok and not r.pointwise_ok
    assert r.violating_node is not None


def test_sandwich_landau():
    r = sandwich_check(Constant(1.0), ZERO, -10.0, 0.1, 2)
    assert r.ok and r.x_xi == pytest.approx(10.0)


def test_sandwich_preconditions():
    r = sandwich_check(STEP, ZERO, -0.5, 0.1, 1, K_eps=5.0)
    assert not r.ok and "not beyond" in r.reason
    r = sandwich_check(TanhStep(-1.0, 1.0, 0.0, 1.0), ZERO, -5.0, 0.1, 1)
    assert not r.ok and "positive field" in r.reason
    with pytest.raises(ValueError):
        sandwich_check(STEP, ZERO, -40.0, 0.6, 1)


def test_export(tmp_path):
    s = sweep(Constant(1.0), ZERO, [-2.0, 0.0, 2.0], 3)
    d = diagnose(s)
    csv_path, meta_path = export_sweep(s, d, tmp_path / "out")
    lines = open(csv_path).read().splitlines()
    assert lines[0] == "xi,lambda_1,lambda_2,lambda_3"
    assert float(lines[1].split(",")[1]) == s.bands[0, 0]
    meta = json.load(open(meta_path))
    assert meta["side_convention"] == SIDE_CONVENTION
    assert "tail_report" in meta["diagnostics"]
    assert meta["ac_decision"]["verdict"] is False
    assert len(meta["per_xi"]) == 3


def test_export_is_deterministic(tmp_path):
    s = sweep(STEP, ZERO, [-5.0, 5.0], 2)
    export_sweep(s, diagnose(s), tmp_path / "a")
    s2 = sweep(STEP, ZERO, [-5.0, 5.0], 2)
    export_sweep(s2, diagnose(s2), tmp_path / "b")
    for name in ("bands.csv", "meta.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_diagnostics_to_dict_single_band():
    s = sweep(STEP, ZERO, [-5.0, 5.0], 1)
    d = diagnose(s).to_dict()
    assert d["min_gap"] is None and math.isfinite(d["lipschitz_max"])
