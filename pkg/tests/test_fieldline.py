import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import RK45

from symbeltrami import fieldline as fl
from symbeltrami.catalog import HOPF_FIELD, HOPF_INVARIANT, hopf_ambient
from symbeltrami.chartcalc import FlatTorus3, PointField, RoundSphere3
from symbeltrami.errors import StalledAtZero

TORUS = FlatTorus3()
NORTH = RoundSphere3("north")
TWO_PI = 2 * np.pi


def minus_cos(p):
    return -np.cos(TWO_PI * np.asarray(p)[..., 0])


FIRST_INTEGRAL = PointField(minus_cos, rank=0)


def test_tableau_matches_reference_implementation():
    assert np.allclose(fl.DP_C, RK45.C, rtol=0, atol=1e-16)
    for i, row in enumerate(fl.DP_A):
        assert np.allclose(row, RK45.A[i, :i], rtol=1e-15, atol=0)
    assert np.allclose(fl.DP_B, RK45.B, rtol=1e-15)
    assert np.allclose(fl.DP_E, RK45.E, rtol=1e-15)
    assert np.allclose(fl.DP_P, RK45.P, rtol=1e-15)
    # consistency and order conditions
    assert math.isclose(np.sum(fl.DP_B), 1.0)
    assert math.isclose(fl.DP_B @ fl.DP_C, 0.5)
    assert math.isclose(fl.DP_B @ fl.DP_C**4, 0.2)
    assert abs(np.sum(fl.DP_E)) < 1e-16


def test_dense_output_matches_reference_integrator():
    def f(t, y):
        return np.array([-y[1], y[0], 0.3 * y[2]])

    ref = RK45(f, 0.0, np.array([1.0, 0.0, 1.0]), 10.0, rtol=1e-3, atol=1e-3, first_step=0.05)
    ref.step()
    h = ref.step_size
    st = fl.DormandPrince(TORUS, lambda p: f(0, p[0])[None, :], [1.0, 0.0, 1.0], tol=1.0, max_step=h, h0=h)
    step = st.step(10.0)
    assert step.h == h
    assert np.allclose(step.y1[:3], ref.y, rtol=0, atol=1e-15)
    dense = ref.dense_output()
    for theta in (0.1, 0.5, 0.9):
        assert np.allclose(fl.dense_state(step, theta)[:3], dense(theta * step.h), atol=1e-15)


def test_translation_flow():
    X = PointField.constant([0.0, 0.0, 1.0])
    tr = fl.integrate(TORUS, X, [0, 0, 0], 2.5)
    assert np.allclose(tr.end, [0, 0, 0.5], atol=1e-14)
    assert tr.windings[-1].tolist() == [0, 0, 2]
    assert tr.arc[-1] == pytest.approx(2.5)
    assert np.all(tr.points >= 0) and np.all(tr.points < 1)


def test_golden_flow_keeps_x_and_has_constant_speed(golden):
    tr = fl.integrate(TORUS, golden.X, [0.3, 0.1, 0.7], 5.0)
    assert np.max(np.abs(tr.unwrapped[:, 0] - 0.3)) < 1e-12
    assert fl.first_integral_drift(tr, FIRST_INTEGRAL) < 1e-12
    assert tr.arc[-1] == pytest.approx(TWO_PI * 5.0, rel=1e-12)
    arc = fl.integrate(TORUS, golden.X, [0.3, 0.1, 0.7], 3.0, arc_length=True)
    assert arc.t[-1] == pytest.approx(3.0)
    assert arc.arc[-1] == pytest.approx(3.0, rel=1e-12)


def exact_hopf_orbit(x0, t):
    return np.cos(t)[:, None] * x0 + np.sin(t)[:, None] * hopf_ambient(x0)


def test_hopf_orbits_are_unit_speed_great_circles():
    x0 = np.array([0.6, 0.0, 0.8, 0.0])
    tr = fl.integrate(NORTH, HOPF_FIELD, NORTH.from_ambient(x0), TWO_PI)
    amb = tr.ambient()
    assert np.max(np.abs(amb - exact_hopf_orbit(x0, tr.t))) < 1e-9
    assert np.linalg.norm(amb[-1] - x0) < 1e-9
    assert tr.arc[-1] == pytest.approx(TWO_PI, rel=1e-9)
    assert fl.first_integral_drift(tr, HOPF_INVARIANT) < 1e-9


def test_sphere_chart_switching():
    # this orbit passes the north pole, where the north chart blows up
    x0 = np.array([0.0, 0.0, 1.0, 0.0])
    tr = fl.integrate(NORTH, HOPF_FIELD, NORTH.from_ambient(x0), TWO_PI)
    assert "south" in tr.charts
    assert np.max(np.linalg.norm(tr.points, axis=1)) <= 2.0 + 0.5
    assert np.max(np.abs(tr.ambient() - exact_hopf_orbit(x0, tr.t))) < 1e-9


def test_tighter_tolerance_reduces_error():
    x0 = np.array([0.6, 0.0, 0.8, 0.0])
    errs = []
    for tol in (1e-6, 1e-8, 1e-10):
        tr = fl.integrate(NORTH, HOPF_FIELD, NORTH.from_ambient(x0), 20.0, tol=tol, max_step=1.0)
        errs.append(np.max(np.abs(tr.ambient() - exact_hopf_orbit(x0, tr.t))))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-8


def test_zero_field_stalls():
    with pytest.raises(StalledAtZero) as err:
        fl.integrate(TORUS, PointField.constant([0.0, 0.0, 0.0]), [0.1, 0.2, 0.3], 1.0)
    assert np.allclose(err.value.location, [0.1, 0.2, 0.3])
    assert err.value.t == 0.0


def test_stall_at_zero_reached_along_the_way():
    # the line approaches the zero at x = 0.5 exponentially until the speed drops below the stall threshold
    X = PointField(lambda p: np.stack([0.5 - p[..., 0], 0 * p[..., 0], 0 * p[..., 0]], axis=-1) * 1e-6)
    with pytest.raises(StalledAtZero):
        fl.integrate(TORUS, X, [0.4999999, 0.0, 0.0], 1e8, max_step=1e6)


def test_invalid_arguments():
    with pytest.raises(ValueError):
        fl.integrate(TORUS, PointField.constant([1.0, 0, 0]), [0, 0, 0], 0.0)
    with pytest.raises(ValueError):
        fl.DormandPrince(TORUS, PointField.constant([1.0, 0, 0]), [0, 0, 0], tol=0.0)


# ---------------------------------------------------------------------------
# Poincare sections


def test_section_parsing():
    s = fl.Section.parse("z=0")
    assert (s.axis, s.value, s.direction) == (2, 0.0, 0)
    assert fl.Section.parse("x4 = 0.5", direction=1).label() == "x4=0.5"
    for bad in ("w=0", "z", "z="):
        with pytest.raises(ValueError):
            fl.Section.parse(bad)
    with pytest.raises(ValueError):
        fl.Section(0, 0.0, 2)


def test_golden_poincare_section(golden):
    seeds = [[0.125, 0.0, 0.3], [0.4, 0.6, 0.2]]
    recs = fl.poincare(TORUS, golden.X, "z=0", seeds, 50, f=FIRST_INTEGRAL)
    for rec, seed in zip(recs, seeds):
        assert len(rec.points) == 50
        assert np.max(np.abs(rec.points[:, 2] - np.round(rec.points[:, 2]))) < 1e-12
        assert np.max(np.abs(rec.points[:, 0] - seed[0])) < 1e-12
        assert rec.f_spread < 1e-12
        vz = -TWO_PI * np.cos(TWO_PI * seed[0])
        assert np.all(rec.directions == np.sign(vz))
        assert np.allclose(np.diff(rec.times), 1 / abs(vz), rtol=1e-9)


def test_poincare_direction_filter_and_transversality(golden):
    rec = fl.poincare(TORUS, golden.X, fl.Section(2, 0.0, +1), [[0.125, 0, 0.5]], 5, t_max=20.0)[0]
    # z decreases for this seed, so no crossing passes the +1 filter
    assert len(rec.points) == 0
    rec = fl.poincare(TORUS, golden.X, "z=0", [[0.2, 0, 0.5]], 5, t_max=20.0, transversal_min=5.0)[0]
    assert len(rec.points) == 0 and rec.skipped_nontransversal > 0


def test_sphere_poincare_section():
    x0 = np.array([0.6, 0.0, 0.8, 0.0])
    rec = fl.poincare(NORTH, HOPF_FIELD, "x4=0", [NORTH.from_ambient(x0)], 10, f=HOPF_INVARIANT)[0]
    assert len(rec.points) == 10
    amb = np.array([RoundSphere3(c).to_ambient(p) for c, p in zip(rec.charts, rec.points)])
    assert np.max(np.abs(amb[:, 3])) < 1e-10
    assert rec.f_spread < 1e-9
    assert np.allclose(np.diff(rec.times), np.pi, rtol=1e-8)


# ---------------------------------------------------------------------------
# rotation numbers


def test_continued_fractions():
    assert fl.continued_fraction(math.sqrt(2), 6) == [1, 2, 2, 2, 2, 2]
    assert fl.continued_fraction(0.75) == [0, 1, 3]
    assert fl.convergents([1, 2, 2, 2]) == [Fraction(1), Fraction(3, 2), Fraction(7, 5), Fraction(17, 12)]


def test_closed_orbit_verdict(golden):
    tr = fl.integrate_windings(TORUS, golden.X, [0.125, 0.0, 0.0], 200)
    est = fl.rotation_number(tr)
    assert est.verdict == fl.CLOSED
    assert est.rational == Fraction(1, 1)
    assert est.axes == (1, 2)
    assert est.to_dict()["rational"] == "1/1"


def test_too_few_windings_is_undetermined(golden):
    tr = fl.integrate(TORUS, golden.X, [0.125, 0.0, 0.0], 0.5)
    assert fl.rotation_number(tr).verdict == fl.UNDETERMINED
    sphere = fl.integrate(NORTH, HOPF_FIELD, [0.1, 0.2, 0.3], 1.0)
    assert fl.rotation_number(sphere).verdict == fl.UNDETERMINED


@pytest.mark.slow
def test_irrational_orbit_verdict(golden):
    x0 = math.atan(math.sqrt(2)) / TWO_PI
    tr = fl.integrate_windings(TORUS, golden.X, [x0, 0.0, 0.0], 30000)
    est = fl.rotation_number(tr)
    assert est.verdict == fl.IRRATIONAL
    assert abs(abs(est.ratio) - math.sqrt(2)) < 1e-3
    assert est.stable_convergents >= 3


@settings(max_examples=8, deadline=None)
@given(st.sampled_from([0.125, 0.0, 1 / 3, math.atan(2.0) / TWO_PI]), st.floats(0.5, 4.0))
def test_rotation_verdict_is_invariant_under_time_rescaling(golden, x0, s):
    a = fl.rotation_number(fl.integrate_windings(TORUS, golden.X, [x0, 0.0, 0.0], 300))
    b = fl.rotation_number(fl.integrate_windings(TORUS, golden.X * s, [x0, 0.0, 0.0], 300))
    assert a.verdict == b.verdict
    assert a.rational == b.rational
    if np.isfinite(a.ratio):
        assert b.ratio == pytest.approx(a.ratio, rel=1e-8)
