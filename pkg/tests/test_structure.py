import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from symbeltrami import chartcalc as cc
from symbeltrami import structure as sc
from symbeltrami.catalog import HOPF_FIELD, catalog_get
from symbeltrami.chartcalc import FDConfig, FlatTorus3, PointField, RoundSphere3
from symbeltrami.errors import PreconditionError, SeedRejected
from symbeltrami.scalar_eigen import beltrami_from_scalar, hopf_golden_pair

TORUS = FlatTorus3()
TWO_PI = 2 * np.pi
E3 = np.array([0.0, 0.0, 1.0])


@pytest.fixture(scope="module")
def scan(golden_first_integral):
    return sc.critical_scan(golden_first_integral.f, 64)


@pytest.fixture(scope="module")
def sphere_pair():
    res = beltrami_from_scalar(catalog_get("s3_hopf"), hopf_golden_pair())
    fi = sc.first_integral_of_pair(RoundSphere3("north"), res.X, res.Y, res.mu)
    return res, fi


# ---------------------------------------------------------------------------
# first integral


def test_golden_first_integral_is_minus_cosine(golden_first_integral):
    p = np.random.default_rng(0).uniform(0, 1, size=(100, 3))
    assert np.allclose(golden_first_integral.f(p), -np.cos(TWO_PI * p[:, 0]), atol=1e-13)
    assert golden_first_integral.gradient_residual() < 1e-9


def test_sphere_first_integral_is_minus_scalar(sphere_pair):
    res, fi = sphere_pair
    p = np.random.default_rng(1).uniform(-1, 1, size=(100, 3))
    for chart in ("north", "south"):
        m = RoundSphere3(chart)
        assert np.allclose(cc.evaluate(m, fi.f, p), -cc.evaluate(m, res.source.f, p), atol=1e-13)
    r = [fi.gradient_residual(p, FDConfig(h=h)) for h in (1e-3, 5e-4)]
    assert r[0] < 1e-5
    assert 3.5 < r[0] / r[1] < 4.5


def test_collinear_pair_gives_constant_first_integral():
    m = RoundSphere3("north")
    fi = sc.first_integral_of_pair(m, HOPF_FIELD, HOPF_FIELD, 2.0)
    p = np.random.default_rng(2).uniform(-1, 1, size=(50, 3))
    assert np.allclose(cc.evaluate(m, fi.f, p), 0.5, atol=1e-13)
    assert np.max(np.abs(cc.grad(m, fi.f, p))) < 1e-8


def test_first_integral_rejects_zero_eigenvalue(golden):
    with pytest.raises(PreconditionError):
        sc.first_integral_of_pair(TORUS, golden.X, E3, 0.0)


def test_pointwise_residual_needs_points():
    fi = sc.first_integral_of_pair(RoundSphere3("north"), HOPF_FIELD, HOPF_FIELD, 2.0)
    with pytest.raises(ValueError):
        fi.gradient_residual()


# ---------------------------------------------------------------------------
# critical scan


def test_torus_grid_layout():
    g = sc.make_grid(TORUS, 4)
    assert g.points.shape == (1, 4, 4, 4, 3)
    assert g.periodic and g.spacing == 0.25
    assert np.allclose(g.points[0, 1, 2, 3], [0.25, 0.5, 0.75])
    with pytest.raises(ValueError):
        sc.make_grid(TORUS, 1)


def test_sphere_grid_covers_both_balls():
    g = sc.make_grid(RoundSphere3("north"), 5)
    assert g.charts == ("north", "south")
    assert not g.periodic
    assert np.all(np.linalg.norm(g.points[g.valid], axis=-1) <= 1 + 1e-12)
    assert np.count_nonzero(g.valid[0]) == np.count_nonzero(g.valid[1])


def test_cosine_scan(scan):
    assert len(scan.critical_values) == 2
    assert np.allclose(scan.critical_values, [-1.0, 1.0], atol=1e-6)
    th = scan.thresholds
    assert th.eps_grad == pytest.approx(1e-3 * TWO_PI, rel=1e-12)
    assert th.delta_level == pytest.approx(2e-3, rel=1e-12)
    assert th.delta_cluster == pytest.approx(2e-2, rel=1e-12)
    # the singular set is the two slabs x = 0 and x = 1/2
    xs = np.unique(scan.grid.points[0][scan.gamma_mask[0]][:, 0])
    assert xs.tolist() == [0.0, 0.5]
    assert scan.gamma_count == 2 * 64 * 64
    assert not scan.degenerate


def test_constant_scan_is_degenerate():
    const = PointField.constant(0.5)
    with pytest.warns(RuntimeWarning, match="collinear"):
        s = sc.critical_scan(const, 8)
    assert s.degenerate
    assert s.gamma_count == 8**3
    assert sc.StructureReport(s).to_dict()["status"] == "DegenerateCollinear"


def test_sphere_scan(sphere_pair):
    _, fi = sphere_pair
    s = sc.critical_scan(fi.f, 33, model=RoundSphere3("north"))
    assert np.allclose(s.critical_values, [-0.5, 0.5], atol=1e-6)
    assert np.allclose(s.f_range, (-0.5, 0.5), atol=1e-12)


def test_scan_without_critical_points_is_legal():
    # a small sample grid of a slowly varying function sees no near-critical cell
    f = PointField(lambda p: np.sin(TWO_PI * p[..., 0]), rank=0)
    s = sc.critical_scan(f, 6, eps_grad=1e-6)
    assert s.critical_values == ()
    assert s.gamma_count == 0


def test_gamma_mask_shrinks_with_thresholds(golden_first_integral):
    counts = []
    for rel in (0.1, 0.05, 0.025):
        s = sc.critical_scan(
            golden_first_integral.f, 32, eps_grad=rel * TWO_PI, delta_level=rel * 2, delta_cluster=0.02
        )
        counts.append(s.gamma_count)
    assert counts[0] > counts[1] > counts[2]


# ---------------------------------------------------------------------------
# level components


def test_two_components_at_zero(scan, golden, golden_first_integral):
    comps = sc.level_components(scan, golden_first_integral.f, golden.X, E3, 0.0)
    assert len(comps) == 2
    xs = sorted(float(c.seed[0]) for c in comps)
    assert np.allclose(xs, [0.25, 0.75])
    for c in comps:
        assert c.min_cross == pytest.approx(TWO_PI, rel=1e-12)
        assert c.drift < 1e-8
        assert c.f_variation < scan.thresholds.delta_level


@pytest.mark.parametrize("c", [-0.6, 0.3, 0.9])
def test_two_components_per_regular_value(scan, golden, golden_first_integral, c):
    comps = sc.level_components(scan, golden_first_integral.f, golden.X, E3, c, n_drift=1, arc=10.0)
    assert len(comps) == 2
    assert all(r.min_cross > 0 and r.drift < 1e-7 for r in comps)


def test_thin_component_near_critical_value(scan, golden, golden_first_integral):
    c = 1 - 1e-4
    comps = sc.level_components(scan, golden_first_integral.f, golden.X, E3, c, n_drift=1, arc=10.0)
    assert len(comps) >= 1
    assert all(r.min_cross > 0 for r in comps)
    # |X x e3| = 2pi |sin 2pi x| with cos 2pi x = -c
    expect = TWO_PI * np.sqrt(1 - c * c)
    assert comps[0].min_cross == pytest.approx(expect, rel=1e-6)


def test_component_from_seed(scan, golden, golden_first_integral):
    rec = sc.level_component(scan, golden_first_integral.f, golden.X, E3, 0.0, [0.75, 0.3, 0.9], n_drift=2, arc=10.0)
    assert rec.n_cells == 2 * 64 * 64  # the level slab and its sign-change neighbour
    assert np.allclose(rec.samples[:, 0], 0.75, atol=1e-12)
    other = sc.level_component(scan, golden_first_integral.f, golden.X, E3, 0.0, [0.25, 0.0, 0.0], n_drift=1, arc=10.0)
    assert other.label != rec.label


def test_seed_rejections(scan, golden, golden_first_integral):
    f = golden_first_integral.f
    with pytest.raises(SeedRejected, match="not on the level"):
        sc.level_component(scan, f, golden.X, E3, 0.0, [0.1, 0, 0])
    with pytest.raises(SeedRejected, match="critical"):
        sc.level_component(scan, f, golden.X, E3, -1.0, [0.0, 0.3, 0.3])


def test_sphere_components_are_not_supported(sphere_pair):
    res, fi = sphere_pair
    s = sc.critical_scan(fi.f, 9, model=RoundSphere3("north"))
    with pytest.raises(PreconditionError):
        sc.level_components(s, fi.f, res.X, res.Y, 0.0)


def test_periodic_label_merges_across_faces():
    shell = np.zeros((6, 6, 6), dtype=bool)
    shell[0, 2, 2] = shell[5, 2, 2] = True  # touching across the x face
    shell[3, 0, 0] = shell[3, 5, 5] = True  # diagonal across a corner: not 6-connected
    lab, n = sc._periodic_label(shell)
    assert n == 3
    assert lab[0, 2, 2] == lab[5, 2, 2]
    assert lab[3, 0, 0] != lab[3, 5, 5]


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 5), st.integers(0, 2))
def test_full_slab_is_one_component(i, axis):
    shell = np.zeros((6, 6, 6), dtype=bool)
    idx = [slice(None)] * 3
    idx[axis] = i
    shell[tuple(idx)] = True
    lab, n = sc._periodic_label(shell)
    assert n == 1
    assert np.count_nonzero(lab) == 36


# ---------------------------------------------------------------------------
# chamber fibration


def test_chamber_linearity(golden_first_integral):
    rec = sc.chamber_fibration(TORUS, golden_first_integral.f, [0.25, 0.2, 0.7], t_span=(-0.1, 0.1))
    assert rec.linearity_residual < 1e-6
    assert rec.truncated == (False, False)
    assert rec.t_reached == pytest.approx((-0.1, 0.1))
    # the flow moves in x only
    assert np.allclose(rec.transported[0, :, 1:], [0.2, 0.7], atol=1e-14)
    x = rec.transported[0, :, 0]
    assert np.allclose(-np.cos(TWO_PI * x), rec.t_eval, atol=1e-9)


def test_chamber_ring_stays_on_one_level(golden_first_integral):
    a = np.linspace(0, TWO_PI, 10, endpoint=False)
    ring = np.stack([np.full(10, 0.25), 0.5 + 0.3 * np.cos(a), 0.5 + 0.3 * np.sin(a)], axis=1)
    rec = sc.chamber_fibration(TORUS, golden_first_integral.f, ring)
    assert rec.ring_spread < 1e-6
    assert rec.linearity_residual < 1e-6


def test_chamber_growth_stops_at_critical_slabs(golden_first_integral):
    eps = 1e-3 * TWO_PI
    rec = sc.chamber_fibration(TORUS, golden_first_integral.f, [0.25, 0.0, 0.0], t_span=(-5.0, 5.0), eps_grad=eps)
    assert rec.truncated == (True, True)
    assert rec.end_values[0] == pytest.approx(-1.0, abs=1e-2)
    assert rec.end_values[1] == pytest.approx(1.0, abs=1e-2)
    xs = rec.transported[0, [0, -1], 0]
    assert np.allclose(xs, [0.0, 0.5], atol=1e-3)


def test_chamber_rejects_bad_inputs(golden_first_integral):
    f = golden_first_integral.f
    with pytest.raises(ValueError):
        sc.chamber_fibration(TORUS, f, [0.25, 0, 0], t_span=(0.1, 0.2))
    with pytest.raises(SeedRejected):
        sc.chamber_fibration(TORUS, f, [0.0, 0, 0], eps_grad=1e-3)


# ---------------------------------------------------------------------------
# serialisation


def test_gamma_mask_round_trip(scan, tmp_path):
    path = tmp_path / "gamma.bin"
    sc.write_gamma_mask(scan, path, extra={"grid_n": 64})
    header, mask = sc.read_gamma_mask(path)
    assert header["shape"] == [1, 64, 64, 64]
    assert header["critical_values"] == list(scan.critical_values)
    assert header["grid_n"] == 64
    assert np.array_equal(mask, scan.gamma_mask)


def test_report_and_csv_rows(scan, golden, golden_first_integral):
    comps = sc.level_components(scan, golden_first_integral.f, golden.X, E3, 0.0, n_drift=1, arc=10.0)
    rec = sc.chamber_fibration(TORUS, golden_first_integral.f, [0.25, 0.2, 0.7])
    report = sc.StructureReport(scan, tuple(comps), (rec,), golden_first_integral.gradient_residual())
    d = json.loads(json.dumps(report.to_dict()))
    assert d["schema"] == sc.SCHEMA and d["status"] == "ok"
    assert d["critical_values"] == [-1.0, 1.0]
    assert d["total_cells"] == 64**3
    assert len(d["components"]) == 2 and len(d["chambers"]) == 1
    header, rows = sc.components_csv_rows(comps)
    assert len(rows) == 2 and all(len(r) == len(header) for r in rows)


def test_scan_is_quiet_for_regular_data(golden_first_integral):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        sc.critical_scan(golden_first_integral.f, 16)
