import json
import math

import numpy as np
import pytest

from hmcf import analytic, certify, flow, shapes

K_M9 = 16 * math.pi ** 2 / 49


@pytest.fixture(scope="module")
def torus():
    return shapes.gen_drilled_torus(0.05, 8192)


@pytest.fixture(scope="module")
def ellipsoid():
    return shapes.gen_ellipsoidal(1.0, 1.5, resolution=2562)


def test_sphere_willmore_equality_case(sphere2562):
    c = certify.check_willmore_sphere_bound(sphere2562)
    assert c.verdict == "pass"
    assert abs(c.margin) < c.tolerance
    assert c.rhs == analytic.FOUR_PI


def test_torus_willmore_bounds(torus):
    c = certify.check_torus_willmore_bound(torus)
    assert c.verdict == "pass" and c.rhs == pytest.approx(2 * math.pi ** 2)
    s = certify.check_willmore_sphere_bound(torus)
    assert s.margin >= 2 * math.pi ** 2 - 4 * math.pi - s.tolerance
    wide = shapes.gen_drilled_torus(0.2, 4000)
    assert certify.check_torus_willmore_bound(wide).verdict == "pass"


def test_torus_checks_reject_spheres(sphere642):
    with pytest.raises(certify.CertifyError, match="not a torus"):
        certify.check_torus_willmore_bound(sphere642)
    with pytest.raises(certify.CertifyError, match="not a torus"):
        certify.check_torus_singularity(sphere642)


def test_isoperimetric_on_sphere_ellipsoid_and_dumbbell(sphere642, sphere2562, ellipsoid):
    coarse = certify.check_isoperimetric(sphere642)
    fine = certify.check_isoperimetric(sphere2562)
    assert fine.verdict == "pass" and abs(fine.margin) < 0.02 * fine.lhs
    assert abs(fine.margin) <= 0.5 * abs(coarse.margin)
    e = certify.check_isoperimetric(ellipsoid)
    assert e.verdict == "pass" and e.margin > 0
    db = certify.check_isoperimetric(shapes.gen_dumbbell(8.0, 0.1, 4000))
    assert db.verdict == "pass" and db.margin > 5.0


def test_torus_singularity_certificates(torus):
    thin = certify.check_torus_singularity(shapes.gen_drilled_torus(0.02, 8192))
    assert thin.verdict == "pass"
    c = certify.check_torus_singularity(torus)
    assert c.extra["deficit_constant"] == pytest.approx(0.2192537527311087, rel=1e-10)
    wide = certify.check_torus_singularity(shapes.gen_drilled_torus(0.45, 4000))
    assert wide.verdict in ("fail", "inconclusive")
    flat = certify.check_torus_singularity(torus, c0=analytic.FOUR_PI)
    assert flat.verdict != "pass" and "deficit_constant" not in flat.extra


def test_dumbbell_singularity_certificate():
    area0 = 2 * analytic.sphere_area(1.0) + 0.01 * 200
    c = certify.check_dumbbell_singularity(area0, 200.0)
    assert c.verdict == "pass"
    assert c.extra["t0"] == pytest.approx(49 * area0 ** 2 / (16 * math.pi ** 2 * 200 ** 2), rel=1e-14)
    assert c.extra["t0"] < c.extra["T0"] == pytest.approx(analytic.extinction_time(1.0))
    assert certify.check_dumbbell_singularity(1e3, 10.0).verdict == "fail"
    edge = math.sqrt(K_M9 * analytic.extinction_time(1.0)) * 10.0
    assert certify.check_dumbbell_singularity(edge, 10.0).verdict == "inconclusive"
    with pytest.raises(certify.CertifyError):
        certify.check_dumbbell_singularity(0.0, 10.0)


def test_dumbbell_singularity_uses_bell_radius():
    c = certify.check_dumbbell_singularity(40.0, 50.0, r_bell=2.0)
    assert c.extra["T0"] == pytest.approx(analytic.extinction_time(2.0))


def test_diameter_bound(sphere2562):
    c = certify.check_diameter_bound(sphere2562)
    assert c.lhs == pytest.approx(2.0, rel=0.02)
    assert c.rhs == pytest.approx(7 / (2 * math.pi) * math.sqrt(17.3555 * 29.93), rel=0.02)
    assert c.verdict == "pass"
    assert certify.check_diameter_bound(shapes.gen_dumbbell(8.0, 0.1, 4000)).verdict == "pass"


def test_local_monotonicity(sphere2562):
    c = certify.check_local_monotonicity(sphere2562, 0, 0.5)
    assert c.verdict == "pass" and c.lhs == math.pi
    big = certify.check_local_monotonicity(sphere2562, sphere2562.vertices[7], 50.0)
    assert big.verdict == "pass" and big.rhs >= 0.5 * big.extra["ball_area"]
    tiny = certify.check_local_monotonicity(sphere2562, 0, 0.01)
    assert tiny.verdict == "inconclusive" and tiny.extra["under_resolved"]
    with pytest.raises(certify.CertifyError):
        certify.check_local_monotonicity(sphere2562, np.array([1.0, 0, 0, 0]), 0.5)


def _pair_records(d_values, ts):
    rec = flow.DiagnosticsRecord(0, 0.0, 1, 1, 1, 1, 1, 1, 1, float("nan"), 0)
    d0 = d_values[0]
    return [flow.PairRecord(i, t, d, math.exp(t) * math.sinh(d / 2) - math.sinh(d0 / 2),
                            math.exp(t) * d - d0, rec, rec)
            for i, (t, d) in enumerate(zip(ts, d_values))]


def test_comparison_monitor():
    good = _pair_records([2.0, 1.95, 1.9], [0.0, 0.05, 0.1])
    assert certify.check_comparison_monitor(good, 0.3).verdict == "pass"
    assert certify.check_comparison_monitor(good, 0.3, weak=True).verdict == "pass"
    touching = _pair_records([0.0, 0.0], [0.0, 0.1])
    assert certify.check_comparison_monitor(touching, 0.3).verdict == "pass"
    bad = _pair_records([2.0, 1.0], [0.0, 0.01])
    assert certify.check_comparison_monitor(bad, 0.3).verdict == "fail"
    with pytest.raises(certify.CertifyError):
        certify.check_comparison_monitor([], 0.3)


def test_conformal_invariance(sphere2562, ellipsoid, torus):
    for mesh in (sphere2562, ellipsoid):
        assert certify.check_conformal_invariance(mesh).verdict == "pass"
    c = certify.check_conformal_invariance(torus, certify.TORUS_CONFORMAL_TOL)
    assert c.verdict == "pass"


def test_flagged_inputs_are_inconclusive():
    c = certify._inequality("x", 1.0, 0.0, ">=", 0.1, "d", flagged=3)
    assert c.verdict == "inconclusive" and c.extra["flaggedFaces"] == 3


def test_certificates_are_reproducible_and_serialize(sphere642):
    a = certify.run_mesh_checks(sphere642)
    b = certify.run_mesh_checks(sphere642)
    assert [x.to_json() for x in a] == [y.to_json() for y in b]
    names = {c.name for c in a}
    assert "torus_singularity" not in names and "diameter_bound" in names
    d = json.loads(a[0].to_json())
    assert {"name", "lhs", "rhs", "relation", "margin", "tolerance", "verdict", "inputs_digest"} <= set(d)
    with pytest.raises(certify.CertifyError):
        certify.run_mesh_checks(sphere642, "nonsense")
