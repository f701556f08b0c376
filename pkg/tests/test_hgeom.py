import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hmcf import hgeom

coord = st.floats(-3.0, 3.0, allow_nan=False)
point = st.tuples(coord, coord, coord).map(lambda c: hgeom.hpoint(*c))


# oracles ------------------------------------------------------------------

def test_inner_of_origin_and_unit_axis_point():
    q = hgeom.axis_point(1.0)
    assert hgeom.minkowski_inner(hgeom.ORIGIN, q) == pytest.approx(-1.5430806348152437, rel=1e-15)


def test_hdist_along_axis():
    p, q = hgeom.axis_point(-0.5), hgeom.axis_point(1.0)
    assert hgeom.hdist(p, q) == pytest.approx(1.5, abs=1e-14)


def test_hdist_frozen_generic_pair():
    p = hgeom.hpoint(0.3, -0.2, 0.5)
    q = hgeom.hpoint(-1.0, 0.4, 0.1)
    assert hgeom.hdist(p, q) == pytest.approx(1.3511988734103222, rel=1e-13)


def test_exp_map_of_unit_tangent_reaches_axis_point():
    v = np.array([0.0, 1.0, 0.0, 0.0])
    assert np.allclose(hgeom.exp_map(hgeom.ORIGIN, v), hgeom.axis_point(1.0), atol=1e-15)


def test_klein_and_poincare_radii_of_axis_points():
    assert hgeom.to_klein(hgeom.axis_point(1.0))[0] == pytest.approx(0.7615941559557649, rel=1e-15)
    assert hgeom.to_poincare(hgeom.axis_point(1.0))[0] == pytest.approx(0.46211715726000974, rel=1e-15)


def test_hdist_of_nearby_points_keeps_precision():
    p = hgeom.ORIGIN
    q = hgeom.exp_map(p, np.array([0.0, 1e-9, 0.0, 0.0]))
    assert hgeom.hdist(p, q) == pytest.approx(1e-9, rel=1e-6)


# errors and invariants ----------------------------------------------------

def test_from_klein_outside_ball_raises():
    with pytest.raises(hgeom.DomainError):
        hgeom.from_klein(np.array([1.0, 0.0, 0.0]))
    with pytest.raises(hgeom.DomainError):
        hgeom.from_poincare(np.array([0.0, 0.8, 0.7]))


def test_frame_is_orthonormal_and_tangent():
    p = hgeom.hpoint(0.7, -1.2, 0.4)
    E = hgeom.frame(p)
    G = hgeom.minkowski_inner(E[:, None, :], E[None, :, :])
    assert np.allclose(G, np.eye(3), atol=1e-12)
    assert np.allclose(hgeom.minkowski_inner(E, p), 0.0, atol=1e-12)


def test_distance_to_axis_geodesic():
    a, b = hgeom.axis_point(-1.0), hgeom.axis_point(2.0)
    x = hgeom.exp_map(hgeom.axis_point(0.5), np.array([0.0, 0.0, 0.7, 0.0]) @ hgeom.boost(hgeom.axis_point(0.5)).T)
    rho, s = hgeom.distance_to_geodesic(x, a, b)
    assert rho == pytest.approx(0.7, abs=1e-12)
    assert s == pytest.approx(1.5, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(point, point)
def test_exp_log_round_trip(p, q):
    v = hgeom.log_map(p, q)
    assert np.allclose(hgeom.exp_map(p, v), q, atol=1e-8 * max(1.0, q[0]))
    assert hgeom.tangent_norm(v) == pytest.approx(hgeom.hdist(p, q), rel=1e-9, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(point)
def test_chart_round_trips(p):
    assert np.allclose(hgeom.from_poincare(hgeom.to_poincare(p)), p, rtol=1e-9, atol=1e-9)
    if p[0] < 20:
        assert np.allclose(hgeom.from_klein(hgeom.to_klein(p)), p, rtol=1e-8, atol=1e-8)


@settings(max_examples=60, deadline=None)
@given(point, point, point)
def test_triangle_inequality_and_symmetry(p, q, r):
    pq, qr, pr = hgeom.hdist(p, q), hgeom.hdist(q, r), hgeom.hdist(p, r)
    assert pq == pytest.approx(hgeom.hdist(q, p), abs=1e-12)
    assert pr <= pq + qr + 1e-9


@settings(max_examples=40, deadline=None)
@given(point, point, st.floats(0, 2 * math.pi))
def test_isometries_preserve_distance(p, q, angle):
    M = hgeom.rotation(np.array([1.0, 2.0, -0.5]), angle) @ hgeom.boost(hgeom.hpoint(0.4, 0.1, -0.3))
    d = hgeom.hdist(p, q)
    assert hgeom.hdist(M @ p, M @ q) == pytest.approx(d, rel=1e-8, abs=1e-8)


def test_geodesic_midpoint_is_equidistant():
    p, q = hgeom.hpoint(0.3, 0.1, 0), hgeom.hpoint(-1, 2, 0.5)
    m = hgeom.geodesic_midpoint(p, q)
    assert hgeom.hdist(p, m) == pytest.approx(0.5 * hgeom.hdist(p, q), rel=1e-12)
    assert hgeom.hdist(q, m) == pytest.approx(0.5 * hgeom.hdist(p, q), rel=1e-12)
