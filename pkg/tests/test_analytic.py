import math

import pytest

from hmcf import analytic

LN_COSH_1 = 0.4337808304830271


def test_sphere_radius_endpoints():
    assert analytic.sphere_radius(1.0, 0.0) == 1.0
    assert analytic.extinction_time(1.0) == pytest.approx(LN_COSH_1, rel=1e-15)
    assert analytic.sphere_radius(1.0, LN_COSH_1 - 1e-12) < 1e-5
    assert analytic.sphere_radius(1.0, 0.3) == pytest.approx(0.52887038988199, rel=1e-13)


def test_sphere_radius_after_extinction_raises():
    with pytest.raises(analytic.ExtinctError, match="extinct"):
        analytic.sphere_radius(1.0, LN_COSH_1)
    with pytest.raises(ValueError):
        analytic.SphereFlow(0.0)


def test_sphere_radius_solves_the_ode():
    h = 1e-6
    r = analytic.sphere_radius(1.0, 0.1)
    fd = (analytic.sphere_radius(1.0, 0.1 + h) - analytic.sphere_radius(1.0, 0.1 - h)) / (2 * h)
    assert fd == pytest.approx(-1.0 / math.tanh(r), abs=1e-6)


def test_sphere_closed_forms():
    assert (analytic.sphere_area(0.0), analytic.sphere_volume(0.0)) == (0.0, 0.0)
    assert analytic.sphere_area(1.0) == pytest.approx(17.355387381771433, rel=1e-14)
    assert analytic.sphere_volume(1.0) == pytest.approx(5.1109327057082901, rel=1e-14)
    assert analytic.sphere_willmore_bar(2.7) == 4 * math.pi
    h = 1e-5
    fd = (analytic.sphere_volume(1 + h) - analytic.sphere_volume(1 - h)) / (2 * h)
    assert fd == pytest.approx(analytic.sphere_area(1.0), abs=1e-6)


@pytest.mark.parametrize("r", [0.5, 1.0, 2.0])
def test_profile_integral_reproduces_sphere_volume(r):
    v = analytic.iso_profile_integral(analytic.sphere_area(r), analytic.FOUR_PI)
    assert abs(v - analytic.sphere_volume(r)) < 1e-8


def test_profile_integral_basics():
    assert analytic.iso_profile_integral(0.0) == 0.0
    assert analytic.iso_profile_integral(10.0) == pytest.approx(2.4659382258292597, rel=1e-12)
    assert analytic.iso_profile_integral(5.0, 30.0) < analytic.iso_profile_integral(5.0, 20.0)
    vals = [analytic.iso_profile_integral(a) for a in (0.5, 1, 2, 4, 8)]
    assert vals == sorted(vals)


def test_profile_area_inverts_volume():
    assert analytic.iso_profile_area(0.0) == 0.0
    assert analytic.iso_profile_area(analytic.sphere_volume(1.0)) == pytest.approx(analytic.sphere_area(1.0), abs=1e-7)
    grid = [analytic.iso_profile_area(v) for v in (0.1, 0.5, 1, 3, 10)]
    assert grid == sorted(grid)


def test_radius_for_volume():
    assert analytic.sphere_radius_for_volume(1.0) == pytest.approx(0.6054030456066831, rel=1e-13)
    r = analytic.sphere_radius_for_volume(analytic.sphere_volume(2.5))
    assert r == pytest.approx(2.5, rel=1e-13)


def test_torus_deficit_constant():
    assert analytic.torus_deficit_constant(2 * math.pi ** 2) == pytest.approx(0.2192537527311087, rel=1e-10)
    assert analytic.torus_deficit_constant(4 * math.pi + 1e-9) == pytest.approx(0.0, abs=1e-9)
    assert analytic.torus_deficit_constant(30.0) > analytic.torus_deficit_constant(20.0)
    with pytest.raises(ValueError):
        analytic.torus_deficit_constant(4 * math.pi)
