"""Closed-form sphere flow and the isoperimetric profile.

Under mean curvature flow a geodesic sphere of radius ``r0`` stays a sphere
with ``cosh r(t) = exp(-t) cosh r0`` and vanishes at ``T = ln cosh r0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import integrate

C0_DEFAULT = 2.0 * math.pi ** 2
FOUR_PI = 4.0 * math.pi


class ExtinctError(ValueError):
    pass


@dataclass(frozen=True)
class SphereFlow:
    r0: float

    def __post_init__(self):
        if not self.r0 > 0:
            raise ValueError("r0 must be positive")

    @property
    def extinction_time(self):
        return extinction_time(self.r0)

    def radius(self, t):
        return sphere_radius(self.r0, t)


def extinction_time(r0):
    return math.log(math.cosh(r0))


def sphere_radius(r0, t):
    """Radius at time ``t`` of the flowing geodesic sphere that started at ``r0``."""
    T = extinction_time(r0)
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t >= T:
        raise ExtinctError(f"sphere of radius {r0} is extinct at t = {T:.6g}")
    return math.acosh(math.exp(-t) * math.cosh(r0))


def sphere_area(r):
    return FOUR_PI * math.sinh(r) ** 2


def sphere_volume(r):
    return math.pi * math.sinh(2.0 * r) - 2.0 * math.pi * r


def sphere_willmore_bar(r):
    return FOUR_PI


def sphere_radius_for_volume(v0):
    """Inverse of :func:`sphere_volume` by Newton's method (dV/dr = area)."""
    if v0 < 0:
        raise ValueError("volume must be nonnegative")
    if v0 == 0:
        return 0.0
    r = max((3.0 * v0 / FOUR_PI) ** (1.0 / 3.0), 0.5 * math.log(2.0 * v0 / math.pi))
    for _ in range(100):
        step = (sphere_volume(r) - v0) / sphere_area(r)
        r -= step
        if abs(step) <= 1e-15 * max(1.0, r):
            break
    return r


def _profile_integrand(x, c):
    return math.sqrt(x / (c + x))


def iso_profile_integral(a_upper, c=FOUR_PI):
    """``(1/2) int_0^a sqrt(x / (c + x)) dx`` by adaptive Gauss-Kronrod.

    The integrand has an infinite derivative at zero, so the range is split at
    ``c / 100`` and the piece containing zero is handled by QUADPACK's
    extrapolating driver.
    """
    if a_upper < 0:
        raise ValueError("a_upper must be nonnegative")
    if not c > 0:
        raise ValueError("c must be positive")
    if a_upper == 0:
        return 0.0
    split = min(c / 100.0, a_upper)
    lo, _ = integrate.quad(_profile_integrand, 0.0, split, args=(c,), epsabs=1e-13, epsrel=1e-13, limit=200)
    hi = 0.0
    if a_upper > split:
        hi, _ = integrate.quad(_profile_integrand, split, a_upper, args=(c,), epsabs=1e-13, epsrel=1e-13, limit=200)
    return 0.5 * (lo + hi)


def iso_profile_area(v0, tol=1e-10):
    """Area of the geodesic sphere enclosing volume ``v0``, by bisection on the profile integral."""
    if v0 < 0:
        raise ValueError("v0 must be nonnegative")
    if v0 == 0:
        return 0.0
    lo, hi = 0.0, max(1.0, 4.0 * v0)
    while iso_profile_integral(hi) < v0:
        lo, hi = hi, 2.0 * hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if iso_profile_integral(mid) < v0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def torus_deficit_constant(c0=C0_DEFAULT):
    """``c = (1/2) int_0^{2 pi} [sqrt(x/(4 pi + x)) - sqrt(x/(c0 + x))] dx``."""
    if not c0 > FOUR_PI:
        raise ValueError("c0 must exceed 4 pi")

    def f(x):
        return math.sqrt(x / (FOUR_PI + x)) - math.sqrt(x / (c0 + x))

    val, _ = integrate.quad(f, 0.0, 2.0 * math.pi, epsabs=1e-14, epsrel=1e-13, limit=200)
    return 0.5 * val
