"""Mesh generators for the initial surfaces: geodesic spheres, ellipsoidal
bodies, a drilled unit ball (torus) and a dumbbell (sphere).

Tori and dumbbells are surfaces of revolution about the x1 geodesic.  Their
profile curves live in Fermi coordinates ``(s, rho)`` (arc length along the
axis, distance from the axis); a point at angle ``theta`` is

    (cosh rho cosh s, cosh rho sinh s, sinh rho cos theta, sinh rho sin theta).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from . import hgeom
from .hmesh import TriMesh

KINDS = ("geodesic_sphere", "drilled_sphere_torus", "dumbbell", "ellipsoidal")
MIN_TUBE_VERTICES = 16


class ShapeError(ValueError):
    pass


@dataclass(frozen=True)
class ShapeSpec:
    kind: str
    params: dict = field(default_factory=dict)
    resolution: int = 2562

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(d["kind"], dict(d.get("params", {})), int(d.get("resolution", 2562)))


def build(spec):
    p = spec.params
    if spec.kind == "geodesic_sphere":
        center = p.get("center")
        mesh = gen_sphere(p.get("r", 1.0), center, spec.resolution)
    elif spec.kind == "ellipsoidal":
        mesh = gen_ellipsoidal(p.get("r", 1.0), p.get("stretch", 1.5), spec.resolution)
    elif spec.kind == "drilled_sphere_torus":
        mesh = gen_drilled_torus(p.get("epsilon", 0.05), spec.resolution)
    elif spec.kind == "dumbbell":
        mesh = gen_dumbbell(p.get("d", 8.0), p.get("epsilon", 0.1), spec.resolution)
    else:
        raise ShapeError(f"unknown shape kind {spec.kind!r}; expected one of {KINDS}")
    return TriMesh(mesh.vertices, mesh.faces, {"shape": spec.to_dict()})


# --------------------------------------------------------------------------
# icospheres


def icosphere(level):
    """Unit icosphere after ``level`` midpoint subdivisions (outward CCW)."""
    t = (1.0 + 5 ** 0.5) / 2.0
    v = np.array([
        [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
        [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
        [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
    ], dtype=float)
    v /= np.linalg.norm(v, axis=1)[:, None]
    f = np.array([
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ])
    verts = list(v)
    for _ in range(level):
        cache = {}

        def mid(a, b):
            key = (a, b) if a < b else (b, a)
            if key not in cache:
                m = verts[a] + verts[b]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        nf = []
        for a, b, c in f:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            nf += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        f = np.array(nf)
    return np.array(verts), f


def icosphere_level(resolution):
    if resolution < 12:
        raise ShapeError("sphere resolution must be at least 12 vertices")
    level = 0
    while 10 * 4 ** level + 2 < resolution:
        level += 1
    return level


def _radial(center, dirs, radii):
    center = hgeom.ORIGIN if center is None else hgeom.normalize(np.asarray(center, dtype=float))
    E = hgeom.frame(center)                        # (3, 4)
    tang = (dirs * np.asarray(radii)[..., None]) @ E
    return hgeom.normalize(hgeom.exp_map(center, tang))


def gen_sphere(r, center=None, resolution=2562):
    """Geodesic sphere of radius ``r``: icosphere directions mapped by exp."""
    if not r > 0:
        raise ShapeError("sphere radius must be positive")
    dirs, faces = icosphere(icosphere_level(resolution))
    return TriMesh(_radial(center, dirs, np.full(len(dirs), float(r))), faces)


def gen_ellipsoidal(r, stretch, resolution=2562, center=None):
    """Sphere with direction-dependent radius ``r (1 + (stretch - 1) u_z^2)``."""
    if not r > 0:
        raise ShapeError("radius must be positive")
    if not 1.0 <= stretch <= 3.0:
        raise ShapeError("stretch must lie in [1, 3]")
    dirs, faces = icosphere(icosphere_level(resolution))
    radii = r * (1.0 + (stretch - 1.0) * dirs[:, 2] ** 2)
    return TriMesh(_radial(center, dirs, radii), faces)


# --------------------------------------------------------------------------
# surfaces of revolution about the x1 axis


def fermi_point(s, rho, theta):
    s, rho, theta = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (s, rho, theta)))
    ch = np.cosh(rho)
    return np.stack([ch * np.cosh(s), ch * np.sinh(s),
                     np.sinh(rho) * np.cos(theta), np.sinh(rho) * np.sin(theta)], axis=-1)


def sphere_arc(center_s, phi):
    """Meridian of the unit sphere centred at axis point ``center_s``.

    ``phi`` is the angle from the +s direction; returns ``(s, rho)``.
    """
    phi = np.asarray(phi, dtype=float)
    c1, s1 = np.cosh(1.0), np.sinh(1.0)
    x0 = c1 * np.cosh(center_s) + s1 * np.cos(phi) * np.sinh(center_s)
    x1 = c1 * np.sinh(center_s) + s1 * np.cos(phi) * np.cosh(center_s)
    x2 = s1 * np.sin(phi)
    return np.arctanh(x1 / x0), np.arcsinh(x2)


def sphere_phi_at_rho(rho):
    """Angle on the unit-sphere meridian at which the distance to the axis is ``rho``."""
    return np.arcsin(np.sinh(rho) / np.sinh(1.0))


def _meridian_length(s, rho):
    ds = np.diff(s)
    dr = np.diff(rho)
    rm = 0.5 * (rho[1:] + rho[:-1])
    return np.sqrt(dr ** 2 + (np.cosh(rm) * ds) ** 2)


def _bezier(p0, t0, p3, t3, n=400):
    """Cubic blend from ``p0`` (leaving along ``t0``) to ``p3`` (arriving along ``t3``)."""
    p0, t0, p3, t3 = (np.asarray(a, dtype=float) for a in (p0, t0, p3, t3))
    k = 0.5 * np.linalg.norm(p3 - p0)
    p1 = p0 + k * t0 / np.linalg.norm(t0)
    p2 = p3 - k * t3 / np.linalg.norm(t3)
    u = np.linspace(0.0, 1.0, n)[:, None]
    return ((1 - u) ** 3 * p0 + 3 * (1 - u) ** 2 * u * p1 + 3 * (1 - u) * u ** 2 * p2 + u ** 3 * p3)


def _resample(curve, spacing):
    """Resample a dense ``(n, 2)`` polyline of ``(s, rho)`` at a metric spacing.

    Endpoints are kept.
    """
    seg = _meridian_length(curve[:, 0], curve[:, 1])
    arc = np.concatenate([[0.0], np.cumsum(seg)])
    n = max(1, int(round(arc[-1] / spacing)))
    target = np.linspace(0.0, arc[-1], n + 1)
    s = np.interp(target, arc, curve[:, 0])
    r = np.interp(target, arc, curve[:, 1])
    return np.stack([s, r], axis=1)


def _join(*parts):
    out = [parts[0]]
    for p in parts[1:]:
        out.append(p[1:])
    return np.concatenate(out)


def _ring_count(rho, h, n_min):
    return np.maximum(n_min, np.round(2 * np.pi * np.sinh(rho) / h)).astype(int)


def _stitch(a_idx, a_theta, b_idx, b_theta):
    """Triangulate the band between two consecutive closed rings.

    Angles increase along each ring; the faces wind the same way as the
    (theta, profile) parameter plane.
    """
    na, nb = len(a_idx), len(b_idx)
    tris = []
    i = j = 0
    ta = np.concatenate([a_theta, a_theta[:1] + 2 * np.pi])
    tb = np.concatenate([b_theta, b_theta[:1] + 2 * np.pi])
    while i < na or j < nb:
        if j >= nb or (i < na and ta[i + 1] <= tb[j + 1]):
            tris.append((a_idx[i % na], a_idx[(i + 1) % na], b_idx[j % nb]))
            i += 1
        else:
            tris.append((a_idx[i % na], b_idx[(j + 1) % nb], b_idx[j % nb]))
            j += 1
    return tris


def revolve(profile, h, n_min, closed=False):
    """Mesh the surface swept by a profile ``(s, rho)`` around the x1 axis.

    Profile points with ``rho == 0`` (only allowed at the ends of an open
    profile) become single pole vertices.  ``closed`` joins the last ring to
    the first.  Ring sizes follow the local circumference with at least
    ``n_min[i]`` vertices.  Successive rings are staggered by half a step and
    the offsets are chosen so that a profile symmetric under ``s -> -s``
    yields a mirror-symmetric vertex set.
    """
    profile = np.asarray(profile, dtype=float)
    n_min = np.broadcast_to(np.asarray(n_min), (len(profile),))
    m = len(profile)
    verts, rings = [], []
    for i, (s, rho) in enumerate(profile):
        if rho == 0.0:
            if closed or i not in (0, m - 1):
                raise ShapeError("poles are only allowed at the ends of an open profile")
            verts.append(fermi_point(s, 0.0, 0.0))
            rings.append(("pole", len(verts) - 1))
            continue
        n = int(_ring_count(rho, h, n_min[i]))
        k = i if closed else min(i, m - 1 - i)
        theta = 2 * np.pi * (np.arange(n) + 0.5 * (k % 2)) / n
        start = len(verts)
        verts.extend(fermi_point(np.full(n, s), np.full(n, rho), theta))
        rings.append(("ring", np.arange(start, start + n), theta))

    tris = []
    pairs = list(zip(rings[:-1], rings[1:]))
    if closed:
        pairs.append((rings[-1], rings[0]))
    for a, b in pairs:
        if a[0] == "pole":
            idx = b[1]
            n = len(idx)
            tris.extend((a[1], idx[(j + 1) % n], idx[j]) for j in range(n))
        elif b[0] == "pole":
            idx = a[1]
            n = len(idx)
            tris.extend((idx[j], idx[(j + 1) % n], b[1]) for j in range(n))
        else:
            tris.extend(_stitch(a[1], a[2], b[1], b[2]))
    return np.array(verts), np.array(tris, dtype=np.int64)


def _oriented(V, F):
    """Flip faces if the signed enclosed volume comes out negative."""
    from .ops import enclosed_volume

    mesh = TriMesh(V, F)
    if enclosed_volume(mesh) < 0:
        mesh = mesh.reversed()
    return mesh


def _spacing_for(area, resolution):
    # an even triangulation with spacing h has about area / (0.866 h^2) vertices
    return float(np.sqrt(area / (0.8 * resolution)))


def _refine_until(make, h, resolution, max_tries=20):
    """Shrink the spacing until ``make(h)`` reaches ``resolution`` vertices."""
    for _ in range(max_tries):
        V, F = make(h)
        if len(V) >= resolution:
            return V, F
        h *= 0.98 * np.sqrt(len(V) / resolution)
    raise ShapeError(f"could not reach {resolution} vertices")


def _sphere_tangent(center_s, phi):
    dp = 1e-6
    return (np.array(sphere_arc(center_s, phi + dp)) - np.array(sphere_arc(center_s, phi - dp))) / (2 * dp)


def _tube_spacing(epsilon, h):
    n_tube = max(MIN_TUBE_VERTICES, int(round(2 * np.pi * np.sinh(epsilon) / h)))
    h_circ = 2 * np.pi * np.sinh(epsilon) / n_tube
    return n_tube, min(h, 2.0 * h_circ)


def _fillet_width(epsilon, tube_length):
    """``2 epsilon``, capped so the fillet stays on the unit sphere and the tube."""
    return min(2.0 * epsilon, 0.8 - epsilon, 0.5 * tube_length)


def drilled_torus_profile(epsilon, h_outer, h_tube):
    """Half meridian of the drilled unit ball, from the hole wall at s = 0 to
    the equator, plus a flag array marking tube/fillet points."""
    s_i = np.arccosh(np.cosh(1.0) / np.cosh(epsilon))    # sphere meets rho = eps
    w = _fillet_width(epsilon, s_i)
    phi_top = sphere_phi_at_rho(epsilon + w)
    arc = np.stack(sphere_arc(0.0, np.linspace(phi_top, np.pi / 2, 4000)), axis=1)
    fillet = _bezier([s_i - w, epsilon], [1.0, 0.0], arc[0], _sphere_tangent(0.0, phi_top))
    tube = np.stack([np.linspace(0.0, s_i - w, 2000), np.full(2000, epsilon)], axis=1)
    parts = [_resample(tube, h_tube), _resample(fillet, h_tube), _resample(arc, h_outer)]
    flags = np.concatenate([np.ones(len(parts[0]) + len(parts[1]) - 1, bool), np.zeros(len(parts[2]) - 1, bool)])
    return _join(*parts), flags


def gen_drilled_torus(epsilon, resolution=8192):
    """Unit geodesic ball with a hole of radius ``epsilon`` drilled along the x1 axis."""
    if not 0.0 < epsilon < 0.5:
        raise ShapeError("epsilon must lie in (0, 0.5)")
    if resolution < 4 * MIN_TUBE_VERTICES:
        raise ShapeError("resolution insufficient to resolve the tube")

    def make(h):
        n_tube, h_tube = _tube_spacing(epsilon, h)
        half, tubeflag = drilled_torus_profile(epsilon, h, h_tube)
        # closed loop: hole wall -> equator -> mirrored back to the hole wall
        mirror = half[::-1][1:-1] * np.array([-1.0, 1.0])
        profile = np.concatenate([half, mirror])
        flags = np.concatenate([tubeflag, tubeflag[::-1][1:-1]])
        return revolve(profile, h, np.where(flags, n_tube, 6), closed=True)

    V, F = _refine_until(make, _spacing_for(4 * np.pi * np.sinh(1.0) ** 2, resolution), resolution)
    return _oriented(V, F)


def dumbbell_profile(d, epsilon, h_outer, h_tube):
    """Meridian from the +s pole to the -s pole, with tube/fillet flags."""
    c = d / 2.0
    s_j = c - np.arccosh(np.cosh(1.0) / np.cosh(epsilon))   # inner sphere/tube junction
    w = _fillet_width(epsilon, s_j)
    phi_end = np.pi - sphere_phi_at_rho(epsilon + w)
    arc = np.stack(sphere_arc(c, np.linspace(0.0, phi_end, 4000)), axis=1)
    fillet = _bezier(arc[-1], _sphere_tangent(c, phi_end), [s_j - w, epsilon], [-1.0, 0.0])
    tube = np.stack([np.linspace(s_j - w, 0.0, 4000), np.full(4000, epsilon)], axis=1)
    parts = [_resample(arc, h_outer), _resample(fillet, h_tube), _resample(tube, h_tube)]
    half = _join(*parts)
    flags = np.zeros(len(half), bool)
    flags[len(parts[0]) - 1:] = True
    mirror = half[::-1][1:] * np.array([-1.0, 1.0])
    return np.concatenate([half, mirror]), np.concatenate([flags, flags[::-1][1:]])


def gen_dumbbell(d, epsilon, resolution=8192):
    """Two unit spheres centred at ``+-d/2`` on the x1 axis joined by a tube."""
    if not 0.0 < epsilon < 0.5:
        raise ShapeError("epsilon must lie in (0, 0.5)")
    if not d > 2.0 + 4.0 * epsilon:
        raise ShapeError("d must exceed 2 + 4 epsilon")
    area = 2 * 4 * np.pi * np.sinh(1.0) ** 2 + tube_lateral_area(epsilon, d - 2)

    def make(h):
        n_tube, h_tube = _tube_spacing(epsilon, h)
        profile, flags = dumbbell_profile(d, epsilon, h, h_tube)
        return revolve(profile, h, np.where(flags, n_tube, 6))

    V, F = _refine_until(make, _spacing_for(area, resolution), resolution)
    return _oriented(V, F)


def dumbbell_axis(d):
    """The two bell centres of :func:`gen_dumbbell`."""
    return hgeom.axis_point(d / 2.0), hgeom.axis_point(-d / 2.0)


def tube_lateral_area(epsilon, length):
    """Area of the constant-distance tube of radius ``epsilon`` about a geodesic segment."""
    return 2 * np.pi * np.sinh(epsilon) * np.cosh(epsilon) * length
