"""Discrete geometric quantities of a TriMesh in H^3.

Faces are geodesic triangles.  Areas come from the angle defect, enclosed
volume from signed cones over the faces in the Klein ball, and the mean
curvature vector from a finite-difference gradient of the total area.
Mean curvature is the average of the principal curvatures (a geodesic sphere
of radius r has H = coth r).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import hgeom
from .quadrature import TRI5_BARY, TRI5_WEIGHTS, subdivide_bary

FD_REL_STEP = 1e-5
VOLUME_SUBDIVIDE_TOL = 1e-8
SERIES_SWITCH = 0.05
_SERIES_TERMS = 16


class CurvatureError(ArithmeticError):
    """Non-finite area gradient at a vertex."""


# --------------------------------------------------------------------------
# triangle primitives


def _cosh_minus_one(a, b):
    w = a - b
    return 0.5 * np.maximum(-w[..., 0] ** 2 + np.sum(w[..., 1:] ** 2, axis=-1), 0.0)


def _corner_cos(da, db, dc):
    """Cosine of the angle opposite the side with ``cosh - 1 == da``."""
    num = db * dc + db + dc - da
    den = np.sqrt(db * (db + 2.0) * dc * (dc + 2.0))
    with np.errstate(invalid="ignore", divide="ignore"):
        return num / den


def triangle_angles(p0, p1, p2, metric="hyperbolic"):
    """Interior angles at the three corners plus a degeneracy flag.

    ``metric`` is ``"hyperbolic"`` (hyperboloid points, hyperbolic law of
    cosines) or ``"euclidean"`` (3-vectors, Euclidean law of cosines).
    """
    if metric == "hyperbolic":
        d0 = _cosh_minus_one(p1, p2)
        d1 = _cosh_minus_one(p2, p0)
        d2 = _cosh_minus_one(p0, p1)
        c0 = _corner_cos(d0, d1, d2)
        c1 = _corner_cos(d1, d2, d0)
        c2 = _corner_cos(d2, d0, d1)
    else:
        l0 = np.sum((p1 - p2) ** 2, axis=-1)
        l1 = np.sum((p2 - p0) ** 2, axis=-1)
        l2 = np.sum((p0 - p1) ** 2, axis=-1)
        with np.errstate(invalid="ignore", divide="ignore"):
            c0 = (l1 + l2 - l0) / (2 * np.sqrt(l1 * l2))
            c1 = (l2 + l0 - l1) / (2 * np.sqrt(l2 * l0))
            c2 = (l0 + l1 - l2) / (2 * np.sqrt(l0 * l1))
    cs = np.stack([c0, c1, c2], axis=-1)
    bad = ~np.isfinite(cs).all(axis=-1) | (np.abs(cs) > 1.0 + 1e-12).any(axis=-1)
    ang = np.arccos(np.clip(np.nan_to_num(cs, nan=1.0), -1.0, 1.0))
    return ang, bad


def triangle_area(p0, p1, p2):
    """Hyperbolic area ``pi - (alpha + beta + gamma)``; flagged triangles get 0."""
    ang, bad = triangle_angles(p0, p1, p2)
    area = np.pi - ang.sum(axis=-1)
    bad = bad | (area <= 0.0)
    return np.where(bad, 0.0, area), bad


def euclidean_triangle_area(p0, p1, p2):
    return 0.5 * np.linalg.norm(np.cross(p1 - p0, p2 - p0), axis=-1)


def _corners(mesh, pts=None):
    P = mesh.vertices if pts is None else pts
    f = mesh.faces
    return P[f[:, 0]], P[f[:, 1]], P[f[:, 2]]


# --------------------------------------------------------------------------
# area and volume


@dataclass(frozen=True)
class FaceAreas:
    areas: np.ndarray
    flagged: np.ndarray

    @property
    def n_flagged(self):
        return int(self.flagged.sum())


def face_areas(mesh):
    a, bad = triangle_area(*_corners(mesh))
    return FaceAreas(a, bad)


@dataclass(frozen=True)
class _FaceGeometry:
    corners: tuple      # three (F, 4) arrays
    delta: np.ndarray   # (F, 3) cosh(side) - 1, side i opposite corner i
    angles: np.ndarray  # (F, 3)
    areas: np.ndarray   # (F,)  0 where flagged
    flagged: np.ndarray  # (F,) bool


def _face_geometry(mesh):
    """Side lengths, angles and areas of every face, computed once."""
    p0, p1, p2 = corners = _corners(mesh)
    d = np.stack([_cosh_minus_one(p1, p2), _cosh_minus_one(p2, p0), _cosh_minus_one(p0, p1)], axis=1)
    cs = np.stack([_corner_cos(d[:, 0], d[:, 1], d[:, 2]), _corner_cos(d[:, 1], d[:, 2], d[:, 0]),
                   _corner_cos(d[:, 2], d[:, 0], d[:, 1])], axis=1)
    bad = ~np.isfinite(cs).all(axis=1) | (np.abs(cs) > 1.0 + 1e-12).any(axis=1)
    ang = np.arccos(np.clip(np.nan_to_num(cs, nan=1.0), -1.0, 1.0))
    area = np.pi - ang.sum(axis=1)
    bad = bad | (area <= 0.0)
    return _FaceGeometry(corners, d, ang, np.where(bad, 0.0, area), bad)


def face_area(mesh, face):
    p0, p1, p2 = mesh.vertices[mesh.faces[face]]
    a, bad = triangle_area(p0, p1, p2)
    return float(a)


def total_area(mesh):
    return float(np.sum(face_areas(mesh).areas))


def _radial_cone_factor(a):
    """``g(a) = int_0^1 s^2 / (1 - a s^2)^2 ds`` for ``0 <= a < 1``.

    This is the Klein volume density integrated exactly along each ray of a
    cone with apex at the ball centre.
    """
    a = np.asarray(a, dtype=float)
    if a.size and a.min() >= SERIES_SWITCH:
        sa = np.sqrt(a)
        return (1.0 / (1 - a) - np.arctanh(sa) / sa) / (2 * a)
    out = np.empty_like(a)
    lo = a < SERIES_SWITCH
    if lo.any():
        x = a[lo]
        acc = np.zeros_like(x)
        for k in range(_SERIES_TERMS - 1, -1, -1):
            acc = acc * x + (k + 1) / (2 * k + 3)
        out[lo] = acc
    hi = ~lo
    if hi.any():
        x = a[hi]
        sx = np.sqrt(x)
        out[hi] = 1.0 / (2 * x * (1 - x)) - np.arctanh(sx) / (2 * x * sx)
    return out


def _cone_integral(K, bary):
    """Signed Klein-cone volumes over sub-triangles.

    ``K`` is ``(3, F, 3)`` (Klein corners), ``bary`` is ``(S, 3, 3)``;
    returns ``(S, F)``.
    """
    c = np.tensordot(bary, K, axes=([2], [0]))          # (S, 3, F, 3)
    det = np.einsum("sfk,sfk->sf", c[:, 0], np.cross(c[:, 1], c[:, 2]))
    y = np.tensordot(TRI5_BARY, c, axes=([1], [1]))      # (Q, S, F, 3)
    g = _radial_cone_factor(np.einsum("qsfk,qsfk->qsf", y, y))
    return det * np.tensordot(TRI5_WEIGHTS, g, axes=1)


_WHOLE_AND_SUB = np.concatenate([np.eye(3)[None], subdivide_bary()])


def face_cone_volumes(mesh):
    """Per-face signed hyperbolic volume of the Klein cone from the ball centre.

    Along each ray the density ``1/(1-|u|^2)^2`` is integrated in closed form;
    across the face a degree-5 triangle rule is used, with one level of
    midpoint subdivision for faces whose two estimates differ by more than
    1e-8.
    """
    K = np.stack([hgeom.to_klein(c) for c in _corners(mesh)])
    if np.max(np.einsum("cfk,cfk->cf", K, K)) >= (1 - 1e-9) ** 2:
        raise RuntimeError("enclosed_volume: vertex too close to the ideal boundary")
    parts = _cone_integral(K, _WHOLE_AND_SUB)
    whole = parts[0]
    sub = parts[1] + parts[2] + parts[3] + parts[4]
    return np.where(np.abs(sub - whole) > VOLUME_SUBDIVIDE_TOL, sub, whole)


def enclosed_volume(mesh):
    return float(np.sum(face_cone_volumes(mesh)))


# --------------------------------------------------------------------------
# curvature


@dataclass(frozen=True)
class CurvatureField:
    hvec: np.ndarray        # (V, 4) mean curvature vector, tangent at each vertex
    H: np.ndarray           # (V,) scalar mean curvature, <hvec, normal>
    normal: np.ndarray      # (V, 4) unit outward normal
    vertex_area: np.ndarray  # (V,) mixed-Voronoi area
    face_area: np.ndarray   # (F,)
    flagged: np.ndarray     # (F,) bool

    @property
    def n_flagged(self):
        return int(self.flagged.sum())


def mean_edge_length(mesh):
    e = mesh.edges
    return float(np.mean(hgeom.hdist(mesh.vertices[e[:, 0]], mesh.vertices[e[:, 1]])))


def edge_lengths(mesh):
    e = mesh.edges
    return hgeom.hdist(mesh.vertices[e[:, 0]], mesh.vertices[e[:, 1]])


def _area_from_deltas(d0, d1, d2):
    """Hyperbolic triangle area from the ``cosh - 1`` of its three sides."""
    with np.errstate(invalid="ignore", divide="ignore"):
        c = np.stack([_corner_cos(d0, d1, d2), _corner_cos(d1, d2, d0), _corner_cos(d2, d0, d1)], axis=-1)
    return np.pi - np.arccos(np.clip(c, -1.0, 1.0)).sum(axis=-1)


def area_gradient(mesh, h=None, geom=None):
    """Central finite-difference gradient of total area, shape ``(V, 4)``.

    Each vertex is displaced by ``exp_map(p, +-h e_k)`` along the three axes of
    its tangent frame; the gradient is assembled in ambient coordinates and is
    therefore tangent at the vertex.  For ``p' = cosh(h) p + sinh(h) e`` the
    side lengths follow exactly from
    ``cosh d(p', q) - 1 = cosh(h) (cosh d(p, q) - 1) + sinh(h) <e, p - q> + cosh(h) - 1``,
    so the displaced triangles never have to be formed.
    """
    P = mesh.vertices
    F = mesh.faces
    if h is None:
        h = FD_REL_STEP * mean_edge_length(mesh)
    if geom is None:
        geom = _face_geometry(mesh)
    E = hgeom.frame(P)                      # (V, 3, 4)
    EM = E * hgeom.METRIC
    ch, sh = np.cosh(h), np.sinh(h)
    grad = np.zeros_like(P)
    corners = geom.corners
    for c in range(3):
        vid = F[:, c]
        i1, i2 = (c + 1) % 3, (c + 2) % 3
        p, q1, q2 = corners[c], corners[i1], corners[i2]
        d_opp = geom.delta[:, c, None]
        frames = EM[vid]                     # (F, 3, 4)
        e1 = np.einsum("fki,fi->fk", frames, p - q1)
        e2 = np.einsum("fki,fi->fk", frames, p - q2)
        # side p-q1 is opposite corner i2, side p-q2 opposite corner i1
        b1 = ch * geom.delta[:, i2, None] + (ch - 1.0)
        b2 = ch * geom.delta[:, i1, None] + (ch - 1.0)
        ap = _area_from_deltas(d_opp, b2 + sh * e2, b1 + sh * e1)
        am = _area_from_deltas(d_opp, b2 - sh * e2, b1 - sh * e1)
        d = (ap - am) / (2.0 * h)           # (F, 3)
        contrib = np.einsum("fk,fki->fi", d, E[vid])
        np.add.at(grad, vid, contrib)
    return grad


def vertex_normals(mesh, areas=None):
    """Area-weighted outward unit normals, tangent at each vertex."""
    P = mesh.vertices
    F = mesh.faces
    if areas is None:
        areas = face_areas(mesh).areas
    E = hgeom.frame(P)
    EM = E * hgeom.METRIC
    acc = np.zeros((len(P), 3))
    for c in range(3):
        vid = F[:, c]
        fr = EM[vid]
        # frame components of the tangent parts of the two other corners
        uc = np.einsum("fki,fi->fk", fr, P[F[:, (c + 1) % 3]])
        wc = np.einsum("fki,fi->fk", fr, P[F[:, (c + 2) % 3]])
        n = np.cross(uc, wc)
        nn = np.linalg.norm(n, axis=1)
        n = n / np.where(nn > 0, nn, 1.0)[:, None]
        np.add.at(acc, vid, n * areas[:, None])
    acc /= np.maximum(np.linalg.norm(acc, axis=1), 1e-300)[:, None]
    return np.einsum("vk,vki->vi", acc, E)


def corner_area_fractions(mesh, pts=None, metric="hyperbolic", geom=None):
    """Mixed-Voronoi share of each face's area at its three corners, ``(F, 3)``.

    Voronoi regions for non-obtuse faces; for obtuse faces half goes to the
    obtuse corner and a quarter to each other corner.  Rows sum to one.
    """
    if geom is not None:
        ang, bad = geom.angles, geom.flagged
        # l[:, i] is the side opposite corner i
        l2 = np.arccosh(1.0 + geom.delta) ** 2
    else:
        corners = _corners(mesh, pts)
        ang, bad = triangle_angles(*corners, metric=metric)
        if metric == "hyperbolic":
            dist = hgeom.hdist
        else:
            def dist(a, b):
                return np.linalg.norm(a - b, axis=-1)
        l2 = np.stack([dist(corners[1], corners[2]), dist(corners[2], corners[0]),
                       dist(corners[0], corners[1])], axis=1) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        cot = 1.0 / np.tan(ang)
        vor = np.stack([
            l2[:, 2] * cot[:, 2] + l2[:, 1] * cot[:, 1],
            l2[:, 0] * cot[:, 0] + l2[:, 2] * cot[:, 2],
            l2[:, 1] * cot[:, 1] + l2[:, 0] * cot[:, 0],
        ], axis=1)
        vor = vor / vor.sum(axis=1, keepdims=True)
    obtuse = ang > 0.5 * np.pi
    any_obtuse = obtuse.any(axis=1)
    frac = np.where(any_obtuse[:, None], np.where(obtuse, 0.5, 0.25), vor)
    frac = np.where((bad | ~np.isfinite(frac).all(axis=1))[:, None], 1.0 / 3.0, frac)
    return frac


def vertex_areas(mesh, areas=None, mode="mixed", pts=None, metric="hyperbolic", geom=None):
    """Per-vertex area; ``mode`` is ``"mixed"`` (Voronoi) or ``"barycentric"``."""
    if areas is None:
        areas = face_areas(mesh).areas
    if mode == "barycentric":
        frac = np.full((mesh.n_faces, 3), 1.0 / 3.0)
    else:
        frac = corner_area_fractions(mesh, pts, metric, geom)
    va = np.zeros(mesh.n_vertices)
    for c in range(3):
        np.add.at(va, mesh.faces[:, c], areas * frac[:, c])
    return va


def curvature_field(mesh, h=None, area_mode="mixed"):
    geom = _face_geometry(mesh)
    fa = FaceAreas(geom.areas, geom.flagged)
    va = vertex_areas(mesh, fa.areas, area_mode, geom=geom)
    grad = area_gradient(mesh, h, geom)
    bad = ~np.isfinite(grad).all(axis=1)
    if bad.any():
        raise CurvatureError(f"non-finite area gradient at vertex {int(np.flatnonzero(bad)[0])}")
    with np.errstate(divide="ignore", invalid="ignore"):
        hvec = grad / (2.0 * va[:, None])
    hvec = np.where(va[:, None] > 0, hvec, 0.0)
    nu = vertex_normals(mesh, fa.areas)
    H = hgeom.minkowski_inner(hvec, nu)
    return CurvatureField(hvec, H, nu, va, fa.areas, fa.flagged)


def willmore_euclidean_style(mesh, cf=None):
    """``W = sum_v H_v^2 A_v``."""
    cf = curvature_field(mesh) if cf is None else cf
    return float(np.sum(cf.H ** 2 * cf.vertex_area))


def willmore_hyperbolic(mesh, cf=None):
    """``W-bar = sum_v (H_v^2 - 1) A_v``."""
    cf = curvature_field(mesh) if cf is None else cf
    return float(np.sum((cf.H ** 2 - 1.0) * cf.vertex_area))


# --------------------------------------------------------------------------
# intrinsic curvature and the conformal energy


def angle_defects(mesh, metric="hyperbolic", pts=None):
    """Per-vertex ``2 pi - sum of incident angles`` plus per-face areas/flags."""
    corners = _corners(mesh, pts)
    ang, bad = triangle_angles(*corners, metric=metric)
    defect = np.full(mesh.n_vertices, 2.0 * np.pi)
    for c in range(3):
        np.add.at(defect, mesh.faces[:, c], -ang[:, c])
    if metric == "hyperbolic":
        areas = np.where(bad, 0.0, np.pi - ang.sum(axis=1))
    else:
        areas = euclidean_triangle_area(*corners)
    return defect, areas, bad


def gauss_curvature_intrinsic(mesh, metric="hyperbolic", pts=None, return_areas=False):
    """Per-vertex intrinsic Gauss curvature.

    ``A_v`` is the mixed-Voronoi vertex area.  Euclidean: ``defect / A_v``.  Hyperbolic: the faces are pieces of totally
    geodesic planes of curvature -1, so ``K_v = defect / A_v - 1``; with this
    ``sum K_v A_v = 2 pi chi`` in both metrics.
    """
    defect, areas, _ = angle_defects(mesh, metric, pts)
    va = vertex_areas(mesh, areas, "mixed", pts, metric)
    K = defect / va
    if metric == "hyperbolic":
        K = K - 1.0
    return (K, va) if return_areas else K


def _euclidean_curvature(mesh, X):
    """Mean curvature, vertex areas and normals of the flat-triangle mesh on ``X``."""
    F = mesh.faces
    x0, x1, x2 = X[F[:, 0]], X[F[:, 1]], X[F[:, 2]]
    fn = np.cross(x1 - x0, x2 - x0)
    fa = 0.5 * np.linalg.norm(fn, axis=1)
    va = np.zeros(len(X))
    nrm = np.zeros_like(X)
    grad = np.zeros_like(X)
    xs = (x0, x1, x2)
    for c in range(3):
        a, b, cc = xs[c], xs[(c + 1) % 3], xs[(c + 2) % 3]
        np.add.at(va, F[:, c], fa / 3.0)
        np.add.at(nrm, F[:, c], fn)
        # d(area)/d(a) = 0.5 * n_hat x (cc - b)
        nh = fn / np.where(fa > 0, 2 * fa, 1.0)[:, None]
        np.add.at(grad, F[:, c], 0.5 * np.cross(nh, cc - b))
    nrm /= np.linalg.norm(nrm, axis=1)[:, None]
    hvec = grad / (2.0 * va[:, None])
    H = np.sum(hvec * nrm, axis=1)
    return H, va


@dataclass(frozen=True)
class ConformalEnergy:
    total: float
    willmore_part: float   # int (H^2 + ambient sectional curvature) dA
    gauss_part: float      # int K_intrinsic dA  (= 2 pi chi)


def conformal_energy(mesh, metric="poincare_hyperbolic", cf=None):
    """``int (H^2 + K_amb) dA + int K dA`` of the mesh under one of two metrics.

    ``metric="poincare_hyperbolic"`` evaluates with the hyperbolic metric
    (ambient sectional curvature -1); ``"euclidean_ball"`` maps vertices into
    the Poincare ball and evaluates the flat-triangle surface there with the
    Euclidean metric (ambient curvature 0).  The two totals coincide for a
    smooth closed surface.
    """
    if metric == "poincare_hyperbolic":
        cf = curvature_field(mesh) if cf is None else cf
        w = float(np.sum((cf.H ** 2 - 1.0) * cf.vertex_area))
        K, kva = gauss_curvature_intrinsic(mesh, "hyperbolic", return_areas=True)
        g = float(np.sum(K * kva))
    elif metric == "euclidean_ball":
        X = hgeom.to_poincare(mesh.vertices)
        H, va = _euclidean_curvature(mesh, X)
        w = float(np.sum(H ** 2 * va))
        K, kva = gauss_curvature_intrinsic(mesh, "euclidean", pts=X, return_areas=True)
        g = float(np.sum(K * kva))
    else:
        raise ValueError(f"unknown metric {metric!r}")
    return ConformalEnergy(w + g, w, g)


# --------------------------------------------------------------------------
# distances


def _extreme_neg_inner(A, B, largest, block=64, symmetric=False):
    """Return ``(value, i, j)`` for the largest or smallest ``-<A_i, B_j>``.

    Small row blocks keep the product matrix in cache.  With ``symmetric``
    (``A is B``) only columns ``j >= `` the block start are scanned.
    """
    Bm = np.ascontiguousarray((B * hgeom.METRIC).T)
    best, bi, bj = (-np.inf if largest else np.inf), 0, 0
    for s in range(0, len(A), block):
        c0 = s if symmetric else 0
        G = A[s:s + block] @ Bm[:, c0:]          # = <A_i, B_j>
        k = int(np.argmin(G) if largest else np.argmax(G))
        i, j = divmod(k, G.shape[1])
        val = -G[i, j]
        if (val > best) if largest else (val < best):
            best, bi, bj = val, s + i, c0 + j
    return best, bi, bj


def _max_neg_inner(A, B):
    return _extreme_neg_inner(A, B, True)


def _min_neg_inner(A, B):
    return _extreme_neg_inner(A, B, False)


def diameter(mesh, return_pair=False):
    """Maximum hyperbolic distance over all vertex pairs (exact O(V^2) scan)."""
    P = mesh.vertices
    _, i, j = _extreme_neg_inner(P, P, True, symmetric=True)
    d = float(hgeom.hdist(P[i], P[j]))
    return (d, (i, j)) if return_pair else d


def _local_samples(mesh, v):
    """Vertex ``v``, its incident face centroids and edge midpoints."""
    offsets, fids = mesh.vertex_faces
    faces = mesh.faces[fids[offsets[v]:offsets[v + 1]]]
    P = mesh.vertices
    pts = [P[v][None]]
    tri = P[faces]
    pts.append(hgeom.normalize(tri.sum(axis=1)))
    for a in range(3):
        pts.append(hgeom.geodesic_midpoint(tri[:, a], tri[:, (a + 1) % 3]))
    return np.concatenate(pts)


def surface_distance(meshA, meshB):
    """Distance between two surfaces, sampled at vertices then refined.

    The nearest vertex pair is refined once by comparing geodesic midpoints of
    edges and centroids of the faces around both vertices.  The result is an
    upper bound on the true infimum, sharp to O(max edge length).
    """
    A, B = meshA.vertices, meshB.vertices
    _, i, j = _min_neg_inner(A, B)
    d0 = float(hgeom.hdist(A[i], B[j]))
    SA = _local_samples(meshA, i)
    SB = _local_samples(meshB, j)
    _, a, b = _min_neg_inner(SA, SB)
    d1 = float(hgeom.hdist(SA[a], SB[b]))
    return min(d0, d1)
