"""Inequality and singularity certificates evaluated on meshes and flow records.

A certificate compares a measured ``lhs`` against a bound ``rhs``.  The
margin is signed so that a positive value means the relation holds.  For the
two singularity certificates a ``pass`` means the singularity is certified; a
``fail`` certifies nothing, since those conditions are only sufficient.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import analytic, hgeom, ops

WILLMORE_TOL = 0.05
ISOPERIMETRIC_TOL = 0.02
DIAMETER_TOL = 0.02
MONOTONICITY_TOL = 0.05
CONFORMAL_TOL = 0.03
TORUS_CONFORMAL_TOL = 0.05
SINGULARITY_TOL = 0.01


class CertifyError(ValueError):
    pass


@dataclass(frozen=True)
class Certificate:
    name: str
    lhs: float
    rhs: float
    relation: str           # ">=", "<=" or "==" (equal within tolerance)
    margin: float
    tolerance: float
    verdict: str            # pass | fail | inconclusive
    inputs_digest: str
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def mesh_digest(mesh, *params):
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(mesh.vertices, dtype="<f8").tobytes())
    h.update(np.ascontiguousarray(mesh.faces, dtype="<i8").tobytes())
    for p in params:
        h.update(repr(p).encode())
    return h.hexdigest()


def values_digest(*values):
    return hashlib.sha256(repr(values).encode()).hexdigest()


def _margin(lhs, rhs, relation):
    if relation == ">=":
        return lhs - rhs
    if relation == "<=":
        return rhs - lhs
    return -abs(lhs - rhs)


def _inequality(name, lhs, rhs, relation, tol, digest, flagged=0, extra=None):
    margin = _margin(lhs, rhs, relation)
    if flagged:
        verdict = "inconclusive"
    else:
        verdict = "pass" if margin >= -tol else "fail"
    extra = dict(extra or {})
    if flagged:
        extra["flaggedFaces"] = int(flagged)
    return Certificate(name, float(lhs), float(rhs), relation, float(margin), float(tol), verdict, digest, extra)


def _singularity(name, lhs, rhs, relation, tol, digest, extra=None):
    """One-directional: pass only when the margin clears the tolerance band."""
    margin = _margin(lhs, rhs, relation)
    if margin > tol:
        verdict = "pass"
    elif margin >= -tol:
        verdict = "inconclusive"
    else:
        verdict = "fail"
    return Certificate(name, float(lhs), float(rhs), relation, float(margin), float(tol), verdict, digest,
                       dict(extra or {}))


def check_willmore_sphere_bound(mesh, cf=None):
    cf = ops.curvature_field(mesh) if cf is None else cf
    rhs = analytic.FOUR_PI
    return _inequality("willmore_sphere_bound", ops.willmore_hyperbolic(mesh, cf), rhs, ">=",
                       WILLMORE_TOL * rhs, mesh_digest(mesh), cf.n_flagged)


def _require_torus(mesh):
    chi = mesh.euler_characteristic()
    if chi != 0:
        raise CertifyError(f"not a torus (euler characteristic {chi})")


def check_torus_willmore_bound(mesh, c0=analytic.C0_DEFAULT, cf=None):
    _require_torus(mesh)
    cf = ops.curvature_field(mesh) if cf is None else cf
    return _inequality("torus_willmore_bound", ops.willmore_hyperbolic(mesh, cf), c0, ">=",
                       WILLMORE_TOL * c0, mesh_digest(mesh, c0), cf.n_flagged)


def check_isoperimetric(mesh):
    fa = ops.face_areas(mesh)
    A = float(np.sum(fa.areas))
    V = ops.enclosed_volume(mesh)
    rhs = analytic.iso_profile_area(max(V, 0.0))
    return _inequality("isoperimetric", A, rhs, ">=", ISOPERIMETRIC_TOL * A, mesh_digest(mesh),
                       fa.n_flagged, {"V": V})


def check_torus_singularity(mesh, c0=analytic.C0_DEFAULT):
    """Singularity is certified when the enclosed volume exceeds the volume the
    ``c0`` profile allows for the measured area."""
    _require_torus(mesh)
    A = ops.total_area(mesh)
    V = ops.enclosed_volume(mesh)
    rhs = analytic.iso_profile_integral(A, c0)
    extra = {"A": A, "c0": c0}
    if A > 2.0 * math.pi and c0 > analytic.FOUR_PI:
        extra["deficit_constant"] = analytic.torus_deficit_constant(c0)
    return _singularity("torus_singularity", V, rhs, ">=", SINGULARITY_TOL * rhs, mesh_digest(mesh, c0), extra)


def check_dumbbell_singularity(area0, d, r_bell=1.0):
    """Certified when ``A0^2 < (16 pi^2 / 49) T0 d^2`` with ``T0 = ln cosh r_bell``.

    Also reports the predicted blow-up time ``t0 = 49 A0^2 / (16 pi^2 d^2)``.
    """
    if not (area0 > 0 and d > 0 and r_bell > 0):
        raise CertifyError("area0, d and r_bell must be positive")
    T0 = analytic.extinction_time(r_bell)
    k = 16.0 * math.pi ** 2 / 49.0
    lhs = area0 ** 2
    rhs = k * T0 * d ** 2
    t0 = lhs / (k * d ** 2)
    return _singularity("dumbbell_singularity", lhs, rhs, "<=", SINGULARITY_TOL * rhs,
                        values_digest(area0, d, r_bell), {"t0": t0, "T0": T0})


def check_diameter_bound(mesh, cf=None):
    cf = ops.curvature_field(mesh) if cf is None else cf
    A = float(np.sum(cf.face_area))
    W = ops.willmore_euclidean_style(mesh, cf)
    rhs = 7.0 / (2.0 * math.pi) * math.sqrt(A * W)
    return _inequality("diameter_bound", ops.diameter(mesh), rhs, "<=", DIAMETER_TOL * rhs,
                       mesh_digest(mesh), cf.n_flagged)


def _center_index(mesh, center):
    if isinstance(center, (int, np.integer)):
        return int(center)
    c = np.asarray(center, dtype=float)
    d = hgeom.hdist(mesh.vertices, c)
    i = int(np.argmin(d))
    if d[i] > 1e-9:
        raise CertifyError("center must be a mesh vertex")
    return i


def check_local_monotonicity(mesh, center, rho0, cf=None):
    """``pi <= (rho0^-2 + 1/2) A(M) + (1/4) int_M H^2`` on the metric ball
    ``M`` of radius ``rho0`` about a vertex."""
    if not rho0 > 0:
        raise CertifyError("rho0 must be positive")
    cf = ops.curvature_field(mesh) if cf is None else cf
    v = _center_index(mesh, center)
    P = mesh.vertices
    dist = hgeom.hdist(P, P[v])
    inside = dist < rho0
    faces_in = inside[mesh.faces].all(axis=1)
    A_ball = float(np.sum(cf.face_area[faces_in]))
    w_ball = float(np.sum((cf.H ** 2 * cf.vertex_area)[inside]))
    rhs = (rho0 ** -2 + 0.5) * A_ball + 0.25 * w_ball
    cert = _inequality("local_monotonicity", math.pi, rhs, "<=", MONOTONICITY_TOL * math.pi,
                       mesh_digest(mesh, v, rho0), cf.n_flagged,
                       {"center": v, "rho0": rho0, "ball_area": A_ball})
    offsets, fids = mesh.vertex_faces
    ring = mesh.faces[fids[offsets[v]:offsets[v + 1]]].ravel()
    local_edge = float(np.mean(dist[ring[ring != v]]))
    if rho0 < 2.0 * local_edge:
        cert = Certificate(cert.name, cert.lhs, cert.rhs, cert.relation, cert.margin, cert.tolerance,
                           "inconclusive", cert.inputs_digest, {**cert.extra, "under_resolved": True})
    return cert


def _record_flagged(r):
    if hasattr(r, "a"):
        return r.a.flaggedFaces + r.b.flaggedFaces
    return int(getattr(r, "flaggedFaces", 0))


def check_comparison_monitor(records, tol_mesh, weak=False):
    """Minimum over paired records of ``e^t sinh(d/2) - sinh(d0/2)``
    (or ``e^t d - d0`` with ``weak=True``)."""
    if not records:
        raise CertifyError("no paired records")
    vals = [r.monitorFa1 if weak else r.monitorF1 for r in records]
    lhs = float(min(vals))
    tol = tol_mesh if weak else math.sinh(tol_mesh / 2.0)
    name = "comparison_monitor_weak" if weak else "comparison_monitor"
    flagged = sum(_record_flagged(r) for r in records)
    digest = values_digest(*[(r.t, r.d) for r in records])
    return _inequality(name, lhs, 0.0, ">=", tol, digest, flagged,
                       {"d0": records[0].d, "tol_mesh": tol_mesh, "n_records": len(records)})


def check_conformal_invariance(mesh, tolerance=CONFORMAL_TOL, cf=None):
    hyp = ops.conformal_energy(mesh, "poincare_hyperbolic", cf)
    euc = ops.conformal_energy(mesh, "euclidean_ball")
    tol = tolerance * max(abs(hyp.total), abs(euc.total))
    flagged = cf.n_flagged if cf is not None else ops.face_areas(mesh).n_flagged
    return _inequality("conformal_invariance", hyp.total, euc.total, "==", tol,
                       mesh_digest(mesh, tolerance), flagged)


MESH_CHECKS = (
    "willmore_sphere_bound",
    "torus_willmore_bound",
    "isoperimetric",
    "torus_singularity",
    "diameter_bound",
    "local_monotonicity",
    "conformal_invariance",
)


def run_mesh_checks(mesh, which="all", c0=analytic.C0_DEFAULT):
    """Evaluate the named mesh certificate (or every applicable one).

    Torus checks are skipped for non-tori under ``all``; local monotonicity
    is evaluated at the vertex with the largest ``|H|`` with the radius
    ``sqrt(A / W)``.
    """
    names = MESH_CHECKS if which == "all" else (which,)
    for n in names:
        if n not in MESH_CHECKS:
            raise CertifyError(f"unknown certificate {n!r}")
    cf = ops.curvature_field(mesh)
    is_torus = mesh.euler_characteristic() == 0
    out = []
    for n in names:
        if n in ("torus_willmore_bound", "torus_singularity") and which == "all" and not is_torus:
            continue
        if n == "willmore_sphere_bound":
            out.append(check_willmore_sphere_bound(mesh, cf))
        elif n == "torus_willmore_bound":
            out.append(check_torus_willmore_bound(mesh, c0, cf))
        elif n == "isoperimetric":
            out.append(check_isoperimetric(mesh))
        elif n == "torus_singularity":
            out.append(check_torus_singularity(mesh, c0))
        elif n == "diameter_bound":
            out.append(check_diameter_bound(mesh, cf))
        elif n == "local_monotonicity":
            rho0 = math.sqrt(float(np.sum(cf.face_area)) / ops.willmore_euclidean_style(mesh, cf))
            out.append(check_local_monotonicity(mesh, int(np.argmax(np.abs(cf.H))), rho0, cf))
        elif n == "conformal_invariance":
            out.append(check_conformal_invariance(mesh, TORUS_CONFORMAL_TOL if is_torus else CONFORMAL_TOL, cf))
    return out
