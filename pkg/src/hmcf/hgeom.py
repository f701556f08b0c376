"""Primitives of the hyperboloid model of H^3 in Minkowski space R^{3,1}.

Points are 4-vectors ``(x0, x1, x2, x3)`` with ``<p, p> = -1`` and ``x0 >= 1``.
Every function accepts a single vector of shape ``(4,)`` or a stack of shape
``(..., 4)`` and broadcasts over the leading axes.  Tangent vectors are kept in
ambient Minkowski coordinates; there is no parallel transport anywhere.

Only dimension three is supported.
"""

from __future__ import annotations

import numpy as np

ORIGIN = np.array([1.0, 0.0, 0.0, 0.0])
METRIC = np.array([-1.0, 1.0, 1.0, 1.0])

POINT_TOL = 1e-10
CLAMP_TOL = 1e-9


class DomainError(ValueError):
    """Raised when an input lies outside the domain of a model operation."""


def minkowski_inner(p, q):
    """Return ``-p0 q0 + p1 q1 + p2 q2 + p3 q3`` (broadcast over leading axes)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    return -p[..., 0] * q[..., 0] + np.einsum("...i,...i->...", p[..., 1:], q[..., 1:])


def minkowski_norm_sq(v):
    return minkowski_inner(v, v)


def is_hpoint(p, tol=POINT_TOL):
    """True where ``p`` satisfies the hyperboloid constraint and ``x0 >= 1``."""
    p = np.asarray(p, dtype=float)
    return (np.abs(minkowski_norm_sq(p) + 1.0) < tol) & (p[..., 0] >= 1.0 - tol)


def normalize(p):
    """Rescale ``p`` onto the upper sheet: ``p / sqrt(-<p, p>)``."""
    p = np.asarray(p, dtype=float)
    s = np.sqrt(-minkowski_norm_sq(p))
    return p / s[..., None]


def hpoint(x1, x2, x3):
    """Lift spatial coordinates to the hyperboloid, ``x0 = sqrt(1 + |x|^2)``."""
    x = np.stack(np.broadcast_arrays(*map(np.asarray, (x1, x2, x3))), axis=-1).astype(float)
    x0 = np.sqrt(1.0 + np.sum(x * x, axis=-1))
    return np.concatenate([x0[..., None], x], axis=-1)


def hdist(p, q):
    """Geodesic distance ``arccosh(-<p, q>)``.

    Evaluated as ``2 asinh(|p - q|_M / 2)``, which is the same quantity but
    keeps full relative precision for nearby points.  ``-<p, q>`` slightly
    below one (roundoff) is clamped; anything further below raises.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    c = -minkowski_inner(p, q)
    if np.any(c < 1.0 - CLAMP_TOL):
        raise DomainError("hdist: -<p,q> below 1; inputs are not on the hyperboloid")
    w = p - q
    n2 = np.maximum(minkowski_norm_sq(w), 0.0)
    return 2.0 * np.arcsinh(0.5 * np.sqrt(n2))


def cosh_dist_minus_one(p, q):
    """``cosh d(p, q) - 1 = <p - q, p - q> / 2`` without cancellation."""
    w = np.asarray(p, dtype=float) - np.asarray(q, dtype=float)
    return 0.5 * np.maximum(minkowski_norm_sq(w), 0.0)


def project_tangent(p, w):
    """Project ``w`` onto the tangent space at ``p``: ``w + <w, p> p``."""
    p = np.asarray(p, dtype=float)
    w = np.asarray(w, dtype=float)
    return w + minkowski_inner(w, p)[..., None] * p


def tangent_norm(v):
    return np.sqrt(np.maximum(minkowski_norm_sq(v), 0.0))


def exp_map(p, v):
    """Move from ``p`` along the geodesic with initial velocity ``v``.

    ``cosh|v| p + sinh|v| v/|v|``; returns ``p`` itself where ``|v| < 1e-14``.
    """
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    n = tangent_norm(v)
    small = n < 1e-14
    safe = np.where(small, 1.0, n)
    ch = np.where(small, 1.0, np.cosh(n))
    sh_over = np.where(small, 1.0, np.sinh(n) / safe)
    return ch[..., None] * p + sh_over[..., None] * v


def log_map(p, q):
    """Initial velocity at ``p`` of the geodesic reaching ``q`` at time one."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    d = hdist(p, q)
    u = project_tangent(p, q)
    n = tangent_norm(u)
    scale = np.where(n > 0, d / np.where(n > 0, n, 1.0), 0.0)
    return scale[..., None] * u


def geodesic_midpoint(p, q):
    return normalize(np.asarray(p, dtype=float) + np.asarray(q, dtype=float))


def frame(p):
    """Orthonormal oriented tangent frame at ``p``, shape ``(..., 3, 4)``.

    Columns of the pure boost taking the origin to ``p``; the frame at the
    origin is the standard basis and the orientation is the same everywhere.
    """
    p = np.asarray(p, dtype=float)
    x0 = p[..., 0]
    x = p[..., 1:]
    out = np.empty(p.shape[:-1] + (3, 4))
    out[..., :, 0] = x
    outer = x[..., :, None] * x[..., None, :] / (1.0 + x0)[..., None, None]
    out[..., :, 1:] = np.eye(3) + outer
    return out


def boost(p):
    """4x4 Lorentz boost ``L`` with ``L @ ORIGIN == p``."""
    p = np.asarray(p, dtype=float)
    L = np.empty((4, 4))
    L[:, 0] = p
    L[:, 1:] = frame(p).T
    return L


def rotation(axis, angle):
    """4x4 isometry fixing the origin: rotation of the spatial part."""
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    K = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]])
    R = np.eye(3) + np.sin(angle) * K + (1 - np.cos(angle)) * K @ K
    M = np.eye(4)
    M[1:, 1:] = R
    return M


def axis_point(s, axis=0):
    """Point at signed distance ``s`` from the origin along a coordinate axis."""
    s = np.asarray(s, dtype=float)
    out = np.zeros(s.shape + (4,))
    out[..., 0] = np.cosh(s)
    out[..., 1 + axis] = np.sinh(s)
    return out


def to_klein(p):
    p = np.asarray(p, dtype=float)
    return p[..., 1:] / p[..., 0:1]


def from_klein(u):
    u = np.asarray(u, dtype=float)
    r2 = np.sum(u * u, axis=-1)
    if np.any(np.sqrt(r2) >= 1.0 - 1e-12):
        raise DomainError("from_klein: point not inside the open unit ball")
    x0 = 1.0 / np.sqrt(1.0 - r2)
    return np.concatenate([x0[..., None], x0[..., None] * u], axis=-1)


def to_poincare(p):
    p = np.asarray(p, dtype=float)
    return p[..., 1:] / (1.0 + p[..., 0:1])


def from_poincare(u):
    u = np.asarray(u, dtype=float)
    r2 = np.sum(u * u, axis=-1)
    if np.any(np.sqrt(r2) >= 1.0 - 1e-12):
        raise DomainError("from_poincare: point not inside the open unit ball")
    denom = 1.0 - r2
    x0 = (1.0 + r2) / denom
    return np.concatenate([x0[..., None], (2.0 / denom)[..., None] * u], axis=-1)


def distance_to_geodesic(x, a, b):
    """Distance from points ``x`` to the complete geodesic through ``a`` and ``b``.

    Also returns the signed arc-length coordinate of the foot point, measured
    from ``a`` toward ``b``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    x = np.asarray(x, dtype=float)
    es = project_tangent(a, b)
    es = es / tangent_norm(es)
    ta = minkowski_inner(x, a)
    ts = minkowski_inner(x, es)
    # x = (-ta) a + ts es + x_perp
    perp = x + ta[..., None] * a - ts[..., None] * es
    rho = np.arcsinh(tangent_norm(perp))
    s = np.arctanh(np.clip(ts / (-ta), -1.0, 1.0))
    return rho, s
