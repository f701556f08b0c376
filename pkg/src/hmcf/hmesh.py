"""Closed oriented triangle meshes with vertices on the hyperboloid.

A :class:`TriMesh` is an immutable snapshot: an ``(V, 4)`` array of hyperboloid
points and an ``(F, 3)`` array of vertex indices, counterclockwise as seen from
outside.  Edge/face adjacency is derived lazily and cached.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from . import hgeom

READ_DRIFT_TOL = 1e-6
REPROJECT_TOL = 1e-12


class HMeshError(ValueError):
    """Malformed HMESH input.  ``code`` is one of ``header``, ``count``,
    ``syntax``, ``index`` or ``hyperboloid``."""

    def __init__(self, code, message, line=None):
        self.code = code
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"[{code}] {message}{where}")


@dataclass(frozen=True, eq=False)
class TriMesh:
    vertices: np.ndarray
    faces: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float).reshape(-1, 4)
        f = np.array(self.faces, dtype=np.int64).reshape(-1, 3)
        v.flags.writeable = False
        f.flags.writeable = False
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_faces(self):
        return len(self.faces)

    @cached_property
    def directed_edges(self):
        f = self.faces
        return np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])

    @cached_property
    def edges(self):
        """Unique undirected edges, sorted ``(i < j)``."""
        e = np.sort(self.directed_edges, axis=1)
        n = max(self.n_vertices, 1)
        key = np.unique(e[:, 0] * n + e[:, 1])
        return np.stack([key // n, key % n], axis=1)

    @cached_property
    def vertex_faces(self):
        """CSR-style incidence: ``(offsets, face_ids)`` grouped by vertex."""
        flat = self.faces.ravel()
        order = np.argsort(flat, kind="stable")
        counts = np.bincount(flat, minlength=self.n_vertices)
        offsets = np.concatenate([[0], np.cumsum(counts)])
        return offsets, order // 3

    def euler_characteristic(self):
        return euler_characteristic(self)

    def with_vertices(self, vertices):
        """Same connectivity, new positions (cached topology is shared)."""
        out = TriMesh(vertices, self.faces, dict(self.meta))
        for name in ("directed_edges", "edges", "vertex_faces"):
            if name in self.__dict__:
                out.__dict__[name] = self.__dict__[name]
        return out

    def reversed(self):
        return TriMesh(self.vertices, self.faces[:, ::-1], dict(self.meta))

    def transformed(self, M):
        """Apply a 4x4 Lorentz transformation to every vertex."""
        return TriMesh(hgeom.normalize(self.vertices @ np.asarray(M).T), self.faces, dict(self.meta))


def merge(*meshes):
    """Disjoint union of meshes (vertex indices shifted)."""
    verts, faces, off = [], [], 0
    for m in meshes:
        verts.append(m.vertices)
        faces.append(m.faces + off)
        off += m.n_vertices
    return TriMesh(np.concatenate(verts), np.concatenate(faces))


def euler_characteristic(mesh):
    return int(mesh.n_vertices - len(mesh.edges) + mesh.n_faces)


def vertex_star(mesh, v):
    """Ordered ring of faces around vertex ``v``.

    Returns the list of incident face ids in rotational order.  Raises
    ``ValueError`` if the incident faces do not form one closed fan.
    """
    offsets, fids = mesh.vertex_faces
    inc = fids[offsets[v]:offsets[v + 1]]
    if len(inc) == 0:
        raise ValueError(f"vertex {v} is isolated")
    nxt = {}
    for fi in inc:
        a, b, c = mesh.faces[fi]
        # outgoing edge v->x within this face; the next face around v contains x->v
        if a == v:
            x, y = b, c
        elif b == v:
            x, y = c, a
        else:
            x, y = a, b
        if x in nxt:
            raise ValueError(f"vertex {v}: non-manifold fan")
        nxt[x] = (y, fi)
    start = next(iter(nxt))
    ring, cur = [], start
    for _ in range(len(inc)):
        if cur not in nxt:
            raise ValueError(f"vertex {v}: fan does not close")
        cur, fi = nxt[cur]
        ring.append(int(fi))
        if cur == start:
            break
    if cur != start or len(ring) != len(inc):
        raise ValueError(f"vertex {v}: incident faces form more than one fan")
    return ring


def validate(mesh, check_stars=True):
    """Check the closed-oriented-manifold invariants and vertex constraints.

    Returns a list of human-readable violations; an empty list means ok.
    Never raises.
    """
    problems = []
    V, F = mesh.n_vertices, mesh.n_faces
    f = mesh.faces
    if F == 0:
        return ["mesh has no faces"]
    if f.min() < 0 or f.max() >= V:
        return [f"face index out of range [0, {V})"]

    bad = (f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 2] == f[:, 0])
    for fi in np.flatnonzero(bad)[:10]:
        problems.append(f"degenerate face {fi}: repeated index {tuple(f[fi])}")

    used = np.zeros(V, dtype=bool)
    used[f.ravel()] = True
    for vi in np.flatnonzero(~used)[:10]:
        problems.append(f"isolated vertex {vi}")

    de = mesh.directed_edges
    key = de[:, 0] * V + de[:, 1]
    uniq, counts = np.unique(key, return_counts=True)
    for k in uniq[counts > 1][:10]:
        problems.append(f"directed edge {k // V}->{k % V} used by more than one face")
    rev = de[:, 1] * V + de[:, 0]
    missing = ~np.isin(rev, uniq)
    for i in np.flatnonzero(missing)[:10]:
        problems.append(f"boundary edge {de[i, 0]}-{de[i, 1]} (no opposite half-edge)")

    pts = mesh.vertices
    off = np.flatnonzero(~hgeom.is_hpoint(pts))
    for vi in off[:10]:
        problems.append(f"vertex {vi} violates hyperboloid constraint")

    if check_stars and not problems:
        for vi in range(V):
            try:
                vertex_star(mesh, vi)
            except ValueError as exc:
                problems.append(str(exc))
                if len(problems) >= 10:
                    break
    return problems


def format_float(x):
    return f"{x:.17g}"


def write_hmesh(mesh, path):
    path = Path(path)
    lines = ["HMESH 1", f"{mesh.n_vertices} {mesh.n_faces}"]
    for p in mesh.vertices:
        lines.append("v " + " ".join(format_float(x) for x in p))
    for a, b, c in mesh.faces:
        lines.append(f"f {a} {b} {c}")
    path.write_text("\n".join(lines) + "\n")
    return path


def read_hmesh(path):
    """Parse an HMESH file.

    Vertices drifting off the hyperboloid by at most 1e-6 are pushed back;
    larger drift is an error.  Tiny roundoff-level drift is left untouched so
    that write/read round-trips reproduce the text exactly.
    """
    rows = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        s = raw.split("#", 1)[0].strip()
        if s:
            rows.append((lineno, s))
    if not rows or rows[0][1].split() != ["HMESH", "1"]:
        raise HMeshError("header", "first line must be 'HMESH 1'", rows[0][0] if rows else 1)
    if len(rows) < 2:
        raise HMeshError("count", "missing '<V> <F>' count line")
    lineno, s = rows[1]
    try:
        nv, nf = (int(t) for t in s.split())
    except ValueError:
        raise HMeshError("count", "count line must be '<V> <F>'", lineno) from None
    body = rows[2:]
    if len(body) != nv + nf:
        raise HMeshError("count", f"expected {nv} vertex and {nf} face lines, found {len(body)} lines",
                         body[min(len(body), nv + nf) - 1][0] if body else lineno)
    verts = np.empty((nv, 4))
    for i, (ln, s) in enumerate(body[:nv]):
        tok = s.split()
        if len(tok) != 5 or tok[0] != "v":
            raise HMeshError("syntax", "expected 'v <x0> <x1> <x2> <x3>'", ln)
        try:
            verts[i] = [float(t) for t in tok[1:]]
        except ValueError:
            raise HMeshError("syntax", "non-numeric vertex coordinate", ln) from None
    faces = np.empty((nf, 3), dtype=np.int64)
    for i, (ln, s) in enumerate(body[nv:]):
        tok = s.split()
        if len(tok) != 4 or tok[0] != "f":
            raise HMeshError("syntax", "expected 'f <i> <j> <k>'", ln)
        try:
            faces[i] = [int(t) for t in tok[1:]]
        except ValueError:
            raise HMeshError("syntax", "non-integer face index", ln) from None
        if faces[i].min() < 0 or faces[i].max() >= nv:
            raise HMeshError("index", f"face index out of range [0, {nv})", ln)

    drift = np.abs(hgeom.minkowski_norm_sq(verts) + 1.0)
    if nv:
        worst = int(np.argmax(drift))
        if drift[worst] > READ_DRIFT_TOL or verts[worst, 0] <= 0:
            raise HMeshError("hyperboloid", f"vertex {worst} is off the hyperboloid by {drift[worst]:.3g}",
                             body[worst][0])
        fix = drift > REPROJECT_TOL * np.maximum(1.0, verts[:, 0] ** 2)
        if fix.any():
            verts[fix] = hgeom.normalize(verts[fix])
    return TriMesh(verts, faces)


def _link(faces_of_v, faces, v):
    out = set()
    for fi in faces_of_v:
        out.update(int(x) for x in faces[fi])
    out.discard(v)
    return out


def collapse_short_edges(mesh, ratio=0.1):
    """Collapse edges shorter than ``ratio`` times the mean edge length.

    Each collapse merges an edge into its geodesic midpoint.  An edge is only
    collapsed if the link condition holds (the endpoints share exactly the two
    opposite vertices), so the topology is unchanged, and if no surviving
    face around it flips orientation.  Returns a new mesh (the input is left
    untouched) and the number of collapses.
    """
    P = mesh.vertices.copy()
    faces = [list(map(int, f)) for f in mesh.faces]
    alive = [True] * len(faces)
    e = mesh.edges
    lengths = hgeom.hdist(P[e[:, 0]], P[e[:, 1]])
    threshold = ratio * float(np.mean(lengths))
    vf = {v: set() for v in range(len(P))}
    for fi, f in enumerate(faces):
        for v in f:
            vf[v].add(fi)
    touched = set()
    removed_vertex = np.zeros(len(P), dtype=bool)
    n_collapsed = 0
    for k in np.argsort(lengths, kind="stable"):
        if lengths[k] >= threshold:
            break
        u, v = int(e[k, 0]), int(e[k, 1])
        if u in touched or v in touched:
            continue
        fu = {fi for fi in vf[u] if alive[fi]}
        fv = {fi for fi in vf[v] if alive[fi]}
        shared = fu & fv
        if len(shared) != 2:
            continue
        common = _link(fu, faces, u) & _link(fv, faces, v)
        if len(common) != 2:
            continue
        if sum(alive) - 2 < 4:
            break
        m = hgeom.geodesic_midpoint(P[u], P[v])
        ok = True
        for fi in (fu | fv) - shared:
            f = faces[fi]
            old = P[f]
            new = old.copy()
            new[[i for i, x in enumerate(f) if x in (u, v)]] = m
            if _face_normal_dot(old, new) <= 0:
                ok = False
                break
        if not ok:
            continue
        P[u] = m
        for fi in shared:
            alive[fi] = False
        for fi in fv - shared:
            faces[fi] = [u if x == v else x for x in faces[fi]]
            vf[u].add(fi)
        removed_vertex[v] = True
        touched.update((u, v))
        touched.update(common)
        n_collapsed += 1
    if n_collapsed == 0:
        return mesh, 0
    keep = ~removed_vertex
    remap = -np.ones(len(P), dtype=np.int64)
    remap[keep] = np.arange(int(keep.sum()))
    F = np.array([faces[i] for i in range(len(faces)) if alive[i]], dtype=np.int64)
    return TriMesh(P[keep], remap[F], dict(mesh.meta)), n_collapsed


def _face_normal_dot(old, new):
    """Agreement of two triangles' orientations, measured in the Klein chart."""
    def normal(t):
        k = t[:, 1:] / t[:, :1]
        return np.cross(k[1] - k[0], k[2] - k[0])

    return float(np.dot(normal(old), normal(new)))
