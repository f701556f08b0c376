"""Fixed quadrature rules on the reference triangle and tetrahedron."""

import numpy as np

# Degree-5, 7-point rule on the triangle (0,0),(1,0),(0,1); weights sum to 1/2.
_a1, _b1 = 0.059715871789770, 0.470142064105115
_a2, _b2 = 0.797426985353087, 0.101286507323456
_w0, _w1, _w2 = 0.225, 0.132394152788506, 0.125939180544827

TRI5_BARY = np.array([
    [1 / 3, 1 / 3, 1 / 3],
    [_a1, _b1, _b1], [_b1, _a1, _b1], [_b1, _b1, _a1],
    [_a2, _b2, _b2], [_b2, _a2, _b2], [_b2, _b2, _a2],
])
TRI5_WEIGHTS = 0.5 * np.array([_w0, _w1, _w1, _w1, _w2, _w2, _w2])

# Keast degree-4, 11-point rule on the unit tetrahedron; weights sum to 1/6.
_k = [
    (-0.01315555555555556, (0.25, 0.25, 0.25, 0.25)),
    (0.007622222222222222, (0.0714285714285714, 0.0714285714285714, 0.0714285714285714, 0.785714285714286)),
    (0.02488888888888889, (0.399403576166799, 0.399403576166799, 0.100596423833201, 0.100596423833201)),
]


def _keast():
    from itertools import permutations

    pts, wts = [], []
    for w, bary in _k:
        for perm in sorted(set(permutations(bary))):
            pts.append(perm)
            wts.append(w)
    return np.array(pts), np.array(wts)


TET4_BARY, TET4_WEIGHTS = _keast()


def subdivide_bary():
    """Barycentric corners of the four midpoint sub-triangles."""
    m01, m12, m20 = (0.5, 0.5, 0.0), (0.0, 0.5, 0.5), (0.5, 0.0, 0.5)
    c0, c1, c2 = (1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)
    return np.array([[c0, m01, m20], [m01, c1, m12], [m20, m12, c2], [m12, m20, m01]])
