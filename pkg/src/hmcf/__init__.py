"""Mean curvature flow of closed surfaces in hyperbolic 3-space.

Modules: ``hgeom`` (hyperboloid geometry), ``hmesh`` (meshes and the HMESH
format), ``ops`` (discrete geometric quantities), ``analytic`` (closed forms),
``flow`` (time integration), ``certify`` (inequality checks), ``shapes``
(initial surfaces), ``report`` (plots) and ``cli``.
"""

__version__ = "0.1.0"
