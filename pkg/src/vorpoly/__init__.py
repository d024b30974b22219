"""Polyominoes on Poisson-Voronoi tilings.

Modules: ``ppp`` (point processes), ``geometry`` (exact Delaunay and Voronoi
cells), ``lattice`` (animals, greedy weights), ``percolation`` (site fields,
clusters), ``blocks`` (full boxes, confinement), ``polyomino`` (covers,
inverse covers, segment paths), ``modified`` (the regularized process N(n)),
``bondperc`` (edge rewards, good boxes) and ``experiments`` (Monte Carlo
harness).  ``VORPOLY_NUMBA=0`` selects the pure numpy kernels.
"""

from ._accel import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
