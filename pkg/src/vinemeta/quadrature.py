"""Gauss-Legendre quadrature rules on the unit interval."""

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=32)
def gauss_legendre_unit(n):
    """Nodes and weights of the n-point Gauss-Legendre rule on (0, 1).

    Parameters
    ----------
    n : int
        Number of quadrature points, n >= 1.

    Returns
    -------
    nodes, weights : ndarray
        Arrays of length n; nodes lie strictly inside (0, 1) and the
        weights sum to 1.
    """
    if n < 1:
        raise ValueError(f"quadrature rule needs n >= 1, got {n}")
    x, w = np.polynomial.legendre.leggauss(n)
    nodes = 0.5 * (x + 1.0)
    weights = 0.5 * w
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights
