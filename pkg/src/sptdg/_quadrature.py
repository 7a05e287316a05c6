"""Gauss-Legendre quadrature helpers shared by assembly and analysis.

All integrands in the solver are polynomial (traces of polynomial basis
functions on affine faces, products thereof), so tensor Gauss rules with
enough nodes integrate them exactly.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import product

import numpy as np


@lru_cache(maxsize=None)
def gauss_01(m: int):
    """m-point Gauss-Legendre rule on [0,1]; exact to degree 2m-1."""
    if m < 1:
        raise ValueError("need at least one node")
    x, w = np.polynomial.legendre.leggauss(m)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=None)
def gauss_01_tensor(d: int, m: int):
    """Tensor product of d copies of the m-point rule on [0,1]^d.

    Returns (nodes (m^d, d), weights (m^d,)).
    """
    x, w = gauss_01(m)
    if d == 0:
        return np.zeros((1, 0)), np.ones(1)
    nodes = np.array(list(product(x, repeat=d)))
    weights = np.prod(np.array(list(product(w, repeat=d))), axis=1)
    return nodes, weights


def box_rule(lo, hi, m: int):
    """Tensor Gauss rule on an axis-aligned box prod [lo_i, hi_i].

    Returns (points (m^d, d), weights summing to the box volume).
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    d = lo.size
    u, w = gauss_01_tensor(d, m)
    pts = lo[None, :] + u * (hi - lo)[None, :]
    vol = float(np.prod(hi - lo))
    return pts, w * vol


def triangle_rule(v0, v1, v2, m: int):
    """Gauss rule on the triangle (v0, v1, v2) exact to total degree 2m-3.

    Built by the Duffy map from the unit square: a polynomial of total
    degree D on the triangle pulls back to a polynomial of degree at most
    2D+1 per variable, so m >= D+1 nodes per direction are exact.
    Degenerate (zero-area) triangles yield zero weights.
    """
    v0 = np.asarray(v0, dtype=float)
    v1 = np.asarray(v1, dtype=float)
    v2 = np.asarray(v2, dtype=float)
    u, w = gauss_01_tensor(2, m)
    a, b = u[:, 0], u[:, 1]
    # Duffy: (a, b) -> v0 + a (v1 - v0) + b (1 - a)(v2 - v0)
    pts = (v0[None, :]
           + a[:, None] * (v1 - v0)[None, :]
           + (b * (1.0 - a))[:, None] * (v2 - v0)[None, :])
    e1, e2 = v1 - v0, v2 - v0
    area2 = abs(e1[0] * e2[1] - e1[1] * e2[0])  # parallelogram area
    weights = w * (1.0 - a) * area2
    return pts, weights
