"""Gauss-Legendre helpers used across the package."""
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def _gl_unit(n):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(a, b, n=64):
    """Nodes and weights of the ``n``-point rule on ``[a, b]``.

    ``a`` and ``b`` may be arrays of equal shape; the node axis is appended last.
    """
    x, w = _gl_unit(n)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    nodes = mid[..., None] + half[..., None] * x
    weights = half[..., None] * w
    return nodes, weights


def composite_gauss_legendre(breaks, n=64):
    """Concatenated rule over consecutive panels ``breaks[i] .. breaks[i+1]``."""
    breaks = np.asarray(breaks, dtype=float)
    nodes, weights = gauss_legendre(breaks[:-1], breaks[1:], n)
    return nodes.ravel(), weights.ravel()


def geometric_breaks(t0, t1, first=1.0, ratio=2.0):
    """Panel breakpoints 0-anchored and growing geometrically, for algebraic tails."""
    out = [t0]
    step = first
    while out[-1] < t1:
        out.append(min(out[-1] + step, t1))
        step *= ratio
    return np.array(out)
