"""Error-free products for directional derivatives that cancel badly.

Near convergence the slope of the merit along a tiny step can sit many
orders of magnitude below the rounding error of a plain dot product. The
helpers here expand the slope into a list of exactly representable terms
and sum them with :func:`math.fsum`, which rounds the exact sum once.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import sparse

_SPLIT = 134217729.0  # 2**27 + 1


def _split(a):
    t = _SPLIT * a
    hi = t - (t - a)
    return hi, a - hi


def two_prod(a, b):
    """``(p, e)`` with ``p = fl(a * b)`` and ``a * b = p + e`` exactly."""
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    e = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, e


def bilinear_terms(M, u, v, scale=1.0):
    """Exact summands of ``scale * u' M v`` for a sparse or dense ``M``."""
    coo = sparse.coo_matrix(M)
    terms = []
    h1, l1 = two_prod(u[coo.row], coo.data)
    for part in (h1, l1):
        h2, l2 = two_prod(part, v[coo.col])
        for t in (h2, l2):
            if scale == 1.0:
                terms.append(t)
            else:
                terms.extend(two_prod(t, scale))
    return terms


def exact_slope(Q, C, rho, g, x, p) -> float:
    """Correctly rounded ``((Q + rho C) x + g)' p``."""
    terms = bilinear_terms(Q, p, x) + bilinear_terms(C, p, x, rho) + list(two_prod(g, p))
    return math.fsum(np.concatenate(terms).tolist())
