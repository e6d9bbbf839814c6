"""
Total-order probabilists' Hermite bases.
"""

from itertools import product
from math import perm

import numpy as np
from numpy.polynomial.hermite_e import hermevander

from apps.core.exceptions import InvalidParameterError

MAX_TOTAL_ORDER = 6


def total_order_multi_indices(dim, order):
    """All multi-indices of length ``dim`` with total degree at most ``order``, lowest degree first."""
    if order < 0 or order > MAX_TOTAL_ORDER:
        raise InvalidParameterError(f"total order must lie in [0, {MAX_TOTAL_ORDER}], got {order}")
    indices = [alpha for alpha in product(range(order + 1), repeat=dim) if sum(alpha) <= order]
    indices.sort(key=lambda alpha: (sum(alpha), tuple(-a for a in alpha)))
    return np.array(indices, dtype=int).reshape(len(indices), dim)


def hermite_table(values, max_degree, derivative=0):
    """
    Table of ``d^n/dt^n He_m(t)`` for m = 0..max_degree, shape (..., max_degree + 1).

    Uses He_m^(n) = m!/(m-n)! He_{m-n}.
    """
    table = hermevander(np.asarray(values, dtype=float), max_degree)
    if derivative == 0:
        return table
    out = np.zeros_like(table)
    for m in range(derivative, max_degree + 1):
        out[..., m] = perm(m, derivative) * table[..., m - derivative]
    return out


def basis_matrix(points, multi_indices, orders=None):
    """
    Evaluate tensor-product basis functions (optionally differentiated) at points.

    points: (..., k); multi_indices: (n_terms, k); orders: derivative order per coordinate.
    Returns (..., n_terms).
    """
    points = np.asarray(points, dtype=float)
    n_terms, k = multi_indices.shape
    orders = orders or (0,) * k
    max_degree = int(multi_indices.max()) if multi_indices.size else 0
    result = np.ones(points.shape[:-1] + (n_terms,))
    for j in range(k):
        if not multi_indices[:, j].any() and orders[j] == 0:
            continue
        table = hermite_table(points[..., j], max_degree, orders[j])
        result = result * table[..., multi_indices[:, j]]
    return result
