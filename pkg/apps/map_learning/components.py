"""
Rectified-integral monotone components of a lower-triangular map.

Component k (0-based) depends on y_0..y_k and has the form

    S_k(y) = f(y_<k, 0) + int_0^{y_k} g(d_k f(y_<k, t)) dt

with f expanded in a tensor Hermite basis and g a strictly positive rectifier, so
that dS_k/dy_k = g(d_k f(y)) > 0 everywhere.
"""

from functools import cached_property

import numpy as np

from apps.core.exceptions import InvalidParameterError
from apps.core.utils import tmula_setting

from .basis import basis_matrix, total_order_multi_indices
from .rectifiers import get_rectifier


def unit_orders(size, *positions):
    orders = [0] * size
    for position in positions:
        orders[position] += 1
    return tuple(orders)


class MonotoneComponent:
    """One component of a monotone triangular map. Instances are immutable."""

    def __init__(self, index, multi_indices, coefficients, rectifier="softplus", quadrature_points=None):
        self.index = int(index)
        self.multi_indices = np.array(multi_indices, dtype=int).reshape(-1, self.index + 1)
        self.coefficients = np.array(coefficients, dtype=float).reshape(-1)
        self.multi_indices.setflags(write=False)
        self.coefficients.setflags(write=False)
        if self.multi_indices.shape[0] != self.coefficients.shape[0]:
            raise InvalidParameterError(
                f"Component {self.index}: {self.multi_indices.shape[0]} multi-indices "
                f"but {self.coefficients.shape[0]} coefficients"
            )
        if not self.multi_indices[:, self.index].any():
            raise InvalidParameterError(f"Component {self.index} has no term depending on its own coordinate")
        self.rectifier = get_rectifier(rectifier)
        self.quadrature_points = int(tmula_setting("QUADRATURE_POINTS", quadrature_points))
        if self.quadrature_points < 8:
            raise InvalidParameterError(f"quadrature_points must be at least 8, got {self.quadrature_points}")

    @classmethod
    def identity(cls, index, order, rectifier="softplus", quadrature_points=None):
        """Total-order component initialised to S_k(y) = y_k."""
        if order < 1:
            raise InvalidParameterError(f"Monotone components need total order of at least 1, got {order}")
        multi_indices = total_order_multi_indices(index + 1, order)
        coefficients = np.zeros(len(multi_indices))
        linear = np.zeros(index + 1, dtype=int)
        linear[index] = 1
        position = int(np.flatnonzero((multi_indices == linear).all(axis=1))[0])
        coefficients[position] = get_rectifier(rectifier).unit_argument
        return cls(index, multi_indices, coefficients, rectifier, quadrature_points)

    def with_coefficients(self, coefficients):
        return MonotoneComponent(
            self.index, self.multi_indices, coefficients, self.rectifier.name, self.quadrature_points
        )

    @property
    def n_terms(self):
        return self.coefficients.shape[0]

    @property
    def order(self):
        return int(self.multi_indices.sum(axis=1).max())

    @cached_property
    def _rule(self):
        nodes, weights = np.polynomial.legendre.leggauss(self.quadrature_points)
        return nodes, weights

    def quadrature(self, y):
        """
        Quadrature design for points y of shape (..., k+1).

        Returns (nodes, half_weights) where nodes has shape (..., Q, k+1) with the last
        coordinate replaced by the Gauss-Legendre nodes rescaled to [0, y_k], and
        half_weights = y_k/2 * w_q.
        """
        nodes, weights = self._rule
        last = y[..., self.index]
        t = last[..., None] * (nodes + 1.0) / 2.0
        points = np.repeat(y[..., None, :], self.quadrature_points, axis=-2)
        points[..., self.index] = t
        return points, last[..., None] * weights / 2.0

    def anchor(self, y):
        """Points with the last coordinate set to zero."""
        points = np.array(y, dtype=float, copy=True)
        points[..., self.index] = 0.0
        return points

    def design(self, points, *positions):
        """Basis functions differentiated once per listed coordinate, shape (..., n_terms)."""
        return basis_matrix(points, self.multi_indices, unit_orders(self.index + 1, *positions))

    def _field(self, points, *positions):
        return self.design(points, *positions) @ self.coefficients

    def evaluate(self, y):
        """Return (S_k(y), dS_k/dy_k(y)) for y of shape (..., k+1)."""
        y = np.asarray(y, dtype=float)
        k = self.index
        nodes, half_weights = self.quadrature(y)
        integrand = self.rectifier.value(self._field(nodes, k))
        value = self._field(self.anchor(y)) + np.sum(half_weights * integrand, axis=-1)
        return value, self.rectifier.value(self._field(y, k))

    def diagonal_derivative(self, y):
        return self.rectifier.value(self._field(np.asarray(y, dtype=float), self.index))

    def gradient(self, y):
        """Full gradient [dS_k/dy_j] for j = 0..k, shape (..., k+1)."""
        y = np.asarray(y, dtype=float)
        k = self.index
        nodes, half_weights = self.quadrature(y)
        slope = half_weights * self.rectifier.derivative(self._field(nodes, k))
        anchor = self.anchor(y)
        columns = [
            self._field(anchor, j) + np.sum(slope * self._field(nodes, j, k), axis=-1) for j in range(k)
        ]
        columns.append(self.diagonal_derivative(y))
        return np.stack(columns, axis=-1)

    def hessian_vector(self, y):
        """[d^2 S_k / dy_j dy_k] for j = 0..k, shape (..., k+1)."""
        y = np.asarray(y, dtype=float)
        k = self.index
        outer = self.rectifier.derivative(self._field(y, k))
        return np.stack([outer * self._field(y, j, k) for j in range(k + 1)], axis=-1)

    def hessian(self, y):
        """Full Hessian of S_k in (y_0..y_k), shape (..., k+1, k+1)."""
        y = np.asarray(y, dtype=float)
        k = self.index
        hessian = np.zeros(y.shape[:-1] + (k + 1, k + 1))
        row_k = self.hessian_vector(y)
        hessian[..., k, :] = row_k
        hessian[..., :, k] = row_k
        if k == 0:
            return hessian
        nodes, half_weights = self.quadrature(y)
        slope_field = self._field(nodes, k)
        first = half_weights * self.rectifier.derivative(slope_field)
        second = half_weights * self.rectifier.second_derivative(slope_field)
        mixed = [self._field(nodes, j, k) for j in range(k)]
        anchor = self.anchor(y)
        for i in range(k):
            for j in range(i, k):
                entry = self._field(anchor, i, j) + np.sum(
                    second * mixed[i] * mixed[j] + first * self._field(nodes, i, j, k), axis=-1
                )
                hessian[..., i, j] = entry
                hessian[..., j, i] = entry
        return hessian

    def to_dict(self):
        return {
            "multi_indices": self.multi_indices.tolist(),
            "coefficients": [float(c) for c in self.coefficients],
            "rectifier": self.rectifier.name,
            "quadrature_points": self.quadrature_points,
        }

    def __repr__(self):
        return (
            f"MonotoneComponent(index={self.index}, n_terms={self.n_terms}, "
            f"rectifier={self.rectifier.name!r})"
        )
