"""
Invertible transport maps S (reference = S(target)) and their inverses T = S^{-1}.

All evaluations accept points with a leading batch shape: y of shape (..., d).
Jacobians have shape (..., d, d) and second derivatives (..., d, d, d) with
``hessians[..., a, b, c] = d^2 S_a / dy_b dy_c``.
"""

import logging

import numpy as np

from apps.core.exceptions import InvalidParameterError, InversionError
from apps.core.utils import as_points, batched_solve, fd_jacobian, matvec, tmula_setting
from apps.map_learning.components import MonotoneComponent

logger = logging.getLogger(__name__)


class TransportMap:
    """Base class; subclasses provide forward, inverse and jacobian."""

    kind = None
    triangular = False

    def __init__(self, dim):
        if dim < 1:
            raise InvalidParameterError(f"Map dimension must be positive, got {dim}")
        self.dim = int(dim)

    def _check(self, points):
        return as_points(points, self.dim)

    def forward(self, y):
        raise NotImplementedError

    def inverse(self, x):
        raise NotImplementedError

    def jacobian(self, y):
        raise NotImplementedError

    def log_det_jacobian(self, y):
        if self.triangular:
            return np.sum(np.log(np.diagonal(self.jacobian(y), axis1=-2, axis2=-1)), axis=-1)
        return np.linalg.slogdet(self.jacobian(y))[1]

    def forward_hessians(self, y):
        """Second derivatives of S; central differences of the Jacobian unless overridden."""
        return fd_jacobian(self.jacobian, self._check(y))

    def component_hessian_vectors(self, y):
        """Rows H_i = [d^2 S_i / dy_j dy_i]_j, shape (..., d, d)."""
        return np.einsum("...iji->...ij", self.forward_hessians(y))

    def grad_log_det(self, y):
        """Gradient of log det J_S."""
        y = self._check(y)
        if self.triangular:
            diagonal = np.diagonal(self.jacobian(y), axis1=-2, axis2=-1)
            return np.sum(self.component_hessian_vectors(y) / diagonal[..., :, None], axis=-2)
        inverse = np.linalg.inv(self.jacobian(y))
        return np.einsum("...ba,...abj->...j", inverse, self.forward_hessians(y))

    def inverse_jacobian(self, x, y=None):
        """J_T(x) = J_S(T(x))^{-1}."""
        y = self.inverse(x) if y is None else y
        return np.linalg.inv(self.jacobian(y))

    def inverse_hessians(self, x, y=None):
        """Second derivatives of T, ``[..., k, i, l] = d^2 T_k / dx_i dx_l``, from those of S."""
        y = self.inverse(x) if y is None else y
        inverse = np.linalg.inv(self.jacobian(y))
        return -np.einsum(
            "...ka,...abc,...bi,...cl->...kil", inverse, self.forward_hessians(y), inverse, inverse
        )

    def to_dict(self):
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim})"


class AffineMap(TransportMap):
    """S(y) = A y + c."""

    kind = "affine"

    def __init__(self, matrix, offset=None):
        matrix = np.array(matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise InvalidParameterError(f"Affine map needs a square matrix, got shape {matrix.shape}")
        super().__init__(matrix.shape[0])
        offset = np.zeros(self.dim) if offset is None else np.array(offset, dtype=float)
        if offset.shape != (self.dim,):
            raise InvalidParameterError(f"Offset must have shape ({self.dim},), got {offset.shape}")
        sign, self._log_det = np.linalg.slogdet(matrix)
        if sign == 0:
            raise InvalidParameterError("Affine map matrix is singular")
        self.matrix = matrix
        self.offset = offset
        self.matrix.setflags(write=False)
        self.offset.setflags(write=False)
        self.triangular = bool(not np.triu(matrix, 1).any() and np.all(np.diag(matrix) > 0))

    @classmethod
    def identity(cls, dim):
        return cls(np.eye(dim))

    @classmethod
    def diagonal(cls, scales, offset=None):
        return cls(np.diag(np.asarray(scales, dtype=float)), offset)

    def forward(self, y):
        return matvec(self.matrix, self._check(y)) + self.offset

    def inverse(self, x):
        x = self._check(x)
        shifted = x - self.offset
        matrix = np.broadcast_to(self.matrix, shifted.shape[:-1] + self.matrix.shape)
        return batched_solve(matrix, shifted)

    def jacobian(self, y):
        y = self._check(y)
        return np.broadcast_to(self.matrix, y.shape[:-1] + self.matrix.shape).copy()

    def log_det_jacobian(self, y):
        return np.full(self._check(y).shape[:-1], self._log_det)

    def forward_hessians(self, y):
        return np.zeros(self._check(y).shape[:-1] + (self.dim,) * 3)

    def grad_log_det(self, y):
        return np.zeros(self._check(y).shape)

    def to_dict(self):
        return {
            "kind": self.kind,
            "dim": self.dim,
            "matrix": self.matrix.tolist(),
            "offset": self.offset.tolist(),
        }


class BananaMap(TransportMap):
    """S(y1, y2) = (y1/s, y2 + b y1^2 - 100 b)."""

    kind = "banana"
    triangular = True

    def __init__(self, s, b):
        if s <= 0:
            raise InvalidParameterError(f"Banana scale s must be positive, got {s}")
        super().__init__(2)
        self.s = float(s)
        self.b = float(b)

    def forward(self, y):
        y = self._check(y)
        y1, y2 = y[..., 0], y[..., 1]
        return np.stack([y1 / self.s, y2 + self.b * y1**2 - 100.0 * self.b], axis=-1)

    def inverse(self, x):
        x = self._check(x)
        y1 = self.s * x[..., 0]
        return np.stack([y1, x[..., 1] - self.b * y1**2 + 100.0 * self.b], axis=-1)

    def jacobian(self, y):
        y = self._check(y)
        jacobian = np.zeros(y.shape[:-1] + (2, 2))
        jacobian[..., 0, 0] = 1.0 / self.s
        jacobian[..., 1, 0] = 2.0 * self.b * y[..., 0]
        jacobian[..., 1, 1] = 1.0
        return jacobian

    def log_det_jacobian(self, y):
        return np.full(self._check(y).shape[:-1], -np.log(self.s))

    def forward_hessians(self, y):
        hessians = np.zeros(self._check(y).shape[:-1] + (2, 2, 2))
        hessians[..., 1, 0, 0] = 2.0 * self.b
        return hessians

    def inverse_jacobian(self, x, y=None):
        x = self._check(x)
        jacobian = np.zeros(x.shape[:-1] + (2, 2))
        jacobian[..., 0, 0] = self.s
        jacobian[..., 1, 0] = -2.0 * self.b * self.s**2 * x[..., 0]
        jacobian[..., 1, 1] = 1.0
        return jacobian

    def inverse_hessians(self, x, y=None):
        hessians = np.zeros(self._check(x).shape[:-1] + (2, 2, 2))
        hessians[..., 1, 0, 0] = -2.0 * self.b * self.s**2
        return hessians

    def to_dict(self):
        return {"kind": self.kind, "dim": self.dim, "s": self.s, "b": self.b}


def rosenbrock_layout(n1, n2):
    """Parent index of every coordinate in the hybrid Rosenbrock ordering (-1 for y_1)."""
    parents = [-1]
    for _ in range(n2):
        previous = 0
        for _ in range(2, n1 + 1):
            parents.append(previous)
            previous = len(parents) - 1
    return np.array(parents, dtype=int)


class RosenbrockMap(TransportMap):
    """
    Exact normalizing map of the hybrid Rosenbrock density.

    S_1 = sqrt(2a)(y_1 - mu) and S_{j,i} = sqrt(2 b_ji)(y_{j,i} - y_{j,i-1}^2), where
    y_{j,1} is the shared coordinate y_1.
    """

    kind = "rosenbrock"
    triangular = True

    def __init__(self, n1, n2, mu, a, b):
        if n1 < 2 or n2 < 1:
            raise InvalidParameterError(f"Hybrid Rosenbrock needs n1 >= 2 and n2 >= 1, got ({n1}, {n2})")
        b = np.asarray(b, dtype=float)
        if b.ndim == 0:
            b = np.full((n2, n1 - 1), float(b))
        if b.shape != (n2, n1 - 1):
            raise InvalidParameterError(f"b must have shape ({n2}, {n1 - 1}), got {b.shape}")
        if a <= 0 or np.any(b <= 0):
            raise InvalidParameterError("Hybrid Rosenbrock coefficients a and b must be positive")
        super().__init__((n1 - 1) * n2 + 1)
        self.n1, self.n2 = int(n1), int(n2)
        self.mu, self.a = float(mu), float(a)
        self.b = np.array(b, dtype=float)
        self.parents = rosenbrock_layout(n1, n2)
        self.scales = np.sqrt(2.0 * np.concatenate([[self.a], self.b.reshape(-1)]))

    def forward(self, y):
        y = self._check(y)
        shifted = np.empty_like(y)
        shifted[..., 0] = y[..., 0] - self.mu
        shifted[..., 1:] = y[..., 1:] - y[..., self.parents[1:]] ** 2
        return self.scales * shifted

    def inverse(self, x):
        x = self._check(x)
        y = np.empty_like(x)
        y[..., 0] = x[..., 0] / self.scales[0] + self.mu
        for k in range(1, self.dim):
            y[..., k] = x[..., k] / self.scales[k] + y[..., self.parents[k]] ** 2
        return y

    def jacobian(self, y):
        y = self._check(y)
        jacobian = np.zeros(y.shape[:-1] + (self.dim, self.dim))
        index = np.arange(self.dim)
        jacobian[..., index, index] = self.scales
        rows = index[1:]
        jacobian[..., rows, self.parents[1:]] = -2.0 * self.scales[1:] * y[..., self.parents[1:]]
        return jacobian

    def log_det_jacobian(self, y):
        return np.full(self._check(y).shape[:-1], np.sum(np.log(self.scales)))

    def forward_hessians(self, y):
        hessians = np.zeros(self._check(y).shape[:-1] + (self.dim,) * 3)
        rows = np.arange(1, self.dim)
        parents = self.parents[1:]
        hessians[..., rows, parents, parents] = -2.0 * self.scales[1:]
        return hessians

    def to_dict(self):
        return {
            "kind": self.kind,
            "dim": self.dim,
            "n1": self.n1,
            "n2": self.n2,
            "mu": self.mu,
            "a": self.a,
            "b": self.b.tolist(),
        }


class TriangularMap(TransportMap):
    """Lower-triangular map assembled from rectified-integral monotone components."""

    kind = "triangular"
    triangular = True

    def __init__(self, components, inversion_tol=None, max_doublings=None):
        components = list(components)
        super().__init__(len(components))
        for k, component in enumerate(components):
            if not isinstance(component, MonotoneComponent) or component.index != k:
                raise InvalidParameterError(f"Component {k} is missing or has the wrong index")
        self.components = tuple(components)
        self.inversion_tol = tmula_setting("INVERSION_TOL", inversion_tol)
        self.max_doublings = tmula_setting("INVERSION_MAX_DOUBLINGS", max_doublings)

    @classmethod
    def identity(cls, dim, order=1, rectifier="softplus", quadrature_points=None):
        return cls([MonotoneComponent.identity(k, order, rectifier, quadrature_points) for k in range(dim)])

    def forward(self, y):
        y = self._check(y)
        return np.stack([c.evaluate(y[..., : c.index + 1])[0] for c in self.components], axis=-1)

    def diagonal(self, y):
        y = self._check(y)
        return np.stack([c.diagonal_derivative(y[..., : c.index + 1]) for c in self.components], axis=-1)

    def jacobian(self, y):
        y = self._check(y)
        jacobian = np.zeros(y.shape[:-1] + (self.dim, self.dim))
        for c in self.components:
            jacobian[..., c.index, : c.index + 1] = c.gradient(y[..., : c.index + 1])
        return jacobian

    def log_det_jacobian(self, y):
        return np.sum(np.log(self.diagonal(y)), axis=-1)

    def component_hessian_vectors(self, y):
        y = self._check(y)
        vectors = np.zeros(y.shape[:-1] + (self.dim, self.dim))
        for c in self.components:
            vectors[..., c.index, : c.index + 1] = c.hessian_vector(y[..., : c.index + 1])
        return vectors

    def grad_log_det(self, y):
        y = self._check(y)
        return np.sum(self.component_hessian_vectors(y) / self.diagonal(y)[..., :, None], axis=-2)

    def forward_hessians(self, y):
        y = self._check(y)
        hessians = np.zeros(y.shape[:-1] + (self.dim,) * 3)
        for c in self.components:
            size = c.index + 1
            hessians[..., c.index, :size, :size] = c.hessian(y[..., :size])
        return hessians

    def inverse(self, x):
        """Sequential one-dimensional root finds, one per component."""
        x = self._check(x)
        y = np.zeros_like(x)
        for c in self.components:
            y[..., c.index] = self._invert_component(c, y[..., : c.index + 1], x[..., c.index])
        return y

    def _invert_component(self, component, prefix, target):
        k = component.index
        shape = target.shape
        points = np.array(prefix, dtype=float, copy=True).reshape(-1, k + 1)
        target = target.reshape(-1)

        def residual(t):
            points[:, k] = t
            value, slope = component.evaluate(points)
            return value - target, slope

        lower = -np.ones_like(target)
        upper = np.ones_like(target)
        for _ in range(self.max_doublings + 1):
            low_residual = residual(lower)[0]
            high_residual = residual(upper)[0]
            grow_low = low_residual > 0
            grow_high = high_residual < 0
            if not (grow_low.any() or grow_high.any()):
                break
            lower = np.where(grow_low, 2.0 * lower, lower)
            upper = np.where(grow_high, 2.0 * upper, upper)
        else:
            raise InversionError(
                f"Could not bracket the root of component {k} after {self.max_doublings} doublings",
                component=k,
            )

        t = np.clip(np.zeros_like(target), lower, upper)
        tolerance = self.inversion_tol * np.maximum(1.0, np.abs(target))
        for _ in range(200):
            value, slope = residual(t)
            done = np.abs(value) <= tolerance
            narrow = (upper - lower) <= 4.0 * np.finfo(float).eps * np.maximum(1.0, np.abs(t))
            if np.all(done | narrow):
                return t.reshape(shape)
            upper = np.where(value > 0, t, upper)
            lower = np.where(value < 0, t, lower)
            newton = t - value / slope
            inside = (newton > lower) & (newton < upper) & np.isfinite(newton)
            t = np.where(done | narrow, t, np.where(inside, newton, 0.5 * (lower + upper)))
        raise InversionError(f"Root search for component {k} did not converge", component=k)

    def to_dict(self):
        return {
            "kind": self.kind,
            "dim": self.dim,
            "components": [c.to_dict() for c in self.components],
        }


class ComposedMap(TransportMap):
    """S = outer o inner."""

    kind = "composed"

    def __init__(self, outer, inner):
        if outer.dim != inner.dim:
            raise InvalidParameterError(f"Cannot compose maps of dimensions {outer.dim} and {inner.dim}")
        super().__init__(outer.dim)
        self.outer = outer
        self.inner = inner
        self.triangular = outer.triangular and inner.triangular

    def forward(self, y):
        return self.outer.forward(self.inner.forward(y))

    def inverse(self, x):
        return self.inner.inverse(self.outer.inverse(x))

    def jacobian(self, y):
        y = self._check(y)
        return np.matmul(self.outer.jacobian(self.inner.forward(y)), self.inner.jacobian(y))

    def log_det_jacobian(self, y):
        y = self._check(y)
        return self.outer.log_det_jacobian(self.inner.forward(y)) + self.inner.log_det_jacobian(y)

    def grad_log_det(self, y):
        y = self._check(y)
        inner_jacobian = self.inner.jacobian(y)
        outer_grad = self.outer.grad_log_det(self.inner.forward(y))
        return matvec(np.swapaxes(inner_jacobian, -1, -2), outer_grad) + self.inner.grad_log_det(y)

    def forward_hessians(self, y):
        y = self._check(y)
        z = self.inner.forward(y)
        inner_jacobian = self.inner.jacobian(y)
        return np.einsum(
            "...apq,...pb,...qc->...abc", self.outer.forward_hessians(z), inner_jacobian, inner_jacobian
        ) + np.einsum("...ap,...pbc->...abc", self.outer.jacobian(z), self.inner.forward_hessians(y))

    def to_dict(self):
        if isinstance(self.outer, TriangularMap) and isinstance(self.inner, AffineMap):
            document = self.outer.to_dict()
            document["pre_map"] = self.inner.to_dict()
            return document
        return {
            "kind": self.kind,
            "dim": self.dim,
            "outer": self.outer.to_dict(),
            "inner": self.inner.to_dict(),
        }


def compose(outer, inner):
    return ComposedMap(outer, inner)


def banana_map(s, b):
    return BananaMap(s, b)
