"""
Discrete-time Langevin kernels.

Step functions take a batch of states of shape (..., d) and noise of the same shape.
Schemes that work in reference coordinates keep x = S(y) as the authoritative state and
return both x' and y' = T(x').
"""

import logging
from dataclasses import dataclass

import numpy as np

from apps.core.exceptions import InvalidParameterError, StepError
from apps.core.utils import fd_divergence, fd_jacobian, matvec
from apps.transport.pushforward import pushforward_grad_log_density

from .implicit import solve_or_raise

logger = logging.getLogger(__name__)


def _finite(values, label):
    if not np.all(np.isfinite(values)):
        raise StepError(f"Nonfinite {label}")
    return values


def _noise_scale(h):
    return np.sqrt(2.0 * h)


def _inverse_jacobian(transport_map, y):
    try:
        return np.linalg.inv(transport_map.jacobian(y))
    except np.linalg.LinAlgError as err:
        raise StepError(f"Singular map Jacobian: {err}") from err


def _reference_score(target, transport_map, x, y):
    return _finite(pushforward_grad_log_density(target, transport_map, x, y), "pushforward score")


def metric_divergence(inverse_jacobian, hessians, metric):
    """
    Row divergence of P(y) = J_S^{-1} M J_S^{-T} for a constant M, given P itself,
    J_S^{-1} and the second derivatives of S.
    """
    return -np.einsum("...ia,...abj,...bj->...i", inverse_jacobian, hessians, metric) - np.einsum(
        "...ia,...baj,...jb->...i", metric, hessians, inverse_jacobian
    )


def ula_step(target, y, h, xi):
    """y' = y + h grad log pi(y) + sqrt(2h) xi."""
    drift = _finite(target.grad_log_density(y), "target score")
    return y + h * drift + _noise_scale(h) * xi


def tmula_step(target, transport_map, x, h, xi, y=None):
    """Langevin step for the pushforward density in reference space, mapped back through T."""
    y = transport_map.inverse(x) if y is None else y
    drift = _reference_score(target, transport_map, x, y)
    x_next = x + h * drift + _noise_scale(h) * xi
    return x_next, transport_map.inverse(x_next)


def reference_irr_step(target, transport_map, x, h, xi, skew, y=None):
    """x' = x + h (I + D) grad log eta(x) + sqrt(2h) xi, y' = T(x')."""
    y = transport_map.inverse(x) if y is None else y
    score = _reference_score(target, transport_map, x, y)
    drift = matvec(np.eye(transport_map.dim) + skew, score)
    x_next = x + h * drift + _noise_scale(h) * xi
    return x_next, transport_map.inverse(x_next)


def _target_space_step(target, transport_map, y, h, xi, skew=None):
    inverse_jacobian = _inverse_jacobian(transport_map, y)
    transposed = np.swapaxes(inverse_jacobian, -1, -2)
    if skew is None:
        metric = inverse_jacobian @ transposed
    else:
        metric = inverse_jacobian @ (np.eye(transport_map.dim) + skew) @ transposed
    divergence = metric_divergence(inverse_jacobian, transport_map.forward_hessians(y), metric)
    score = _finite(target.grad_log_density(y), "target score")
    drift = _finite(matvec(metric, score), "drift")
    return y + h * drift + h * divergence + _noise_scale(h) * matvec(inverse_jacobian, xi)


def emrmld_step(target, transport_map, y, h, xi):
    """
    Euler-Maruyama step of the Riemannian dynamics with metric B = (J_S^T J_S)^{-1}:
    y' = y + h B grad log pi + h div B + sqrt(2h) J_S^{-1} xi.
    """
    return _target_space_step(target, transport_map, y, h, xi)


def emrmld_irr_step(target, transport_map, y, h, xi, skew):
    """Euler-Maruyama step with drift P grad log pi + div P, P = J_T (I + D) J_T^T."""
    return _target_space_step(target, transport_map, y, h, xi, skew)


def rmld_step(target, y, h, xi):
    """Euler-Maruyama step with the target's own metric B(y); div B by central differences."""
    metric = target.metric(y)
    try:
        factor = np.linalg.cholesky(metric)
    except np.linalg.LinAlgError as err:
        raise StepError(f"Metric is not positive definite: {err}") from err
    divergence = fd_divergence(target.metric, y)
    score = _finite(target.grad_log_density(y), "target score")
    drift = _finite(matvec(metric, score) + divergence, "drift")
    return y + h * drift + _noise_scale(h) * matvec(factor, xi)


def tmuila_reference_step(target, transport_map, x, h, xi, solver=None):
    """
    Split-step implicit step in reference coordinates: solve u - x - h grad log eta(u) = 0
    starting from u = x, then x' = u + sqrt(2h) xi and y' = T(x').
    """
    dim = transport_map.dim
    start = np.asarray(x, dtype=float).reshape(-1, dim)

    def score(u):
        return pushforward_grad_log_density(target, transport_map, u)

    result = solve_or_raise(
        lambda u, rows: u - start[rows] - h * score(u),
        lambda u, rows: np.eye(dim) - h * fd_jacobian(score, u),
        start,
        start,
        solver,
        "tmuila",
    )
    x_next = result.u.reshape(np.shape(x)) + _noise_scale(h) * xi
    return x_next, transport_map.inverse(x_next)


def tmuila_step(target, transport_map, y, h, xi, solver=None):
    return tmuila_reference_step(target, transport_map, transport_map.forward(y), h, xi, solver)[1]


def uila_step(target, y, h, xi, solver=None):
    """Solve y* = y + h grad log pi(y*) by damped Newton from y* = y, then y' = y* + sqrt(2h) xi."""
    dim = target.dim
    start = np.asarray(y, dtype=float).reshape(-1, dim)
    result = solve_or_raise(
        lambda u, rows: u - start[rows] - h * target.grad_log_density(u),
        lambda u, rows: np.eye(dim) - h * target.hess_log_density(u),
        start,
        start,
        solver,
        "uila",
    )
    return result.u.reshape(np.shape(y)) + _noise_scale(h) * xi


@dataclass
class KernelState:
    """Target-space state y and, for reference-space schemes, the authoritative x = S(y)."""

    y: np.ndarray
    x: np.ndarray = None

    def take(self, rows):
        return KernelState(self.y[rows], None if self.x is None else self.x[rows])

    def put(self, rows, other):
        self.y[rows] = other.y
        if self.x is not None:
            self.x[rows] = other.x

    def sup_norm(self):
        norm = np.max(np.abs(self.y), axis=-1)
        if self.x is not None:
            norm = np.maximum(norm, np.max(np.abs(self.x), axis=-1))
        return np.where(np.isfinite(norm), norm, np.inf)


class Kernel:
    """A configured scheme applied to ensembles of states of shape (n, d)."""

    scheme = None
    reference_space = False

    def __init__(self, target, config):
        self.target = target
        self.config = config
        self.h = config.step_size
        self.map = config.transport_map
        if self.map is not None and self.map.dim != target.dim:
            raise InvalidParameterError(
                f"Map dimension {self.map.dim} does not match target dimension {target.dim}"
            )

    def initial_state(self, y0):
        y0 = np.array(y0, dtype=float)
        if self.reference_space:
            return KernelState(y0, self.map.forward(y0))
        return KernelState(y0)

    def advance(self, state, xi):
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}(h={self.h})"


class UlaKernel(Kernel):
    scheme = "ula"

    def advance(self, state, xi):
        return KernelState(ula_step(self.target, state.y, self.h, xi))


class TmulaKernel(Kernel):
    scheme = "tmula"
    reference_space = True

    def advance(self, state, xi):
        x_next, y_next = tmula_step(self.target, self.map, state.x, self.h, xi, state.y)
        return KernelState(y_next, x_next)


class TmulaIrrKernel(Kernel):
    scheme = "tmula_irr"
    reference_space = True

    def __init__(self, target, config):
        super().__init__(target, config)
        self.skew = config.skew_for(target.dim)

    def advance(self, state, xi):
        x_next, y_next = reference_irr_step(self.target, self.map, state.x, self.h, xi, self.skew, state.y)
        return KernelState(y_next, x_next)


class TmuilaKernel(Kernel):
    scheme = "tmuila"
    reference_space = True

    def advance(self, state, xi):
        x_next, y_next = tmuila_reference_step(
            self.target, self.map, state.x, self.h, xi, self.config.implicit_solver
        )
        return KernelState(y_next, x_next)


class EmrmldKernel(Kernel):
    scheme = "emrmld"

    def advance(self, state, xi):
        return KernelState(emrmld_step(self.target, self.map, state.y, self.h, xi))


class EmrmldIrrKernel(TmulaIrrKernel):
    scheme = "emrmld_irr"
    reference_space = False

    def advance(self, state, xi):
        return KernelState(emrmld_irr_step(self.target, self.map, state.y, self.h, xi, self.skew))


class UilaKernel(Kernel):
    scheme = "uila"

    def advance(self, state, xi):
        return KernelState(uila_step(self.target, state.y, self.h, xi, self.config.implicit_solver))


class RmldKernel(Kernel):
    scheme = "rmld"

    def __init__(self, target, config):
        super().__init__(target, config)
        if not target.has_metric:
            raise InvalidParameterError(f"Target '{target.name}' has no metric for the rmld scheme")

    def advance(self, state, xi):
        return KernelState(rmld_step(self.target, state.y, self.h, xi))


KERNELS = {
    kernel.scheme: kernel
    for kernel in (
        UlaKernel,
        TmulaKernel,
        TmulaIrrKernel,
        TmuilaKernel,
        EmrmldKernel,
        EmrmldIrrKernel,
        UilaKernel,
        RmldKernel,
    )
}


def build_kernel(target, config):
    return KERNELS[config.scheme](target, config)
