"""
Pointwise checks that Langevin dynamics in reference coordinates, mapped back through T,
are the Riemannian (and geometry-informed irreversible) dynamics in target coordinates.

Both sides of every identity are computed independently: the mapped side from the
analytic second derivatives of T, the target side by central differences of the metric.
Residuals are relative to max(1, |target side|).
"""

import logging
from dataclasses import asdict, dataclass

import numpy as np

from apps.core.exceptions import InvalidParameterError
from apps.core.utils import fd_divergence, fd_jacobian, matvec, skew_violation
from apps.samplers.config import SKEW_TOL
from apps.transport.pushforward import pushforward_grad_log_density

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-5
SKEW_CANCELLATION_TOL = 1e-8
LOG_DET_IDENTITY_TOL = 1e-6
SAMPLING_BOX = 5.0


@dataclass
class EquivalenceReport:
    point: list
    drift_residual: float
    diffusion_residual: float
    tolerance: float
    skew_residual: float = None

    @property
    def passed(self):
        passed = self.drift_residual <= self.tolerance and self.diffusion_residual <= self.tolerance
        if self.skew_residual is not None:
            passed = passed and self.skew_residual <= SKEW_CANCELLATION_TOL
        return bool(passed)

    def to_dict(self):
        return {**asdict(self), "passed": self.passed}


def _relative(difference, scale):
    return float(np.linalg.norm(difference) / max(1.0, float(np.linalg.norm(scale))))


def _as_point(transport_map, y):
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.shape != (transport_map.dim,):
        raise InvalidParameterError(f"Expected a point of dimension {transport_map.dim}, got shape {y.shape}")
    return y


def _skew(skew, dim):
    skew = np.zeros((dim, dim)) if skew is None else np.asarray(skew, dtype=float)
    if skew.shape != (dim, dim):
        raise InvalidParameterError(f"Skew matrix must be {dim}x{dim}, got shape {skew.shape}")
    if skew_violation(skew) > SKEW_TOL:
        raise InvalidParameterError(f"Matrix violates D = -D^T by {skew_violation(skew):.3e}")
    return skew


def perturbed_metric(transport_map, skew):
    """P(y) = J_T (I + D) J_T^T with J_T = J_S(y)^{-1}; D = 0 gives B(y)."""
    generator = np.eye(transport_map.dim) + skew

    def metric(y):
        inverse = np.linalg.inv(transport_map.jacobian(y))
        return inverse @ generator @ np.swapaxes(inverse, -1, -2)

    return metric


def mapped_drift(target, transport_map, y, skew=None):
    """
    Drift of Y = T(X) for dX = (I + D) grad log eta(X) dt + sqrt(2) dW:
    J_T (I + D) grad_x log eta + c, with c_k = sum_i d^2 T_k / dx_i^2.
    """
    skew = _skew(skew, transport_map.dim)
    x = transport_map.forward(y)
    score = pushforward_grad_log_density(target, transport_map, x, y)
    inverse_jacobian = transport_map.inverse_jacobian(x, y)
    correction = np.einsum("...kii->...k", transport_map.inverse_hessians(x, y))
    return matvec(inverse_jacobian, matvec(np.eye(transport_map.dim) + skew, score)) + correction


def target_drift(target, transport_map, y, skew=None, step=None):
    """P grad log pi + div P with the row divergence taken by central differences."""
    metric = perturbed_metric(transport_map, _skew(skew, transport_map.dim))
    return matvec(metric(y), target.grad_log_density(y)) + fd_divergence(metric, y, step)


def skew_cancellation_residual(transport_map, skew, y):
    """max_k |sum_{i,l} D_li d^2 T_k / dx_i dx_l|, zero by symmetry of second derivatives."""
    skew = _skew(skew, transport_map.dim)
    x = transport_map.forward(y)
    hessians = transport_map.inverse_hessians(x, y)
    return float(np.max(np.abs(np.einsum("li,...kil->...k", skew, hessians))))


def diffusion_residual(transport_map, y, step=None):
    """|J_T - B^{1/2}| with J_T by differences of the inverse map and B^{1/2} = J_S^{-1}."""
    y = np.atleast_2d(y)
    x = transport_map.forward(y)
    root = np.linalg.inv(transport_map.jacobian(y))
    return _relative(fd_jacobian(transport_map.inverse, x, step) - root, root)


def check_tmrmld_equivalence(target, transport_map, y, tol=DEFAULT_TOLERANCE):
    y = _as_point(transport_map, y)
    expected = target_drift(target, transport_map, y[None])[0]
    drift = _relative(mapped_drift(target, transport_map, y[None])[0] - expected, expected)
    report = EquivalenceReport(y.tolist(), drift, diffusion_residual(transport_map, y), tol)
    logger.debug(f"tmrmld check at {y}: drift {drift:.2e}, diffusion {report.diffusion_residual:.2e}")
    return report


def check_giirr_equivalence(target, transport_map, skew, y, tol=DEFAULT_TOLERANCE):
    y = _as_point(transport_map, y)
    skew = _skew(skew, transport_map.dim)
    expected = target_drift(target, transport_map, y[None], skew)[0]
    drift = _relative(mapped_drift(target, transport_map, y[None], skew)[0] - expected, expected)
    return EquivalenceReport(
        y.tolist(),
        drift,
        diffusion_residual(transport_map, y),
        tol,
        skew_residual=skew_cancellation_residual(transport_map, skew, y[None]),
    )


def log_det_identity_residual(transport_map, y, step=None):
    """
    Relative norm of grad_y log det J_S + J_S^T (div J_S^{-T}), which vanishes for every
    smooth invertible map. The divergence is taken by central differences.
    """
    y = np.atleast_2d(np.asarray(y, dtype=float))

    def inverse_transpose(points):
        return np.swapaxes(np.linalg.inv(transport_map.jacobian(points)), -1, -2)

    gradient = transport_map.grad_log_det(y)
    divergence = fd_divergence(inverse_transpose, y, step)
    term = matvec(np.swapaxes(transport_map.jacobian(y), -1, -2), divergence)
    scale = max(1.0, float(np.max(np.abs(gradient))), float(np.max(np.abs(term))))
    return float(np.max(np.abs(gradient + term)) / scale)


def sample_box(dim, n_points, seed, half_width=SAMPLING_BOX):
    """Uniform points in [-half_width, half_width]^dim."""
    return np.random.default_rng(seed).uniform(-half_width, half_width, size=(int(n_points), dim))
