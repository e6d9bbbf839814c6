"""
Non-asymptotic Wasserstein bounds for Langevin chains and the closed-form W2 distance between
Gaussians.
"""

import numpy as np
from scipy import linalg

from apps.core.exceptions import InvalidParameterError

PSD_TOL = 1e-12


def contraction_constant(m, L):
    """kappa = 2 m L / (m + L)."""
    return 2.0 * m * L / (m + L)


def discretization_constant(m, L, h, d):
    """C = (2 L^2 d / kappa) h (1/kappa + h) (2 + L^2 h / m + L^2 h^2 / 6)."""
    kappa = contraction_constant(m, L)
    return (2.0 * L**2 * d / kappa) * h * (1.0 / kappa + h) * (2.0 + L**2 * h / m + L**2 * h**2 / 6.0)


def wasserstein_bound(m, L, h, k, d, dist0_sq, rho=1.0):
    """
    Bound on W2^2 between the law of the k-th iterate and the target for a strongly
    log-concave pushforward with constants (m, L) and a map whose inverse has Lipschitz
    constant 1/rho:

        (1/rho^2) [ (1 - kappa h / 2)^k (2 dist0_sq + 2 d / m - C) + C ].

    rho = 1 gives the bound for plain ULA.
    """
    if not 0 < m <= L:
        raise InvalidParameterError(f"Need 0 < m <= L, got m={m}, L={L}")
    if not 0 < h <= 1.0 / (m + L):
        raise InvalidParameterError(f"Step size must lie in (0, 1/(m+L)] = (0, {1.0 / (m + L):g}], got {h}")
    if rho <= 0 or k < 0 or d < 1 or dist0_sq < 0:
        raise InvalidParameterError(f"Invalid bound inputs k={k}, d={d}, dist0_sq={dist0_sq}, rho={rho}")
    kappa = contraction_constant(m, L)
    constant = discretization_constant(m, L, h, d)
    rate = 1.0 - kappa * h / 2.0
    return float((rate**k * (2.0 * dist0_sq + 2.0 * d / m - constant) + constant) / rho**2)


def _check_covariance(cov, label):
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    if cov.shape[0] != cov.shape[1] or not np.allclose(cov, cov.T, rtol=0, atol=PSD_TOL * (1 + np.abs(cov).max())):
        raise InvalidParameterError(f"{label} must be a symmetric matrix")
    if np.linalg.eigvalsh(cov).min() < -PSD_TOL * (1 + np.abs(cov).max()):
        raise InvalidParameterError(f"{label} is not positive semidefinite")
    return cov


def gaussian_w2(mean1, cov1, mean2, cov2, squared=False):
    """
    W2 between N(mean1, cov1) and N(mean2, cov2):

        W2^2 = ||mean1 - mean2||^2 + tr(C1 + C2 - 2 (C2^{1/2} C1 C2^{1/2})^{1/2}).
    """
    mean1 = np.atleast_1d(np.asarray(mean1, dtype=float))
    mean2 = np.atleast_1d(np.asarray(mean2, dtype=float))
    cov1 = _check_covariance(cov1, "cov1")
    cov2 = _check_covariance(cov2, "cov2")
    if not (mean1.shape == mean2.shape and cov1.shape == cov2.shape == (mean1.size, mean1.size)):
        raise InvalidParameterError("Means and covariances must have matching dimensions")
    root2 = np.real(linalg.sqrtm(cov2))
    cross = np.real(linalg.sqrtm(root2 @ cov1 @ root2))
    value = float(np.sum((mean1 - mean2) ** 2) + np.trace(cov1 + cov2 - 2.0 * cross))
    value = max(value, 0.0)
    return value if squared else float(np.sqrt(value))
