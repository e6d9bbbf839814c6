"""
Unnormalized target densities.

Every target evaluates on points with a leading batch shape, y of shape (..., d).
Log-densities are defined up to an additive constant.
"""

import logging

import numpy as np
from scipy.special import logsumexp, softmax

from apps.core.exceptions import InvalidParameterError
from apps.core.utils import as_points, matvec
from apps.transport.maps import AffineMap, BananaMap, RosenbrockMap, rosenbrock_layout

logger = logging.getLogger(__name__)


class TargetDensity:
    """Base class for log pi with gradient and Hessian."""

    name = None
    # exact_map pushes the target to N(0, reference_variance * I)
    reference_variance = 1.0
    has_metric = False

    def __init__(self, dim, params=None, exact_map=None):
        if dim < 1:
            raise InvalidParameterError(f"Target dimension must be positive, got {dim}")
        self.dim = int(dim)
        self.params = dict(params or {})
        self.exact_map = exact_map

    def _check(self, y):
        return as_points(y, self.dim)

    def log_density(self, y):
        raise NotImplementedError

    def grad_log_density(self, y):
        raise NotImplementedError

    def hess_log_density(self, y):
        raise NotImplementedError

    def metric(self, y):
        """Position-dependent preconditioner B(y) for the general reversible scheme."""
        raise InvalidParameterError(f"Target '{self.name}' does not define a metric")

    @property
    def can_sample_exactly(self):
        return self.exact_map is not None

    def sample_exact(self, n, seed):
        """Draw T(Z) with Z ~ N(0, reference_variance * I)."""
        if self.exact_map is None:
            raise InvalidParameterError(f"Target '{self.name}' has no exact sampler")
        rng = np.random.default_rng(seed)
        reference = np.sqrt(self.reference_variance) * rng.standard_normal((int(n), self.dim))
        return self.exact_map.inverse(reference)

    def describe(self):
        return {"name": self.name, **self.params}

    def __repr__(self):
        return f"{type(self).__name__}({self.params})"


class BananaTarget(TargetDensity):
    """log pi(y) = -y1^2/s^2 - (y2 + b y1^2 - 100 b)^2."""

    name = "banana"
    reference_variance = 0.5

    def __init__(self, s=4.0, b=0.01):
        if s <= 0:
            raise InvalidParameterError(f"Banana scale s must be positive, got {s}")
        super().__init__(2, {"s": float(s), "b": float(b)}, BananaMap(s, b))
        self.s = float(s)
        self.b = float(b)

    def _bend(self, y):
        return y[..., 1] + self.b * y[..., 0] ** 2 - 100.0 * self.b

    def log_density(self, y):
        y = self._check(y)
        return -y[..., 0] ** 2 / self.s**2 - self._bend(y) ** 2

    def grad_log_density(self, y):
        y = self._check(y)
        bend = self._bend(y)
        return np.stack(
            [-2.0 * y[..., 0] / self.s**2 - 4.0 * self.b * y[..., 0] * bend, -2.0 * bend], axis=-1
        )

    def hess_log_density(self, y):
        y = self._check(y)
        bend = self._bend(y)
        hessian = np.empty(y.shape[:-1] + (2, 2))
        hessian[..., 0, 0] = -2.0 / self.s**2 - 4.0 * self.b * bend - 8.0 * self.b**2 * y[..., 0] ** 2
        hessian[..., 0, 1] = hessian[..., 1, 0] = -4.0 * self.b * y[..., 0]
        hessian[..., 1, 1] = -2.0
        return hessian


class FunnelPosterior(TargetDensity):
    """
    Posterior of (mu, gamma = log sigma) for X_i ~ N(mu, sigma^2) with a N(0, 3) prior on mu
    and a Gamma(alpha, beta) prior on sigma.
    """

    name = "funnel"
    has_metric = True

    def __init__(self, data, alpha=0.75, beta=0.5, prior_variance=3.0):
        data = np.asarray(data, dtype=float).reshape(-1)
        if data.size == 0:
            raise InvalidParameterError("Funnel posterior needs at least one data point")
        super().__init__(2, {"alpha": float(alpha), "beta": float(beta)})
        self.data = data
        self.data.setflags(write=False)
        self.n = data.size
        self.data_mean = float(np.mean(data))
        self.data_scatter = float(np.sum((data - self.data_mean) ** 2))
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.prior_variance = float(prior_variance)

    def describe(self):
        return {"name": self.name, "data": self.data.tolist(), "alpha": self.alpha, "beta": self.beta}

    def _sum_sq(self, mu):
        return self.data_scatter + self.n * (self.data_mean - mu) ** 2

    def log_density(self, y):
        y = self._check(y)
        mu, gamma = y[..., 0], y[..., 1]
        return (
            -self.n * gamma
            - 0.5 * np.exp(-2.0 * gamma) * self._sum_sq(mu)
            - mu**2 / (2.0 * self.prior_variance)
            + self.alpha * gamma
            - self.beta * np.exp(gamma)
        )

    def grad_log_density(self, y):
        y = self._check(y)
        mu, gamma = y[..., 0], y[..., 1]
        precision = np.exp(-2.0 * gamma)
        d_mu = precision * self.n * (self.data_mean - mu) - mu / self.prior_variance
        d_gamma = -self.n + precision * self._sum_sq(mu) + self.alpha - self.beta * np.exp(gamma)
        return np.stack([d_mu, d_gamma], axis=-1)

    def hess_log_density(self, y):
        y = self._check(y)
        mu, gamma = y[..., 0], y[..., 1]
        precision = np.exp(-2.0 * gamma)
        hessian = np.empty(y.shape[:-1] + (2, 2))
        hessian[..., 0, 0] = -self.n * precision - 1.0 / self.prior_variance
        hessian[..., 0, 1] = hessian[..., 1, 0] = -2.0 * precision * self.n * (self.data_mean - mu)
        hessian[..., 1, 1] = -2.0 * precision * self._sum_sq(mu) - self.beta * np.exp(gamma)
        return hessian

    def metric(self, y):
        """Inverse of expected Fisher information plus negative log-prior Hessian."""
        y = self._check(y)
        gamma = y[..., 1]
        metric = np.zeros(y.shape[:-1] + (2, 2))
        metric[..., 0, 0] = 1.0 / (self.n * np.exp(-2.0 * gamma) + 1.0 / self.prior_variance)
        metric[..., 1, 1] = 1.0 / (2.0 * self.n + self.beta * np.exp(gamma))
        return metric


class HybridRosenbrock(TargetDensity):
    """pi(y) ~ exp{-a (y_1 - mu)^2 - sum_j sum_i b_ji (y_ji - y_j,i-1^2)^2}."""

    name = "hybrid_rosenbrock"

    def __init__(self, n1=4, n2=2, mu=1.0, a=30.0, b=20.0):
        exact_map = RosenbrockMap(n1, n2, mu, a, b)
        super().__init__(
            exact_map.dim,
            {"n1": int(n1), "n2": int(n2), "mu": float(mu), "a": float(a), "b": exact_map.b.tolist()},
            exact_map,
        )
        self.mu = float(mu)
        self.parents = rosenbrock_layout(n1, n2)
        self.weights = np.concatenate([[float(a)], exact_map.b.reshape(-1)])
        children = np.zeros((self.dim, self.dim))
        children[self.parents[1:], np.arange(1, self.dim)] = 1.0
        self.children = children

    def _residuals(self, y):
        residuals = np.empty_like(y)
        residuals[..., 0] = y[..., 0] - self.mu
        residuals[..., 1:] = y[..., 1:] - y[..., self.parents[1:]] ** 2
        return residuals

    def log_density(self, y):
        y = self._check(y)
        return -np.sum(self.weights * self._residuals(y) ** 2, axis=-1)

    def grad_log_density(self, y):
        y = self._check(y)
        weighted = self.weights * self._residuals(y)
        return -2.0 * weighted + 4.0 * y * matvec(self.children, weighted)

    def hess_log_density(self, y):
        y = self._check(y)
        weighted = self.weights * self._residuals(y)
        hessian = np.zeros(y.shape[:-1] + (self.dim, self.dim))
        hessian[..., 0, 0] = -2.0 * self.weights[0]
        for k in range(1, self.dim):
            p = self.parents[k]
            w = self.weights[k]
            hessian[..., k, k] += -2.0 * w
            hessian[..., k, p] += 4.0 * w * y[..., p]
            hessian[..., p, k] += 4.0 * w * y[..., p]
            hessian[..., p, p] += -8.0 * w * y[..., p] ** 2 + 4.0 * weighted[..., k]
        return hessian


class GaussianMixture(TargetDensity):
    """Weighted mixture of Gaussians with log-sum-exp stabilized derivatives."""

    name = "gaussian_mixture"

    def __init__(self, means, covs, weights):
        means = np.atleast_2d(np.asarray(means, dtype=float))
        weights = np.asarray(weights, dtype=float).reshape(-1)
        n_components, dim = means.shape
        covs = np.asarray(covs, dtype=float)
        if covs.ndim == 2:
            covs = np.broadcast_to(covs, (n_components, dim, dim))
        if covs.shape != (n_components, dim, dim) or weights.shape != (n_components,):
            raise InvalidParameterError("Mixture means, covariances and weights have inconsistent shapes")
        if np.any(weights <= 0) or abs(weights.sum() - 1.0) > 1e-12:
            raise InvalidParameterError(f"Mixture weights must be positive and sum to 1, got {weights.tolist()}")
        super().__init__(
            dim, {"means": means.tolist(), "covs": covs.tolist(), "weights": weights.tolist()}
        )
        try:
            self.cholesky = np.linalg.cholesky(covs)
        except np.linalg.LinAlgError as err:
            raise InvalidParameterError(f"Mixture covariances must be positive definite: {err}") from err
        self.means = means
        self.weights = weights
        self.precisions = np.linalg.inv(covs)
        self.log_normalizers = np.log(weights) - np.sum(np.log(np.diagonal(self.cholesky, axis1=1, axis2=2)), axis=1)

    def _component_terms(self, y):
        offsets = y[..., None, :] - self.means
        scores = -matvec(self.precisions, offsets)
        log_terms = self.log_normalizers + 0.5 * np.sum(offsets * scores, axis=-1)
        return log_terms, scores

    def log_density(self, y):
        y = self._check(y)
        return logsumexp(self._component_terms(y)[0], axis=-1)

    def grad_log_density(self, y):
        y = self._check(y)
        log_terms, scores = self._component_terms(y)
        responsibilities = softmax(log_terms, axis=-1)
        return np.sum(responsibilities[..., None] * scores, axis=-2)

    def hess_log_density(self, y):
        y = self._check(y)
        log_terms, scores = self._component_terms(y)
        responsibilities = softmax(log_terms, axis=-1)
        mean_score = np.sum(responsibilities[..., None] * scores, axis=-2)
        second = np.sum(
            responsibilities[..., None, None]
            * (np.einsum("...ki,...kj->...kij", scores, scores) - self.precisions),
            axis=-3,
        )
        return second - np.einsum("...i,...j->...ij", mean_score, mean_score)

    @property
    def can_sample_exactly(self):
        return True

    def sample_exact(self, n, seed):
        rng = np.random.default_rng(seed)
        labels = rng.choice(len(self.weights), size=int(n), p=self.weights)
        noise = rng.standard_normal((int(n), self.dim))
        return self.means[labels] + matvec(self.cholesky[labels], noise)


class GaussianTarget(TargetDensity):
    """N(mean, cov) with the whitening map L^{-1}(y - mean), cov = L L^T."""

    name = "gaussian"

    def __init__(self, mean, cov, exact_map=None, name=None):
        mean = np.asarray(mean, dtype=float).reshape(-1)
        cov = np.asarray(cov, dtype=float)
        if cov.shape != (mean.size, mean.size):
            raise InvalidParameterError(f"Covariance must be {mean.size}x{mean.size}, got {cov.shape}")
        try:
            cholesky = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as err:
            raise InvalidParameterError(f"Covariance must be positive definite: {err}") from err
        if exact_map is None:
            whitening = np.linalg.inv(cholesky)
            exact_map = AffineMap(whitening, -whitening @ mean)
        super().__init__(mean.size, {"mean": mean.tolist(), "cov": cov.tolist()}, exact_map)
        if name:
            self.name = name
        self.mean = mean
        self.cov = cov
        self.precision = np.linalg.inv(cov)

    def log_density(self, y):
        offset = self._check(y) - self.mean
        return -0.5 * np.sum(offset * matvec(self.precision, offset), axis=-1)

    def grad_log_density(self, y):
        return -matvec(self.precision, self._check(y) - self.mean)

    def hess_log_density(self, y):
        y = self._check(y)
        return np.broadcast_to(-self.precision, y.shape[:-1] + self.precision.shape).copy()


def banana(s=4.0, b=0.01):
    return BananaTarget(s, b)


def funnel_posterior(data=None, alpha=0.75, beta=0.5):
    if data is None:
        from .data import load_funnel_data

        data = load_funnel_data()
    return FunnelPosterior(data, alpha, beta)


def hybrid_rosenbrock(n1=4, n2=2, mu=1.0, a=30.0, b=20.0):
    return HybridRosenbrock(n1, n2, mu, a, b)


DEFAULT_MIXTURE_MEANS = [[-4.0, -4.0], [4.0, -4.0], [-4.0, 4.0], [4.0, 4.0]]
DEFAULT_MIXTURE_WEIGHTS = [0.337, 0.050, 0.284, 0.328]


def gaussian_mixture(means=None, covs=None, weights=None):
    means = DEFAULT_MIXTURE_MEANS if means is None else means
    weights = DEFAULT_MIXTURE_WEIGHTS if weights is None else weights
    dim = np.shape(means)[1]
    covs = np.eye(dim) if covs is None else covs
    return GaussianMixture(means, covs, weights)


def anisotropic_gaussian(m=1.0, L=1.0):
    """N(0, diag(1/m, 1/L)) with exact map diag(sqrt(m), sqrt(L))."""
    if m <= 0 or L < m:
        raise InvalidParameterError(f"anisotropic_gaussian needs 0 < m <= L, got m={m}, L={L}")
    target = GaussianTarget(
        np.zeros(2),
        np.diag([1.0 / m, 1.0 / L]),
        exact_map=AffineMap.diagonal([np.sqrt(m), np.sqrt(L)]),
        name="anisotropic_gaussian",
    )
    target.params = {"m": float(m), "L": float(L)}
    return target


def standard_normal(dim=2):
    target = GaussianTarget(np.zeros(dim), np.eye(dim), exact_map=AffineMap.identity(dim), name="standard_normal")
    target.params = {"dim": int(dim)}
    return target


def gaussian(mean, cov):
    return GaussianTarget(mean, cov)
