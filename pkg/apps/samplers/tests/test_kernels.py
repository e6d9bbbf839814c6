import numpy as np
import pytest
from hamcrest import assert_that, greater_than_or_equal_to, instance_of, less_than, none

from apps.core.exceptions import InvalidParameterError, StepError
from apps.core.utils import fd_divergence
from apps.samplers.config import SamplerConfig
from apps.samplers.implicit import SolverOptions
from apps.samplers.kernels import (
    EmrmldIrrKernel,
    RmldKernel,
    TmulaKernel,
    build_kernel,
    emrmld_irr_step,
    emrmld_step,
    metric_divergence,
    reference_irr_step,
    rmld_step,
    tmula_step,
    tmuila_reference_step,
    tmuila_step,
    uila_step,
    ula_step,
)
from apps.targets.densities import banana, funnel_posterior, gaussian, gaussian_mixture, standard_normal
from apps.transport.maps import AffineMap, BananaMap
from apps.transport.tests.test_maps import random_triangular_map


def random_inputs(dim, n=10, seed=0):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((n, dim)), rng.standard_normal((n, dim))


class TestUlaStep:
    def test_standard_normal_without_noise(self):
        y = np.array([[1.0, -2.0], [0.5, 3.0]])
        assert np.allclose(ula_step(standard_normal(2), y, 0.1, np.zeros_like(y)), 0.9 * y, rtol=1e-15, atol=0)

    def test_zero_step_is_identity(self):
        y, xi = random_inputs(2)
        assert np.array_equal(ula_step(banana(), y, 0.0, xi), y)

    def test_banana_stationary_point(self):
        y = np.array([0.0, 1.0])
        assert np.array_equal(ula_step(banana(), y, 0.1, np.zeros(2)), y)

    def test_nonfinite_score_raises(self):
        with pytest.raises(StepError):
            ula_step(banana(), np.array([np.inf, 0.0]), 0.1, np.zeros(2))


class TestIdentityMapReduction:
    @pytest.fixture
    def setup(self):
        y, xi = random_inputs(2, seed=1)
        return banana(), AffineMap.identity(2), y, xi, 0.01

    def test_tmula(self, setup):
        target, identity, y, xi, h = setup
        _, y_next = tmula_step(target, identity, identity.forward(y), h, xi)
        assert np.array_equal(y_next, ula_step(target, y, h, xi))

    def test_emrmld(self, setup):
        target, identity, y, xi, h = setup
        assert np.array_equal(emrmld_step(target, identity, y, h, xi), ula_step(target, y, h, xi))

    def test_reference_irr_without_skew(self, setup):
        target, identity, y, xi, h = setup
        _, y_next = reference_irr_step(target, identity, identity.forward(y), h, xi, np.zeros((2, 2)))
        assert np.array_equal(y_next, ula_step(target, y, h, xi))

    def test_emrmld_irr_without_skew(self, setup):
        target, identity, y, xi, h = setup
        assert np.array_equal(emrmld_irr_step(target, identity, y, h, xi, np.zeros((2, 2))), ula_step(target, y, h, xi))


class TestTmulaStep:
    def test_linear_map_matches_emrmld(self):
        target = gaussian_mixture()
        transport_map = AffineMap([[0.5, 0.1], [-0.3, 0.8]], [1.0, -0.5])
        y, xi = random_inputs(2, seed=2)
        y = 3.0 * y
        _, tmula = tmula_step(target, transport_map, transport_map.forward(y), 0.05, xi)
        emrmld = emrmld_step(target, transport_map, y, 0.05, xi)
        scale = 1.0 + np.max(np.abs(y))
        assert_that(float(np.max(np.abs(tmula - emrmld))), less_than(1e-12 * scale))

    def test_exact_banana_map_at_reference_origin(self):
        target = banana()
        x_next, y_next = tmula_step(target, target.exact_map, np.zeros(2), 0.1, np.zeros(2))
        assert np.allclose(x_next, [0.0, 0.0], rtol=0, atol=1e-12)
        assert np.allclose(y_next, [0.0, 1.0], rtol=0, atol=1e-12)

    def test_shares_first_moment_with_emrmld(self):
        # Gauss-Hermite expectations are exact for the polynomial banana steps
        nodes, weights = np.polynomial.hermite_e.hermegauss(20)
        weights = weights / weights.sum()
        xi = np.stack(np.meshgrid(nodes, nodes, indexing="ij"), axis=-1).reshape(-1, 2)
        w = np.outer(weights, weights).reshape(-1)
        target = banana()
        transport_map = target.exact_map
        y = np.broadcast_to([1.0, 1.2], xi.shape)
        steps = [1e-2, 1e-3, 1e-4]
        gaps = []
        for h in steps:
            _, tmula = tmula_step(target, transport_map, transport_map.forward(y), h, xi)
            emrmld = emrmld_step(target, transport_map, y, h, xi)
            gaps.append(np.max(np.abs(w @ (tmula - emrmld))))
        slope = np.polyfit(np.log(steps), np.log(gaps), 1)[0]
        assert_that(float(slope), greater_than_or_equal_to(1.4))


class TestIrreversibleSteps:
    def test_rotated_score_for_standard_normal(self):
        delta = 0.7
        skew = np.array([[0.0, delta], [-delta, 0.0]])
        x = np.array([[1.0, 2.0]])
        x_next, _ = reference_irr_step(standard_normal(2), AffineMap.identity(2), x, 0.1, np.zeros((1, 2)), skew)
        expected = x + 0.1 * (np.eye(2) + skew) @ (-x[0])
        assert np.allclose(x_next, expected, rtol=0, atol=1e-15)

    def test_emrmld_irr_with_affine_map(self):
        target = gaussian([0.5, -1.0], [[2.0, 0.3], [0.3, 0.5]])
        matrix = np.array([[1.5, 0.0], [0.4, 2.0]])
        skew = np.array([[0.0, 1.0], [-1.0, 0.0]])
        y, xi = random_inputs(2, n=1, seed=3)
        inverse = np.linalg.inv(matrix)
        metric = inverse @ (np.eye(2) + skew) @ inverse.T
        expected = y[0] + 0.02 * metric @ target.grad_log_density(y[0]) + np.sqrt(0.04) * inverse @ xi[0]
        assert np.allclose(emrmld_irr_step(target, AffineMap(matrix), y, 0.02, xi, skew)[0], expected, rtol=0, atol=1e-14)


class TestMetricDivergence:
    @pytest.mark.parametrize("transport_map", [BananaMap(4.0, 0.01), random_triangular_map(dim=3)], ids=["banana", "triangular"])
    def test_matches_finite_differences(self, transport_map):
        skew = np.zeros((transport_map.dim, transport_map.dim))
        skew[0, 1], skew[1, 0] = 1.0, -1.0

        def metric_field(y):
            inverse = np.linalg.inv(transport_map.jacobian(y))
            return inverse @ (np.eye(transport_map.dim) + skew) @ np.swapaxes(inverse, -1, -2)

        y = np.random.default_rng(4).standard_normal((20, transport_map.dim))
        inverse = np.linalg.inv(transport_map.jacobian(y))
        analytic = metric_divergence(inverse, transport_map.forward_hessians(y), metric_field(y))
        assert_that(float(np.max(np.abs(analytic - fd_divergence(metric_field, y)))), less_than(1e-6))


class TestEmrmldStep:
    def test_affine_map_is_preconditioned_ula(self):
        target = gaussian_mixture()
        matrix = np.array([[2.0, 0.0], [1.0, 0.5]])
        y, xi = random_inputs(2, n=1, seed=5)
        inverse = np.linalg.inv(matrix)
        preconditioner = np.linalg.inv(matrix.T @ matrix)
        expected = y[0] + 0.1 * preconditioner @ target.grad_log_density(y[0]) + np.sqrt(0.2) * inverse @ xi[0]
        assert np.allclose(emrmld_step(target, AffineMap(matrix), y, 0.1, xi)[0], expected, rtol=0, atol=1e-13)


class TestRmldStep:
    def test_funnel_metric_drift(self):
        target = funnel_posterior()
        y = np.array([[0.3, -0.5]])
        h = 1e-3
        n, beta = target.n, 0.5
        mu, gamma = y[0]
        b_mu = 1.0 / (n * np.exp(-2 * gamma) + 1.0 / 3.0)
        b_gamma = 1.0 / (2 * n + beta * np.exp(gamma))
        divergence = np.array([0.0, -beta * np.exp(gamma) * b_gamma**2])
        score = target.grad_log_density(y[0])
        expected = y[0] + h * (np.array([b_mu, b_gamma]) * score + divergence)
        assert np.allclose(rmld_step(target, y, h, np.zeros((1, 2)))[0], expected, rtol=1e-8, atol=1e-12)

    def test_targets_without_metric_are_rejected(self):
        with pytest.raises(InvalidParameterError):
            RmldKernel(banana(), SamplerConfig("rmld", 0.1))


class TestImplicitSteps:
    def test_tmuila_solves_gaussian_drift_exactly(self):
        x = np.array([[1.0, -2.0], [0.25, 4.0]])
        h = 0.3
        x_next, y_next = tmuila_reference_step(standard_normal(2), AffineMap.identity(2), x, h, np.zeros_like(x))
        assert np.allclose(x_next, x / (1.0 + h), rtol=0, atol=1e-10)
        assert np.allclose(y_next, x_next, rtol=0, atol=1e-15)

    def test_tmuila_without_drift_maps_back_the_noise(self):
        target = banana()
        y, xi = random_inputs(2, seed=6)
        expected = target.exact_map.inverse(target.exact_map.forward(y))
        assert np.allclose(tmuila_step(target, target.exact_map, y, 0.0, xi), expected, rtol=0, atol=1e-12)

    def test_uila_gaussian(self):
        sigma_sq = 4.0
        target = gaussian([0.0, 0.0], sigma_sq * np.eye(2))
        y = np.array([[2.0, -1.0]])
        h = 0.5
        assert np.allclose(uila_step(target, y, h, np.zeros((1, 2))), y / (1.0 + h / sigma_sq), rtol=0, atol=1e-12)

    def test_uila_zero_step(self):
        y, xi = random_inputs(2, seed=7)
        assert np.array_equal(uila_step(banana(), y, 0.0, xi), y)

    def test_uila_reports_failed_solve(self):
        solver = SolverOptions(tol=1e-30, max_iters=1, max_halvings=0)
        with pytest.raises(StepError):
            uila_step(banana(), np.array([[3.0, -2.0]]), 0.5, np.zeros((1, 2)), solver)


class TestKernels:
    def test_build_kernel(self):
        target = banana()
        kernel = build_kernel(target, SamplerConfig("tmula", 0.01, transport_map=target.exact_map))
        assert_that(kernel, instance_of(TmulaKernel))
        state = kernel.initial_state(np.array([[0.0, 1.0]]))
        assert np.allclose(state.x, [[0.0, 0.0]], rtol=0, atol=1e-15)

    def test_emrmld_irr_keeps_target_space_state(self):
        target = banana()
        kernel = build_kernel(target, SamplerConfig("emrmld_irr", 0.01, transport_map=target.exact_map))
        assert_that(kernel, instance_of(EmrmldIrrKernel))
        assert_that(kernel.initial_state(np.zeros((1, 2))).x, none())

    def test_map_dimension_must_match(self):
        with pytest.raises(InvalidParameterError):
            build_kernel(banana(), SamplerConfig("tmula", 0.01, transport_map=AffineMap.identity(3)))
