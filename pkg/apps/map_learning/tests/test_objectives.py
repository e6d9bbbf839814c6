import numpy as np
import pytest
from hamcrest import assert_that, close_to, equal_to, less_than

from apps.core.exceptions import TrainingNumericsError
from apps.map_learning.components import MonotoneComponent
from apps.map_learning.objectives import LOG_2PI, ComponentObjective, negative_log_likelihood
from apps.targets.densities import banana
from apps.transport.maps import AffineMap, TriangularMap


def perturbed_components(dim, order, seed, scale=0.2):
    rng = np.random.default_rng(seed)
    components = []
    for k in range(dim):
        template = MonotoneComponent.identity(k, order)
        components.append(template.with_coefficients(template.coefficients + scale * rng.standard_normal(template.n_terms)))
    return components


class TestNegativeLogLikelihood:
    def test_identity_map_on_standard_normal_samples(self):
        samples = np.random.default_rng(0).standard_normal((10000, 2))
        value = negative_log_likelihood(AffineMap.identity(2), samples)
        # per-sample variance of ||z||^2 / 2 is 1 in two dimensions
        assert_that(value, close_to(1.0 + LOG_2PI, 3 * 0.01))

    def test_whitening_map_beats_identity(self):
        covariance = np.array([[4.0, 1.8], [1.8, 1.0]])
        samples = np.random.default_rng(1).multivariate_normal([0.0, 0.0], covariance, 5000)
        whitening = AffineMap(np.linalg.inv(np.linalg.cholesky(covariance)))
        assert_that(
            negative_log_likelihood(whitening, samples),
            less_than(negative_log_likelihood(AffineMap.identity(2), samples)),
        )

    def test_exact_banana_map_beats_identity(self):
        target = banana()
        samples = target.sample_exact(5000, seed=2)
        assert_that(
            negative_log_likelihood(target.exact_map, samples),
            less_than(negative_log_likelihood(AffineMap.identity(2), samples)),
        )

    def test_nonfinite_term_reports_sample(self):
        samples = np.zeros((5, 2))
        samples[3, 1] = np.inf
        with pytest.raises(TrainingNumericsError) as excinfo:
            negative_log_likelihood(AffineMap.identity(2), samples)
        assert_that(excinfo.value.sample_index, equal_to(3))


class TestComponentObjective:
    def test_map_objective_separates_by_component(self):
        components = perturbed_components(3, 2, seed=3)
        samples = np.random.default_rng(4).standard_normal((400, 3))
        total = sum(ComponentObjective(component, samples)(component.coefficients)[0] for component in components)
        full = negative_log_likelihood(TriangularMap(components), samples)
        assert_that(abs(full - (total + 1.5 * LOG_2PI)), less_than(1e-10))

    @pytest.mark.parametrize("rectifier", ["softplus", "shifted-elu"])
    def test_gradient_matches_finite_differences(self, rectifier):
        rng = np.random.default_rng(5)
        template = MonotoneComponent.identity(1, 3, rectifier=rectifier)
        objective = ComponentObjective(template, rng.standard_normal((300, 2)))
        for _ in range(3):
            coefficients = template.coefficients + 0.3 * rng.standard_normal(template.n_terms)
            _, gradient = objective(coefficients)
            numeric = np.empty_like(gradient)
            for t in range(template.n_terms):
                step = np.zeros_like(coefficients)
                step[t] = 1e-6
                numeric[t] = (objective(coefficients + step)[0] - objective(coefficients - step)[0]) / 2e-6
            relative = np.max(np.abs(gradient - numeric)) / (1.0 + np.max(np.abs(gradient)))
            assert_that(relative, less_than(1e-5))

    def test_values_agree_with_component_evaluation(self):
        component = perturbed_components(2, 3, seed=6)[1]
        samples = np.random.default_rng(7).standard_normal((50, 2))
        values, _, slope_field = ComponentObjective(component, samples).values(component.coefficients)
        expected_values, expected_slopes = component.evaluate(samples)
        assert np.allclose(values, expected_values, rtol=0, atol=1e-12)
        assert np.allclose(component.rectifier.value(slope_field), expected_slopes, rtol=0, atol=1e-12)

    def test_nonfinite_objective_raises(self):
        template = MonotoneComponent.identity(0, 1)
        samples = np.array([[0.5], [np.nan], [1.0]])
        with pytest.raises(TrainingNumericsError) as excinfo:
            ComponentObjective(template, samples)(template.coefficients)
        assert_that(excinfo.value.sample_index, equal_to(1))
