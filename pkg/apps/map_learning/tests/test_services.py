import numpy as np
import pytest
from hamcrest import assert_that, close_to, equal_to, has_entries, has_length, instance_of, less_than
from scipy import stats

from apps.core.exceptions import ConfigError, InvalidParameterError
from apps.map_learning.objectives import negative_log_likelihood
from apps.map_learning.services import MapTrainingService, MapTrainingSpec, train_component, train_map
from apps.targets.densities import banana
from apps.transport.maps import AffineMap, ComposedMap, TriangularMap
from apps.transport.serialization import map_to_document


def component_value_and_slope(component, y):
    value, slope = component.evaluate(np.array([y]))
    return float(value[0]), float(slope[0])


class TestMapTrainingSpec:
    def test_defaults_come_from_settings(self):
        spec = MapTrainingSpec()
        assert_that(spec.quadrature_points, equal_to(32))
        assert_that(spec.max_iters, equal_to(500))
        assert_that(spec.grad_tol, equal_to(1e-6))

    def test_from_dict(self):
        spec = MapTrainingSpec.from_dict({"total_order": 3, "rectifier": "shifted-elu"})
        assert_that(spec.to_dict(), has_entries(total_order=3, rectifier="shifted-elu", standardize=True))

    @pytest.mark.parametrize(
        "document",
        [{"total_order": 7}, {"quadrature_points": 4}, {"basis": "legendre"}, {"learning_rate": 0.1}],
    )
    def test_invalid_documents(self, document):
        with pytest.raises(ConfigError):
            MapTrainingSpec.from_dict(document)

    def test_order_zero_rejected(self):
        with pytest.raises(InvalidParameterError):
            MapTrainingSpec(total_order=0)


class TestTrainComponent:
    def test_standard_normal_samples_give_identity(self):
        samples = np.random.default_rng(0).standard_normal((10000, 1))
        component = train_component(0, samples, MapTrainingSpec(total_order=1, standardize=False))
        value, slope = component_value_and_slope(component, [0.0])
        assert_that(value, close_to(0.0, 0.05))
        assert_that(slope, close_to(1.0, 0.05))

    def test_shifted_gaussian_is_whitened(self):
        samples = 3.0 + 2.0 * np.random.default_rng(1).standard_normal((10000, 1))
        component = train_component(0, samples, MapTrainingSpec(total_order=1, standardize=False))
        value, slope = component_value_and_slope(component, [0.0])
        # optimum is S(y) = (y - 3) / 2
        assert_that(value, close_to(-1.5, 0.05))
        assert_that(slope, close_to(0.5, 0.05))


class TestMapTrainingService:
    def test_standardization(self):
        samples = np.array([[1.0, 10.0], [3.0, 30.0]])
        pre_map = MapTrainingService().standardization(samples)
        assert np.allclose(pre_map.forward(samples), [[-1.0, -1.0], [1.0, 1.0]], rtol=0, atol=1e-15)

    def test_constant_coordinate_cannot_be_standardized(self):
        with pytest.raises(InvalidParameterError):
            MapTrainingService().standardization(np.ones((20, 2)))

    def test_too_few_samples(self):
        samples = np.random.default_rng(2).standard_normal((50, 2))
        with pytest.raises(InvalidParameterError):
            train_map(samples, MapTrainingSpec(total_order=2))

    def test_banana_bend_is_recovered(self):
        samples = banana().sample_exact(5000, seed=3)
        transport_map, report = MapTrainingService(MapTrainingSpec(total_order=2)).train_map(samples)
        assert_that(transport_map, instance_of(ComposedMap))
        assert_that(transport_map.outer, instance_of(TriangularMap))
        assert_that(report.components, has_length(2))
        pushed = transport_map.forward(samples)
        assert_that(abs(float(stats.skew(pushed[:, 1]))), less_than(0.1))
        assert_that(
            report.negative_log_likelihood,
            less_than(negative_log_likelihood(AffineMap.identity(2), samples)),
        )

    def test_training_is_deterministic(self):
        samples = np.random.default_rng(4).standard_normal((500, 2)) * [1.0, 3.0]
        spec = MapTrainingSpec(total_order=2)
        first = map_to_document(train_map(samples, spec))
        second = map_to_document(train_map(samples, spec))
        assert_that(first, equal_to(second))

    def test_without_standardization_returns_triangular_map(self):
        samples = np.random.default_rng(5).standard_normal((300, 2))
        transport_map = train_map(samples, MapTrainingSpec(total_order=1, standardize=False))
        assert_that(transport_map, instance_of(TriangularMap))
        assert np.all(transport_map.diagonal(samples) > 0.0)
