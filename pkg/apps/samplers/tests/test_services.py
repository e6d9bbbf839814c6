import numpy as np
import pytest
from hamcrest import assert_that, equal_to, has_entries, has_key, has_length, instance_of, none

from apps.core.exceptions import ConfigError, InvalidParameterError
from apps.samplers.config import SamplerConfig
from apps.samplers.services import SamplingService, initial_points, resolve_map, sampler_config_from_document
from apps.samplers.runner import read_chains
from apps.targets.densities import banana, funnel_posterior
from apps.transport.maps import AffineMap, BananaMap
from apps.transport.serialization import save_map


class TestSamplerConfig:
    def test_map_schemes_need_a_map(self):
        with pytest.raises(InvalidParameterError):
            SamplerConfig("tmula", 0.1)

    def test_unknown_scheme(self):
        with pytest.raises(InvalidParameterError):
            SamplerConfig("mala", 0.1)

    def test_negative_step_size(self):
        with pytest.raises(InvalidParameterError):
            SamplerConfig("ula", -0.1)

    def test_non_skew_matrix_rejected(self):
        with pytest.raises(InvalidParameterError):
            SamplerConfig("tmula_irr", 0.1, skew_matrix=[[0.0, 1.0], [-1.0 + 1e-9, 0.0]], transport_map=AffineMap.identity(2))

    def test_default_skew_uses_delta(self):
        config = SamplerConfig("tmula_irr", 0.1, delta=0.5, transport_map=AffineMap.identity(2))
        assert np.array_equal(config.skew_for(2), [[0.0, 0.5], [-0.5, 0.0]])

    def test_describe(self):
        config = SamplerConfig("tmuila", 0.01, transport_map=BananaMap(4.0, 0.01))
        assert_that(config.describe(), has_entries(scheme="tmuila", h=0.01, map_kind="banana"))
        assert_that(config.describe(), has_key("implicit_solver"))


class TestSamplerConfigDocuments:
    def test_exact_map(self):
        target = banana()
        config = sampler_config_from_document({"scheme": "tmula", "h": 0.01, "map": "exact"}, target)
        assert_that(config.transport_map, equal_to(target.exact_map))

    def test_map_file_relative_to_base_dir(self, tmp_path):
        save_map(BananaMap(2.0, 0.1), tmp_path / "map.json")
        config = sampler_config_from_document({"scheme": "emrmld", "h": 0.01, "map": "map.json"}, banana(), tmp_path)
        assert_that(config.transport_map, instance_of(BananaMap))

    def test_trained_map_by_name(self):
        trained = AffineMap.diagonal([2.0, 3.0])
        assert_that(resolve_map("trained", banana(), maps={"trained": trained}), equal_to(trained))

    def test_identity_map(self):
        assert np.array_equal(resolve_map("identity", banana()).matrix, np.eye(2))

    def test_no_map(self):
        assert_that(resolve_map(None, banana()), none())

    def test_target_without_exact_map(self):
        with pytest.raises(ConfigError):
            resolve_map("exact", funnel_posterior())

    @pytest.mark.parametrize(
        "document",
        [
            {"scheme": "tmula", "h": 0.01},
            {"scheme": "ula", "h": 0.0},
            {"scheme": "ula", "h": 0.01, "seed": 3},
            {"scheme": "tmula_irr", "h": 0.01, "map": "exact", "skew_matrix": [[0.0, 1.0], [1.0, 0.0]]},
            {"scheme": "tmula_irr", "h": 0.01, "map": "exact", "skew_matrix": [[0.0, 1.0]]},
            {"scheme": "uila", "h": 0.01, "implicit_solver": {"tol": 0.0}},
        ],
    )
    def test_invalid_documents(self, document):
        with pytest.raises(ConfigError):
            sampler_config_from_document(document, banana())

    def test_solver_options(self):
        config = sampler_config_from_document(
            {"scheme": "uila", "h": 0.01, "implicit_solver": {"tol": 1e-8, "max_iters": 5}}, banana()
        )
        assert_that((config.implicit_solver.tol, config.implicit_solver.max_iters), equal_to((1e-8, 5)))


class TestSamplingService:
    def test_initial_points(self):
        target = banana()
        assert np.array_equal(initial_points(target, 3, seed=2), target.sample_exact(3, seed=2))
        assert np.array_equal(initial_points(funnel_posterior(), 2, seed=2), np.zeros((2, 2)))
        assert np.array_equal(initial_points(target, 2, seed=2, y0=[1.0, 2.0]), [[1.0, 2.0], [1.0, 2.0]])

    def test_sample_writes_chains(self, tmp_path):
        target = banana()
        service = SamplingService(target, SamplerConfig("tmula", 0.01, transport_map=target.exact_map))
        chains = service.sample(30, seed=1, n_chains=2, out_dir=tmp_path)
        assert_that(chains, has_length(2))
        loaded = read_chains(tmp_path)
        assert np.array_equal(loaded[1].states, chains[1].states)
