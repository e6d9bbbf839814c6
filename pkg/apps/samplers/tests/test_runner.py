import json

import numpy as np
import pytest
from hamcrest import assert_that, contains_exactly, equal_to, has_entries, has_length, none

from apps.core.exceptions import InvalidParameterError
from apps.samplers.config import SamplerConfig
from apps.samplers.implicit import SolverOptions
from apps.samplers.runner import (
    CHAIN_INDEX_FILE,
    EnsembleRunner,
    read_chains,
    run_chain,
    run_ensemble,
    write_chains,
)
from apps.targets.densities import banana, funnel_posterior, gaussian_mixture, standard_normal


class TestRunChain:
    @pytest.mark.parametrize("scheme", ["ula", "emrmld", "emrmld_irr"])
    def test_zero_step_size_keeps_the_start(self, scheme):
        target = banana()
        config = SamplerConfig(scheme, 0.0, transport_map=target.exact_map if scheme != "ula" else None)
        chain = run_chain(target, config, [1.5, -0.5], 1, seed=0)
        assert np.array_equal(chain.states, [[1.5, -0.5], [1.5, -0.5]])

    def test_zero_step_size_rmld(self):
        chain = run_chain(funnel_posterior(), SamplerConfig("rmld", 0.0), [0.3, -0.2], 1, seed=0)
        assert np.array_equal(chain.states, [[0.3, -0.2], [0.3, -0.2]])

    def test_zero_step_size_tmula_maps_back(self):
        target = banana()
        chain = run_chain(target, SamplerConfig("tmula", 0.0, transport_map=target.exact_map), [1.5, -0.5], 1, seed=0)
        assert np.allclose(chain.states[1], [1.5, -0.5], rtol=0, atol=1e-14)

    def test_metadata(self):
        chain = run_chain(banana(), SamplerConfig("ula", 0.01), [0.0, 1.0], 5, seed=9, chain_id=3)
        assert_that(chain.states.shape, equal_to((6, 2)))
        assert_that(
            chain.describe(),
            has_entries(scheme="ula", h=0.01, seed=9, chain_id=3, n_steps=5, diverged_at=None),
        )

    def test_reruns_are_bit_identical(self, tmp_path):
        target = banana()
        config = SamplerConfig("tmula", 0.05, transport_map=target.exact_map)
        first = run_chain(target, config, [0.0, 1.0], 200, seed=4).to_csv(tmp_path / "first.csv")
        second = run_chain(target, config, [0.0, 1.0], 200, seed=4).to_csv(tmp_path / "second.csv")
        assert_that(first.read_bytes(), equal_to(second.read_bytes()))

    def test_needs_at_least_one_step(self):
        with pytest.raises(InvalidParameterError):
            run_chain(banana(), SamplerConfig("ula", 0.01), [0.0, 1.0], 0, seed=0)


class TestEnsembles:
    @pytest.mark.parametrize("scheme", ["ula", "tmula", "emrmld"])
    def test_single_chain_matches_ensemble_member(self, scheme):
        target = banana()
        config = SamplerConfig(scheme, 0.02, transport_map=None if scheme == "ula" else target.exact_map)
        start = target.sample_exact(4, seed=1)
        ensemble = run_ensemble(target, config, start, 50, seed=12)
        alone = run_chain(target, config, start[2], 50, seed=12, chain_id=2)
        assert np.array_equal(alone.states, ensemble[2].states)

    def test_initial_points_must_match_the_ensemble(self):
        with pytest.raises(InvalidParameterError):
            EnsembleRunner(banana(), SamplerConfig("ula", 0.01), np.zeros((3, 2)), seed=0, chain_ids=[0, 1])

    def test_chain_ids_select_noise_streams(self):
        target = gaussian_mixture()
        config = SamplerConfig("ula", 0.1)
        shifted = run_ensemble(target, config, np.zeros((2, 2)), 10, seed=0, chain_ids=[5, 6])
        assert_that([chain.chain_id for chain in shifted], contains_exactly(5, 6))
        assert np.array_equal(shifted[0].states, run_chain(target, config, [0.0, 0.0], 10, seed=0, chain_id=5).states)


class TestDivergence:
    def test_unstable_step_size_is_detected(self):
        # y' = -2y + 2 xi for the standard normal at h = 3
        chain = run_chain(standard_normal(2), SamplerConfig("ula", 3.0), [1.0, 1.0], 200, seed=0)
        assert chain.diverged
        assert chain.diverged_at < 60
        assert_that(chain.states, has_length(chain.diverged_at))
        assert np.all(np.isfinite(chain.states))

    def test_failed_step_marks_divergence(self):
        config = SamplerConfig("uila", 0.5, implicit_solver=SolverOptions(tol=1e-30, max_iters=1, max_halvings=0))
        chain = run_chain(banana(), config, [3.0, -2.0], 10, seed=0)
        assert_that(chain.diverged_at, equal_to(1))
        assert np.array_equal(chain.states, [[3.0, -2.0]])

    def test_other_chains_continue(self):
        target = standard_normal(2)
        runner = EnsembleRunner(target, SamplerConfig("ula", 0.5), [[0.0, 0.0], [1e9, 0.0]], seed=0)
        chains = runner.run(20)
        assert_that(chains[0].diverged_at, none())
        assert_that(chains[1].diverged_at, equal_to(0))
        assert_that(chains[0].states, has_length(21))

    def test_steps_stream_nan_rows_for_dead_chains(self):
        runner = EnsembleRunner(standard_normal(1), SamplerConfig("ula", 3.0), [[1.0], [0.0]], seed=2, threshold=1e3)
        records = list(runner.steps(40))
        last = records[-1]
        dead = ~last.alive
        assert dead.any()
        assert np.all(np.isnan(last.y[dead]))


class TestChainFiles:
    def test_write_and_read(self, tmp_path):
        target = banana()
        chains = run_ensemble(target, SamplerConfig("ula", 0.01), target.sample_exact(3, seed=0), 20, seed=8)
        write_chains(tmp_path, chains)
        index = json.loads((tmp_path / CHAIN_INDEX_FILE).read_text())
        assert_that(index["chains"], has_length(3))
        loaded = read_chains(tmp_path)
        for original, restored in zip(chains, loaded):
            assert np.array_equal(original.states, restored.states)
            assert_that(restored.describe(), equal_to(original.describe()))

    def test_csv_header(self, tmp_path):
        chain = run_chain(banana(), SamplerConfig("ula", 0.01), [0.0, 1.0], 3, seed=0)
        path = chain.to_csv(tmp_path / "chain.csv")
        lines = path.read_text().splitlines()
        assert_that(lines[0], equal_to("step,y_1,y_2"))
        assert_that(lines[1], equal_to("0,0,1"))
        assert_that(lines, has_length(5))

    def test_bare_directory_without_csv(self, tmp_path):
        with pytest.raises(InvalidParameterError):
            read_chains(tmp_path)
