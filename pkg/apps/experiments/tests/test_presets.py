import pytest
from hamcrest import assert_that, equal_to, has_entries, has_key, less_than

from apps.core.exceptions import ConfigError
from apps.experiments.presets import DESK_CHAINS, PRESETS, preset_config
from apps.experiments.services import resolve_config


@pytest.mark.parametrize("name", sorted(PRESETS))
@pytest.mark.parametrize("desk_scale", [False, True])
def test_presets_are_valid_configs(name, desk_scale):
    config = resolve_config(preset_config(name, desk_scale=desk_scale))
    assert_that(config, has_entries(name=name, desk_scale=desk_scale, seed=0))


@pytest.mark.parametrize("name", ["funnel", "rosenbrock", "mixture"])
def test_desk_scale_shortens_runs_and_records_it(name):
    full = preset_config(name)
    desk = preset_config(name, desk_scale=True)
    for full_run, desk_run in zip(full["runs"], desk["runs"]):
        assert_that(desk_run["n_steps"], less_than(full_run["n_steps"]))
        assert desk_run["n_chains"] <= DESK_CHAINS
    assert_that(full["scaling"], equal_to({}))
    assert_that(desk["scaling"], has_key("n_steps"))
    assert_that(desk["scaling"]["n_steps"], has_entries(full=full["runs"][0]["n_steps"], desk=desk["runs"][0]["n_steps"]))


def test_banana_bias_sweep():
    sweep = preset_config("banana-bias")["studies"]["bias_sweep"]
    assert_that(sweep, has_entries(step_sizes=[4e-3, 2e-3, 1e-3], horizon=1e6, n_chains=100, phi="banana_poly"))
    assert_that([entry["scheme"] for entry in sweep["schemes"]], equal_to(["tmula", "emrmld"]))
    assert_that(preset_config("banana-bias", desk_scale=True)["studies"]["bias_sweep"]["horizon"], equal_to(1e5))


def test_funnel_runs_every_scheme_at_one_step_size():
    runs = preset_config("funnel")["runs"]
    assert_that({run["scheme"] for run in runs}, equal_to({"ula", "rmld", "emrmld", "tmula", "tmula_irr"}))
    assert_that({run["h"] for run in runs}, equal_to({8e-3}))


def test_unknown_preset():
    with pytest.raises(ConfigError, match="banana-bias"):
        preset_config("bananas")
