"""
Named experiment configurations. Each preset is written at full scale; ``desk_scale=True``
shortens the runs so that a preset finishes on a laptop in minutes, and records the scaling
in the config so report.json carries it.
"""

from apps.core.exceptions import ConfigError

DESK_HORIZON_FACTOR = 0.1
DESK_CHAINS = 20


def _scaled(value, desk_scale, factor=DESK_HORIZON_FACTOR):
    return type(value)(value * factor) if desk_scale else value


def _chains(n_chains, desk_scale):
    return min(n_chains, DESK_CHAINS) if desk_scale else n_chains


def _scaling(desk_scale, **pairs):
    if not desk_scale:
        return {}
    return {key: {"full": full, "desk": desk} for key, (full, desk) in pairs.items()}


def banana_bias(desk_scale=False):
    """Step-size sweep of the asymptotic bias of TMULA and EMRMLD with the exact banana map."""
    horizon, n_chains = 1e6, 100
    return {
        "name": "banana-bias",
        "target": {"name": "banana", "s": 4.0, "b": 0.01},
        "seed": 0,
        "studies": {
            "bias_sweep": {
                "schemes": [{"scheme": "tmula", "map": "exact"}, {"scheme": "emrmld", "map": "exact"}],
                "step_sizes": [4e-3, 2e-3, 1e-3],
                "horizon": _scaled(horizon, desk_scale),
                "n_chains": _chains(n_chains, desk_scale),
                "phi": "banana_poly",
            }
        },
        "diagnostics": {"enabled": False},
        "desk_scale": desk_scale,
        "scaling": _scaling(
            desk_scale,
            horizon=(horizon, _scaled(horizon, True)),
            n_chains=(n_chains, _chains(n_chains, True)),
        ),
    }


def funnel(desk_scale=False):
    """ULA, RMLD with the Fisher metric, and the map-preconditioned schemes on the funnel posterior."""
    n_steps, n_chains, h = 100_000, 100, 8e-3
    runs = [
        {"scheme": "ula", "h": h},
        {"scheme": "rmld", "h": h},
        {"scheme": "emrmld", "h": h, "map": "learned"},
        {"scheme": "tmula", "h": h, "map": "learned"},
        {"scheme": "tmula_irr", "h": h, "map": "learned"},
    ]
    for run in runs:
        run.update(n_steps=_scaled(n_steps, desk_scale), n_chains=_chains(n_chains, desk_scale))
    return {
        "name": "funnel",
        "target": {"name": "funnel"},
        "seed": 0,
        "maps": {
            "learned": {
                "source": "train",
                "samples": {
                    "source": "ula",
                    "h": 1e-4,
                    "n_chains": 200,
                    "n_steps": _scaled(20_000, desk_scale),
                    "burn_in_fraction": 0.1,
                    "n": 20_000,
                },
                "spec": {"total_order": 3},
            }
        },
        "runs": runs,
        "test_functions": ["exp_coord_2", "sum", "sum_sq"],
        "diagnostics": {"burn_in": _scaled(n_steps, desk_scale) // 10},
        "analyses": {"min_coordinate": {"coordinate": 2, "threshold": -1.0}},
        "desk_scale": desk_scale,
        "scaling": _scaling(
            desk_scale,
            n_steps=(n_steps, _scaled(n_steps, True)),
            n_chains=(n_chains, _chains(n_chains, True)),
            training_steps=(20_000, _scaled(20_000, True)),
        ),
    }


def rosenbrock(desk_scale=False):
    """Split-step implicit schemes with and without a learned map on the hybrid Rosenbrock target."""
    n_steps, n_chains, h = 100_000, 100, 0.01
    runs = [
        {"scheme": "uila", "h": h},
        {"scheme": "tmuila", "h": h, "map": "learned"},
    ]
    for run in runs:
        run.update(n_steps=_scaled(n_steps, desk_scale), n_chains=_chains(n_chains, desk_scale))
    return {
        "name": "rosenbrock",
        "target": {"name": "hybrid_rosenbrock", "n1": 4, "n2": 2, "mu": 1.0, "a": 30.0, "b": 20.0},
        "seed": 0,
        "maps": {
            "learned": {
                "source": "train",
                "samples": {"source": "exact", "n": 2500},
                "spec": {"total_order": 2},
            }
        },
        "runs": runs,
        "test_functions": ["sum", "sum_sq"],
        "diagnostics": {"burn_in": _scaled(n_steps, desk_scale) // 10},
        "desk_scale": desk_scale,
        "scaling": _scaling(
            desk_scale,
            n_steps=(n_steps, _scaled(n_steps, True)),
            n_chains=(n_chains, _chains(n_chains, True)),
        ),
    }


def mixture(desk_scale=False):
    """Maps learned from 200 and 2000 samples of the four-mode mixture, and their pushforward densities."""
    n_steps, n_chains, h = 100_000, 100, 0.05
    return {
        "name": "mixture",
        "target": {"name": "gaussian_mixture"},
        "seed": 0,
        "maps": {
            "n200": {"source": "train", "samples": {"source": "exact", "n": 200}, "spec": {"total_order": 3}},
            "n2000": {"source": "train", "samples": {"source": "exact", "n": 2000}, "spec": {"total_order": 3}},
        },
        "runs": [
            {
                "scheme": "tmula",
                "h": h,
                "map": "n2000",
                "n_steps": _scaled(n_steps, desk_scale),
                "n_chains": _chains(n_chains, desk_scale),
            }
        ],
        "test_functions": ["coord_1", "coord_2"],
        "analyses": {"pushforward": {"maps": ["n200", "n2000"]}},
        "desk_scale": desk_scale,
        "scaling": _scaling(
            desk_scale,
            n_steps=(n_steps, _scaled(n_steps, True)),
            n_chains=(n_chains, _chains(n_chains, True)),
        ),
    }


PRESETS = {
    "banana-bias": banana_bias,
    "funnel": funnel,
    "rosenbrock": rosenbrock,
    "mixture": mixture,
}


def preset_config(name, desk_scale=False):
    try:
        return PRESETS[name](desk_scale=desk_scale)
    except KeyError:
        raise ConfigError(f"Unknown experiment '{name}'; expected one of {', '.join(sorted(PRESETS))}") from None
