"""
Services for building sampler configurations from JSON and running chains to disk.
"""

import logging
import time
from pathlib import Path

import numpy as np

from apps.core.exceptions import ConfigError
from apps.core.serializers import validate_document
from apps.transport.maps import AffineMap
from apps.transport.serialization import load_map

from .config import SamplerConfig
from .implicit import SolverOptions
from .runner import run_ensemble, write_chains
from .serializers import SamplerConfigSerializer

logger = logging.getLogger(__name__)


def resolve_map(reference, target, base_dir=None, maps=None):
    """Map named by a sampler entry: "exact", "identity", a trained map name or a file path."""
    if reference is None:
        return None
    if reference == "exact":
        if target.exact_map is None:
            raise ConfigError(f"Target '{target.name}' has no exact map")
        return target.exact_map
    if reference == "identity":
        return AffineMap.identity(target.dim)
    if maps and reference in maps:
        return maps[reference]
    path = Path(reference)
    if not path.is_absolute() and base_dir is not None:
        path = Path(base_dir) / path
    return load_map(path)


def sampler_config_from_document(document, target, base_dir=None, maps=None):
    data = validate_document(SamplerConfigSerializer, document)
    skew = data.get("skew_matrix")
    return SamplerConfig(
        scheme=data["scheme"],
        step_size=data["h"],
        skew_matrix=None if skew is None else np.array(skew, dtype=float),
        delta=data["delta"],
        transport_map=resolve_map(data.get("map"), target, base_dir, maps),
        implicit_solver=SolverOptions(**data.get("implicit_solver", {})),
    )


def initial_points(target, n_chains, seed, y0=None):
    """Explicit start points, exact draws from the target when available, else the origin."""
    if y0 is not None:
        return np.broadcast_to(np.asarray(y0, dtype=float), (n_chains, target.dim)).copy()
    if target.can_sample_exactly:
        return target.sample_exact(n_chains, seed)
    return np.zeros((n_chains, target.dim))


class SamplingService:
    """Service for running ensembles of one configured scheme and writing the chains."""

    def __init__(self, target, config, jobs=1):
        self.target = target
        self.config = config
        self.jobs = jobs

    def sample(self, n_steps, seed, n_chains=1, y0=None, out_dir=None):
        start_time = time.time()
        start = initial_points(self.target, n_chains, seed, y0)
        chains = run_ensemble(self.target, self.config, start, n_steps, seed, range(n_chains), self.jobs)
        logger.info(
            f"Sampled {n_chains} {self.config.scheme} chain(s) of {n_steps} steps on {self.target.name} "
            f"in {time.time() - start_time:.2f}s"
        )
        if out_dir is not None:
            write_chains(out_dir, chains)
        return chains
