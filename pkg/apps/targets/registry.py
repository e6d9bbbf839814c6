"""
Targets addressable by name and parameters, e.g. ``{"name": "banana", "s": 4.0, "b": 0.01}``.
"""

import logging

from apps.core.exceptions import ConfigError
from apps.core.serializers import validate_document

from . import densities
from .serializers import TARGET_SERIALIZERS, TargetNameSerializer

logger = logging.getLogger(__name__)

FACTORIES = {
    "banana": densities.banana,
    "funnel": densities.funnel_posterior,
    "hybrid_rosenbrock": densities.hybrid_rosenbrock,
    "gaussian_mixture": densities.gaussian_mixture,
    "anisotropic_gaussian": densities.anisotropic_gaussian,
    "standard_normal": densities.standard_normal,
    "gaussian": densities.gaussian,
}


def build_target(spec):
    """Validate a target spec and construct the density it names."""
    if not isinstance(spec, dict):
        raise ConfigError("Target spec must be a JSON object")
    name = validate_document(TargetNameSerializer, spec)["name"]
    params = dict(validate_document(TARGET_SERIALIZERS[name], spec))
    params.pop("name")
    target = FACTORIES[name](**params)
    logger.debug(f"Built target {name} (dim={target.dim})")
    return target
