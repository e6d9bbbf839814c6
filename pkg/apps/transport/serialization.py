"""
JSON map files.

Floats are written with Python's shortest round-trip representation (at most 17
significant digits), so a loaded map reproduces every coefficient bit for bit.
"""

import json
import logging
from pathlib import Path

from apps.core.exceptions import MapSchemaError
from apps.core.serializers import validate_document
from apps.map_learning.components import MonotoneComponent

from .maps import AffineMap, BananaMap, ComposedMap, RosenbrockMap, TriangularMap
from .serializers import KIND_SERIALIZERS, MAP_FILE_VERSION, MapEnvelopeSerializer

logger = logging.getLogger(__name__)


def map_to_document(transport_map):
    return {"version": MAP_FILE_VERSION, **transport_map.to_dict()}


def _build(data):
    kind = data["kind"]
    if kind == "affine":
        return AffineMap(data["matrix"], data["offset"])
    if kind == "banana":
        return BananaMap(data["s"], data["b"])
    if kind == "rosenbrock":
        return RosenbrockMap(data["n1"], data["n2"], data["mu"], data["a"], data["b"])
    if kind == "triangular":
        triangular = TriangularMap(
            [
                MonotoneComponent(
                    k,
                    component["multi_indices"],
                    component["coefficients"],
                    component["rectifier"],
                    component.get("quadrature_points"),
                )
                for k, component in enumerate(data["components"])
            ]
        )
        if data.get("pre_map"):
            return ComposedMap(triangular, _build(data["pre_map"]))
        return triangular
    return ComposedMap(map_from_document(data["outer"]), map_from_document(data["inner"]))


def map_from_document(document, top_level=False):
    """Validate a map document and build the map it describes."""
    if not isinstance(document, dict):
        raise MapSchemaError("Map document must be a JSON object")
    if top_level:
        validate_document(MapEnvelopeSerializer, document, error_class=MapSchemaError)
    elif document.get("kind") not in KIND_SERIALIZERS:
        raise MapSchemaError(f"Unknown map kind {document.get('kind')!r}")
    data = validate_document(KIND_SERIALIZERS[document["kind"]], document, error_class=MapSchemaError)
    transport_map = _build(data)
    if transport_map.dim != data["dim"]:
        raise MapSchemaError(f"Map declares dim={data['dim']} but its parameters give {transport_map.dim}")
    return transport_map


def save_map(transport_map, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(map_to_document(transport_map), indent=2) + "\n", encoding="utf-8")
    logger.info(f"Saved {transport_map.kind} map (dim={transport_map.dim}) to {path}")
    return path


def load_map(path):
    path = Path(path)
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as err:
        raise MapSchemaError(f"Could not read map file {path}: {err}") from err
    try:
        transport_map = map_from_document(document, top_level=True)
    except ValueError as err:
        raise MapSchemaError(f"Map file {path} has invalid parameters: {err}") from err
    logger.debug(f"Loaded {transport_map.kind} map from {path}")
    return transport_map
