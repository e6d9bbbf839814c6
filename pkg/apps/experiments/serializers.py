from rest_framework import serializers

from apps.core.exceptions import ConfigError, InvalidParameterError
from apps.core.serializers import StrictSerializerMixin
from apps.diagnostics.services import DEFAULT_KSD_POINTS
from apps.map_learning.serializers import MapTrainingSpecSerializer
from apps.samplers.config import SCHEMES
from apps.samplers.serializers import SamplerConfigSerializer
from apps.targets.registry import build_target

SAMPLE_SOURCES = ("exact", "ula", "file")
MAP_SOURCES = ("train", "file", "exact")


class TrainingSamplesSerializer(StrictSerializerMixin, serializers.Serializer):
    """
    Where training samples come from: exact draws from the target, a thinned ULA ensemble
    run at a small step size, or a CSV file.
    """

    source = serializers.ChoiceField(choices=SAMPLE_SOURCES)
    n = serializers.IntegerField(min_value=1, required=False)
    path = serializers.CharField(required=False)
    h = serializers.FloatField(required=False)
    n_chains = serializers.IntegerField(min_value=1, default=1)
    n_steps = serializers.IntegerField(min_value=1, required=False)
    burn_in_fraction = serializers.FloatField(min_value=0.0, max_value=0.9, default=0.1)
    seed = serializers.IntegerField(required=False)

    def validate(self, attrs):
        source = attrs["source"]
        if source == "file" and not attrs.get("path"):
            raise serializers.ValidationError({"path": ["File samples need a path."]})
        if source in ("exact", "ula") and "n" not in attrs:
            raise serializers.ValidationError({"n": [f"'{source}' samples need a sample count."]})
        if source == "ula":
            if not attrs.get("h", 0) > 0:
                raise serializers.ValidationError({"h": ["ULA samples need a positive step size."]})
            if "n_steps" not in attrs:
                raise serializers.ValidationError({"n_steps": ["ULA samples need a chain length."]})
        return attrs


class MapSourceSerializer(StrictSerializerMixin, serializers.Serializer):
    source = serializers.ChoiceField(choices=MAP_SOURCES)
    path = serializers.CharField(required=False)
    samples = TrainingSamplesSerializer(required=False)
    spec = MapTrainingSpecSerializer(required=False)

    def validate(self, attrs):
        if attrs["source"] == "file" and not attrs.get("path"):
            raise serializers.ValidationError({"path": ["A map file source needs a path."]})
        if attrs["source"] == "train" and "samples" not in attrs:
            raise serializers.ValidationError({"samples": ["A trained map needs training samples."]})
        return attrs


class RunSerializer(SamplerConfigSerializer):
    """A sampler entry plus its chain length and ensemble size."""

    n_steps = serializers.IntegerField(min_value=1)
    n_chains = serializers.IntegerField(min_value=1, default=1)


class DiagnosticsOptionsSerializer(StrictSerializerMixin, serializers.Serializer):
    enabled = serializers.BooleanField(default=True)
    burn_in = serializers.IntegerField(min_value=0, default=0)
    ksd = serializers.BooleanField(default=True)
    ksd_points = serializers.IntegerField(min_value=10, default=DEFAULT_KSD_POINTS)
    plots = serializers.BooleanField(default=True)


class SweepSchemeSerializer(StrictSerializerMixin, serializers.Serializer):
    scheme = serializers.ChoiceField(choices=SCHEMES)
    map = serializers.CharField(required=False)


class BiasSweepOptionsSerializer(StrictSerializerMixin, serializers.Serializer):
    schemes = SweepSchemeSerializer(many=True, allow_empty=False)
    step_sizes = serializers.ListField(child=serializers.FloatField(), allow_empty=False)
    horizon = serializers.FloatField()
    n_chains = serializers.IntegerField(min_value=1, default=1)
    phi = serializers.CharField()
    truth = serializers.FloatField(required=False, allow_null=True, default=None)
    coupled = serializers.BooleanField(required=False, allow_null=True, default=None)
    burn_in_fraction = serializers.FloatField(min_value=0.0, max_value=0.9, default=0.1)

    def validate_step_sizes(self, value):
        if any(not h > 0 for h in value):
            raise serializers.ValidationError("Step sizes must be positive.")
        return value

    def validate_horizon(self, value):
        if not value > 0:
            raise serializers.ValidationError("horizon must be positive.")
        return value


class MseOptionsSerializer(StrictSerializerMixin, serializers.Serializer):
    phi = serializers.CharField()
    truth = serializers.FloatField(required=False, allow_null=True, default=None)
    lengths = serializers.ListField(child=serializers.IntegerField(min_value=1), required=False)
    burn_in = serializers.IntegerField(min_value=0, default=0)


class StudiesSerializer(StrictSerializerMixin, serializers.Serializer):
    bias_sweep = BiasSweepOptionsSerializer(required=False)
    mse = MseOptionsSerializer(required=False)


class PushforwardOptionsSerializer(StrictSerializerMixin, serializers.Serializer):
    """Pushforward log-density grid, training-sample scatter and separatrix minimum per trained map."""

    maps = serializers.ListField(child=serializers.CharField(), allow_empty=False)
    grid_points = serializers.IntegerField(min_value=2, default=61)
    half_width = serializers.FloatField(default=4.0)
    segment = serializers.ListField(
        child=serializers.ListField(child=serializers.FloatField(), min_length=2, max_length=2),
        min_length=2,
        max_length=2,
        default=lambda: [[-4.0, -4.0], [4.0, 4.0]],
    )
    segment_points = serializers.IntegerField(min_value=2, default=401)

    def validate_half_width(self, value):
        if not value > 0:
            raise serializers.ValidationError("half_width must be positive.")
        return value


class MinCoordinateOptionsSerializer(StrictSerializerMixin, serializers.Serializer):
    """Minimum of one coordinate over every chain of each (scheme, seed), e.g. the funnel's gamma."""

    coordinate = serializers.IntegerField(min_value=1)
    threshold = serializers.FloatField(required=False, allow_null=True, default=None)


class AnalysesSerializer(StrictSerializerMixin, serializers.Serializer):
    pushforward = PushforwardOptionsSerializer(required=False)
    min_coordinate = MinCoordinateOptionsSerializer(required=False)


class ExperimentConfigSerializer(StrictSerializerMixin, serializers.Serializer):
    name = serializers.CharField()
    target = serializers.DictField()
    seed = serializers.IntegerField(default=0)
    n_seeds = serializers.IntegerField(min_value=1, default=1)
    maps = serializers.DictField(child=MapSourceSerializer(), default=dict)
    runs = RunSerializer(many=True, default=list)
    test_functions = serializers.ListField(child=serializers.CharField(), allow_empty=False, default=lambda: ["sum"])
    diagnostics = DiagnosticsOptionsSerializer(required=False)
    studies = StudiesSerializer(required=False)
    analyses = AnalysesSerializer(required=False)
    write_chains = serializers.BooleanField(default=True)
    desk_scale = serializers.BooleanField(default=False)
    scaling = serializers.DictField(default=dict)
    output_dir = serializers.CharField(required=False)

    def to_internal_value(self, data):
        if isinstance(data, dict):
            data = {"diagnostics": {}, "studies": {}, "analyses": {}, **data}
        return super().to_internal_value(data)

    def validate_target(self, value):
        try:
            build_target(value)
        except (ConfigError, InvalidParameterError) as err:
            raise serializers.ValidationError(str(err))
        return value

    def validate(self, attrs):
        names = set(attrs["maps"])
        reserved = {"exact", "identity"} & names
        if reserved:
            raise serializers.ValidationError({"maps": [f"Map names {sorted(reserved)} are reserved."]})
        keys = [(run["scheme"], run["h"]) for run in attrs["runs"]]
        if len(set(keys)) != len(keys):
            raise serializers.ValidationError({"runs": ["Each (scheme, h) pair may appear only once."]})
        for pushforward_map in attrs["analyses"].get("pushforward", {}).get("maps", []):
            source = attrs["maps"].get(pushforward_map, {}).get("source")
            if source != "train":
                raise serializers.ValidationError(
                    {"analyses": [f"Pushforward map '{pushforward_map}' must be a trained map of this experiment."]}
                )
        return attrs
