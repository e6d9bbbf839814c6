from rest_framework import serializers

from apps.core.serializers import FloatMatrixField, StrictSerializerMixin
from apps.core.utils import skew_violation

from .config import MAP_SCHEMES, SCHEMES, SKEW_TOL


class SolverOptionsSerializer(StrictSerializerMixin, serializers.Serializer):
    tol = serializers.FloatField(min_value=0.0, required=False)
    max_iters = serializers.IntegerField(min_value=1, required=False)
    max_halvings = serializers.IntegerField(min_value=0, required=False)

    def validate_tol(self, value):
        if value <= 0:
            raise serializers.ValidationError("tol must be positive.")
        return value


class SamplerConfigSerializer(StrictSerializerMixin, serializers.Serializer):
    """
    A sampler entry. ``map`` is ``"exact"`` (the target's exact map), ``"identity"``,
    the name of a map trained earlier in the same experiment, or a path to a map file.
    """

    scheme = serializers.ChoiceField(choices=SCHEMES)
    h = serializers.FloatField()
    skew_matrix = FloatMatrixField(required=False)
    delta = serializers.FloatField(default=1.0)
    map = serializers.CharField(required=False)
    implicit_solver = SolverOptionsSerializer(required=False)

    def validate_h(self, value):
        if not value > 0:
            raise serializers.ValidationError("h must be positive.")
        return value

    def validate_skew_matrix(self, value):
        if not value or len(value) != len(value[0]):
            raise serializers.ValidationError("Skew matrix must be square.")
        violation = skew_violation(value)
        if violation > SKEW_TOL:
            raise serializers.ValidationError(f"Skew matrix violates D = -D^T by {violation:.3e}.")
        return value

    def validate(self, attrs):
        if attrs["scheme"] in MAP_SCHEMES and not attrs.get("map"):
            raise serializers.ValidationError({"map": [f"Scheme '{attrs['scheme']}' needs a map."]})
        return attrs
