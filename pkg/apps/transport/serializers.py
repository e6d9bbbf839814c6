from rest_framework import serializers

from apps.core.serializers import FloatMatrixField, StrictSerializerMixin
from apps.map_learning.rectifiers import RECTIFIERS

MAP_FILE_VERSION = "1"
MAP_KINDS = ("affine", "banana", "rosenbrock", "triangular", "composed")


class MapEnvelopeSerializer(serializers.Serializer):
    version = serializers.ChoiceField(choices=[MAP_FILE_VERSION])
    kind = serializers.ChoiceField(choices=MAP_KINDS)
    dim = serializers.IntegerField(min_value=1)


class BaseMapSerializer(StrictSerializerMixin, serializers.Serializer):
    version = serializers.ChoiceField(choices=[MAP_FILE_VERSION], required=False)
    kind = serializers.ChoiceField(choices=MAP_KINDS)
    dim = serializers.IntegerField(min_value=1)


class AffineMapSerializer(BaseMapSerializer):
    matrix = FloatMatrixField()
    offset = serializers.ListField(child=serializers.FloatField())

    def validate(self, attrs):
        dim = attrs["dim"]
        if len(attrs["matrix"]) != dim or any(len(row) != dim for row in attrs["matrix"]):
            raise serializers.ValidationError({"matrix": [f"Matrix must be {dim}x{dim}."]})
        if len(attrs["offset"]) != dim:
            raise serializers.ValidationError({"offset": [f"Offset must have length {dim}."]})
        return attrs


class BananaMapSerializer(BaseMapSerializer):
    s = serializers.FloatField()
    b = serializers.FloatField()

    def validate_s(self, value):
        if value <= 0:
            raise serializers.ValidationError("s must be positive.")
        return value


class RosenbrockMapSerializer(BaseMapSerializer):
    n1 = serializers.IntegerField(min_value=2)
    n2 = serializers.IntegerField(min_value=1)
    mu = serializers.FloatField()
    a = serializers.FloatField()
    b = FloatMatrixField()


class ComponentSerializer(StrictSerializerMixin, serializers.Serializer):
    multi_indices = serializers.ListField(child=serializers.ListField(child=serializers.IntegerField(min_value=0)))
    coefficients = serializers.ListField(child=serializers.FloatField())
    rectifier = serializers.ChoiceField(choices=sorted(RECTIFIERS))
    quadrature_points = serializers.IntegerField(min_value=8, required=False)

    def validate(self, attrs):
        if len(attrs["multi_indices"]) != len(attrs["coefficients"]):
            raise serializers.ValidationError("Each coefficient needs exactly one multi-index.")
        return attrs


class TriangularMapSerializer(BaseMapSerializer):
    components = ComponentSerializer(many=True)
    pre_map = AffineMapSerializer(required=False)

    def validate(self, attrs):
        if len(attrs["components"]) != attrs["dim"]:
            raise serializers.ValidationError({"components": [f"Expected {attrs['dim']} components."]})
        for k, component in enumerate(attrs["components"]):
            if any(len(alpha) != k + 1 for alpha in component["multi_indices"]):
                raise serializers.ValidationError(
                    {"components": [f"Multi-indices of component {k} must have length {k + 1}."]}
                )
        return attrs


class ComposedMapSerializer(BaseMapSerializer):
    outer = serializers.DictField()
    inner = serializers.DictField()


KIND_SERIALIZERS = {
    "affine": AffineMapSerializer,
    "banana": BananaMapSerializer,
    "rosenbrock": RosenbrockMapSerializer,
    "triangular": TriangularMapSerializer,
    "composed": ComposedMapSerializer,
}
