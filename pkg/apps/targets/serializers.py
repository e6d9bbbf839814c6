from rest_framework import serializers

from apps.core.serializers import FloatMatrixField, StrictSerializerMixin

TARGET_NAMES = (
    "banana",
    "funnel",
    "hybrid_rosenbrock",
    "gaussian_mixture",
    "anisotropic_gaussian",
    "standard_normal",
    "gaussian",
)


class TargetNameSerializer(serializers.Serializer):
    name = serializers.ChoiceField(choices=TARGET_NAMES)


class BananaSerializer(StrictSerializerMixin, serializers.Serializer):
    name = serializers.CharField()
    s = serializers.FloatField(default=4.0)
    b = serializers.FloatField(default=0.01)

    def validate_s(self, value):
        if value <= 0:
            raise serializers.ValidationError("s must be positive.")
        return value


class FunnelSerializer(StrictSerializerMixin, serializers.Serializer):
    name = serializers.CharField()
    data = serializers.ListField(child=serializers.FloatField(), required=False, allow_empty=False)
    alpha = serializers.FloatField(default=0.75)
    beta = serializers.FloatField(default=0.5)


class RosenbrockCoefficientField(serializers.Field):
    """A positive scalar or a matrix of positive coefficients."""

    def to_internal_value(self, data):
        if isinstance(data, (int, float)) and not isinstance(data, bool):
            if data <= 0:
                raise serializers.ValidationError("Coefficients must be positive.")
            return float(data)
        values = FloatMatrixField().to_internal_value(data)
        if any(value <= 0 for row in values for value in row):
            raise serializers.ValidationError("Coefficients must be positive.")
        return values

    def to_representation(self, value):
        return value


class HybridRosenbrockSerializer(StrictSerializerMixin, serializers.Serializer):
    name = serializers.CharField()
    n1 = serializers.IntegerField(min_value=2, default=4)
    n2 = serializers.IntegerField(min_value=1, default=2)
    mu = serializers.FloatField(default=1.0)
    a = serializers.FloatField(default=30.0)
    b = RosenbrockCoefficientField(default=20.0)

    def validate_a(self, value):
        if value <= 0:
            raise serializers.ValidationError("a must be positive.")
        return value


class GaussianMixtureSerializer(StrictSerializerMixin, serializers.Serializer):
    name = serializers.CharField()
    means = FloatMatrixField(required=False)
    covs = serializers.ListField(child=FloatMatrixField(), required=False)
    weights = serializers.ListField(child=serializers.FloatField(), required=False)


class AnisotropicGaussianSerializer(StrictSerializerMixin, serializers.Serializer):
    name = serializers.CharField()
    m = serializers.FloatField(default=1.0)
    L = serializers.FloatField(default=1.0)

    def validate(self, attrs):
        if not 0 < attrs["m"] <= attrs["L"]:
            raise serializers.ValidationError("Expected 0 < m <= L.")
        return attrs


class StandardNormalSerializer(StrictSerializerMixin, serializers.Serializer):
    name = serializers.CharField()
    dim = serializers.IntegerField(min_value=1, default=2)


class GaussianSerializer(StrictSerializerMixin, serializers.Serializer):
    name = serializers.CharField()
    mean = serializers.ListField(child=serializers.FloatField(), allow_empty=False)
    cov = FloatMatrixField()


TARGET_SERIALIZERS = {
    "banana": BananaSerializer,
    "funnel": FunnelSerializer,
    "hybrid_rosenbrock": HybridRosenbrockSerializer,
    "gaussian_mixture": GaussianMixtureSerializer,
    "anisotropic_gaussian": AnisotropicGaussianSerializer,
    "standard_normal": StandardNormalSerializer,
    "gaussian": GaussianSerializer,
}
