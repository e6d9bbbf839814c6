from rest_framework import serializers

from apps.core.serializers import StrictSerializerMixin


class NullableFloatField(serializers.FloatField):
    """Float that serializes NaN and infinities as null."""

    def to_representation(self, value):
        if value is None:
            return None
        value = float(value)
        return value if value == value and abs(value) != float("inf") else None


def float_list(**kwargs):
    return serializers.ListField(child=NullableFloatField(allow_null=True), **kwargs)


class EstimateSerializer(serializers.Serializer):
    scheme = serializers.CharField()
    h = NullableFloatField(allow_null=True)
    phi = serializers.CharField()
    mean = NullableFloatField(allow_null=True)
    avar = NullableFloatField(allow_null=True)
    mcse = NullableFloatField(allow_null=True)
    n_chains = serializers.IntegerField()
    n_diverged = serializers.IntegerField()
    chain_means = float_list()
    chain_avars = float_list()


class KsdSerializer(serializers.Serializer):
    scheme = serializers.CharField()
    h = NullableFloatField(allow_null=True)
    n_points = serializers.IntegerField()
    value = NullableFloatField(allow_null=True)
    series = serializers.ListField(child=float_list())


class MseTableSerializer(serializers.Serializer):
    scheme = serializers.CharField()
    h = NullableFloatField()
    phi = serializers.CharField()
    truth = NullableFloatField()
    lengths = serializers.ListField(child=serializers.IntegerField())
    bias = float_list()
    variance = float_list()
    mse = float_list()
    n_chains = serializers.IntegerField()
    n_diverged = serializers.IntegerField()
    seeds = serializers.ListField(child=serializers.IntegerField())


class BiasSweepRowSerializer(serializers.Serializer):
    h = NullableFloatField()
    n_steps = serializers.IntegerField()
    error = NullableFloatField(allow_null=True)
    error_over_h = NullableFloatField(allow_null=True)
    stderr = NullableFloatField(allow_null=True)
    n_chains = serializers.IntegerField()
    n_diverged = serializers.IntegerField()


class BiasSweepSerializer(serializers.Serializer):
    scheme = serializers.CharField()
    phi = serializers.CharField()
    coupled = serializers.BooleanField()
    horizon = NullableFloatField()
    seed = serializers.IntegerField()
    lambda_hat = NullableFloatField(allow_null=True)
    rows = BiasSweepRowSerializer(many=True)


class DiagnosticsReportSerializer(StrictSerializerMixin, serializers.Serializer):
    version = serializers.CharField()
    metadata = serializers.DictField()
    estimates = EstimateSerializer(many=True)
    ksd = KsdSerializer(many=True)
    mse = MseTableSerializer(many=True)
    bias_sweeps = BiasSweepSerializer(many=True)
    extra = serializers.DictField()
