from collections.abc import Mapping

from rest_framework import serializers

from .exceptions import ConfigError


class StrictSerializerMixin:
    """Reject keys that are not declared fields."""

    def to_internal_value(self, data):
        if isinstance(data, Mapping):
            unknown = sorted(set(data) - set(self.fields))
            if unknown:
                raise serializers.ValidationError({key: ["Unknown field."] for key in unknown})
        return super().to_internal_value(data)


class FloatMatrixField(serializers.ListField):
    """A rectangular matrix of floats written as a list of rows."""

    child = serializers.ListField(child=serializers.FloatField())

    def to_internal_value(self, data):
        rows = super().to_internal_value(data)
        if rows and len({len(row) for row in rows}) != 1:
            raise serializers.ValidationError("Matrix rows must have equal length.")
        return rows


def validate_document(serializer_class, data, error_class=ConfigError, **kwargs):
    """Run a serializer over a JSON document and return validated data or raise ``error_class``."""
    serializer = serializer_class(data=data, **kwargs)
    if not serializer.is_valid():
        raise error_class(
            f"Invalid {serializer_class.__name__.replace('Serializer', '')} document: "
            f"{dict(serializer.errors)}",
            errors=serializer.errors,
        )
    return serializer.validated_data
