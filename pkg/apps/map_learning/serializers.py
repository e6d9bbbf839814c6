from rest_framework import serializers

from apps.core.serializers import StrictSerializerMixin
from apps.core.utils import tmula_setting

from .basis import MAX_TOTAL_ORDER
from .rectifiers import RECTIFIERS


class MapTrainingSpecSerializer(StrictSerializerMixin, serializers.Serializer):
    total_order = serializers.IntegerField(min_value=1, max_value=MAX_TOTAL_ORDER, default=2)
    basis = serializers.ChoiceField(choices=["hermite"], default="hermite")
    rectifier = serializers.ChoiceField(choices=sorted(RECTIFIERS), default="softplus")
    quadrature_points = serializers.IntegerField(min_value=8, required=False)
    max_iters = serializers.IntegerField(min_value=1, required=False)
    grad_tol = serializers.FloatField(min_value=0.0, required=False)
    standardize = serializers.BooleanField(default=True)

    def validate(self, attrs):
        attrs.setdefault("quadrature_points", tmula_setting("QUADRATURE_POINTS"))
        attrs.setdefault("max_iters", tmula_setting("TRAIN_MAX_ITERS"))
        attrs.setdefault("grad_tol", tmula_setting("TRAIN_GRAD_TOL"))
        return attrs
