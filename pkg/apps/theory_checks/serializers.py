from rest_framework import serializers


class SuiteResultSerializer(serializers.Serializer):
    suite = serializers.CharField()
    passed = serializers.BooleanField()
    checks = serializers.ListField(child=serializers.DictField())
    summary = serializers.DictField()


class VerificationReportSerializer(serializers.Serializer):
    version = serializers.CharField()
    seed = serializers.IntegerField()
    n_points = serializers.IntegerField()
    passed = serializers.BooleanField()
    suites = serializers.DictField(child=SuiteResultSerializer())
