"""
Serializers for the estimation API
"""
from rest_framework import serializers

from backend.core.datasets import TABLE_FILES
from backend.core.montecarlo import RESIDUAL_SHAPES


class PopulationSourceSerializer(serializers.Serializer):
    """Either a shipped population id or an inline summary"""

    pop_id = serializers.ChoiceField(choices=[1, 2], required=False)
    population = serializers.DictField(required=False)
    two_phase = serializers.BooleanField(default=False)

    def validate(self, attrs):
        if ('pop_id' in attrs) == ('population' in attrs):
            raise serializers.ValidationError('Give exactly one of pop_id and population')
        return attrs


class WeightsRequestSerializer(PopulationSourceSerializer):

    constants = serializers.DictField(default=dict)
    paper_literal = serializers.BooleanField(default=False)


class EvaluateRequestSerializer(PopulationSourceSerializer):

    spec = serializers.DictField()
    y_bar = serializers.FloatField()
    p = serializers.FloatField(min_value=0, max_value=1)
    p_prime = serializers.FloatField(min_value=0, max_value=1, required=False, allow_null=True)
    paper_literal = serializers.BooleanField(default=False)


class SimulationRequestSerializer(PopulationSourceSerializer):

    plan = serializers.DictField()
    seed = serializers.IntegerField(required=False, allow_null=True, min_value=0)
    residuals = serializers.ChoiceField(choices=list(RESIDUAL_SHAPES), required=False)


class TableQuerySerializer(serializers.Serializer):

    table_id = serializers.CharField()
    pop = serializers.ChoiceField(choices=[1, 2], default=1)
    paper_literal = serializers.BooleanField(default=False)

    def validate_table_id(self, value):
        value = value.upper()
        if value not in TABLE_FILES:
            raise serializers.ValidationError(f"Unknown table: {value}")
        return value
