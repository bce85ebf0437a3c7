from rest_framework import serializers

from .models import (
    DEPOT, DepotSpec, FleetState, GaussianParam, ObjectiveKind, ReplenisherSpec,
    ScenarioConfig, UserAgentSpec,
)
from .utils.network import build_network


# ============================================================================
# SCENARIO DOCUMENT
# ============================================================================

class GaussianParamSerializer(serializers.Serializer):
    mean = serializers.FloatField()
    std_dev = serializers.FloatField(min_value=0.0, default=0.0)


class PositiveGaussianSerializer(GaussianParamSerializer):
    """Rates and speeds: the mean must be strictly positive."""

    def validate_mean(self, value):
        if value <= 0:
            raise serializers.ValidationError("Mean must be positive.")
        return value


class DurationSerializer(GaussianParamSerializer):
    mean = serializers.FloatField(min_value=0.0)


def _gaussian(data) -> GaussianParam:
    return GaussianParam(mean=data["mean"], std_dev=data.get("std_dev", 0.0))


class UserAgentSerializer(serializers.Serializer):
    id = serializers.IntegerField(required=False, min_value=0)
    capacity = serializers.FloatField()
    usage_rate = PositiveGaussianSerializer()
    weight = serializers.FloatField(required=False, allow_null=True, min_value=0.0)
    location = serializers.CharField()

    def validate_capacity(self, value):
        if value <= 0:
            raise serializers.ValidationError("Capacity must be positive.")
        return value


class ReplenisherSerializer(serializers.Serializer):
    capacity = serializers.FloatField()
    replenish_rate = PositiveGaussianSerializer()
    setup_time = DurationSerializer()
    packup_time = DurationSerializer()
    speed = PositiveGaussianSerializer()
    depot_threshold_fraction = serializers.FloatField(default=0.05)

    def validate_capacity(self, value):
        if value <= 0:
            raise serializers.ValidationError("Capacity must be positive.")
        return value

    def validate_depot_threshold_fraction(self, value):
        if not 0 < value < 1:
            raise serializers.ValidationError("Threshold fraction must lie strictly between 0 and 1.")
        return value


class DepotSerializer(serializers.Serializer):
    location = serializers.CharField()
    setup_time = DurationSerializer()
    packup_time = DurationSerializer()
    replenish_rate = PositiveGaussianSerializer()


class NetworkSerializer(serializers.Serializer):
    nodes = serializers.DictField(
        child=serializers.ListField(child=serializers.FloatField(), min_length=2, max_length=2),
        allow_empty=False,
    )
    edges = serializers.ListField(
        child=serializers.ListField(min_length=3, max_length=3),
    )


class ScenarioSerializer(serializers.Serializer):
    """
    Validates a scenario document and builds the immutable ScenarioConfig.

    Also used in the other direction: ScenarioSerializer(config).data is the
    document form of a loaded config.
    """
    users = UserAgentSerializer(many=True, allow_empty=False)
    replenisher = ReplenisherSerializer()
    depot = DepotSerializer()
    network = NetworkSerializer()
    sim_duration_s = serializers.FloatField(source="sim_duration", default=18000.0)

    def validate_sim_duration_s(self, value):
        if value <= 0:
            raise serializers.ValidationError("Simulation duration must be positive.")
        return value

    def validate_users(self, users):
        weights = [user.get("weight") for user in users]
        given = [w for w in weights if w is not None]
        if given and len(given) != len(weights):
            raise serializers.ValidationError("Give every user a weight, or none.")
        if given and sum(given) <= 0:
            raise serializers.ValidationError("User weights must not all be zero.")
        return users

    def validate(self, data):
        rate = data["replenisher"]["replenish_rate"]["mean"]
        fastest = max(user["usage_rate"]["mean"] for user in data["users"])
        if rate <= fastest:
            raise serializers.ValidationError({
                "replenisher": {
                    "replenish_rate": [
                        f"Replenish rate {rate} must exceed the largest usage rate {fastest}."
                    ]
                }
            })
        return data

    def create(self, validated_data):
        users_data = validated_data["users"]
        weights = [user.get("weight") for user in users_data]
        if weights[0] is None:
            # equal priorities
            weights = [1.0] * len(users_data)
        total = sum(weights)

        users = tuple(
            UserAgentSpec(
                id=index,
                capacity=user["capacity"],
                usage_rate=_gaussian(user["usage_rate"]),
                weight=weight / total,
                location=user["location"],
            )
            for index, (user, weight) in enumerate(zip(users_data, weights))
        )

        rep = validated_data["replenisher"]
        replenisher = ReplenisherSpec(
            capacity=rep["capacity"],
            replenish_rate=_gaussian(rep["replenish_rate"]),
            setup_time=_gaussian(rep["setup_time"]),
            packup_time=_gaussian(rep["packup_time"]),
            speed=_gaussian(rep["speed"]),
            depot_threshold_fraction=rep.get("depot_threshold_fraction", 0.05),
        )

        dep = validated_data["depot"]
        depot = DepotSpec(
            location=dep["location"],
            setup_time=_gaussian(dep["setup_time"]),
            packup_time=_gaussian(dep["packup_time"]),
            replenish_rate=_gaussian(dep["replenish_rate"]),
        )

        required = [depot.location] + [user.location for user in users]
        network = build_network(
            validated_data["network"]["nodes"],
            validated_data["network"]["edges"],
            required=list(dict.fromkeys(required)),
        )

        return ScenarioConfig(
            users=users,
            replenisher=replenisher,
            depot=depot,
            network=network,
            sim_duration=validated_data.get("sim_duration", 18000.0),
        )


# ============================================================================
# FLEET STATE
# ============================================================================

class FleetStateSerializer(serializers.Serializer):
    """Needs the scenario in context["config"] to check levels and location."""
    clock_s = serializers.FloatField(source="clock", min_value=0.0, default=0.0)
    user_levels = serializers.ListField(child=serializers.FloatField(min_value=0.0), allow_empty=False)
    replenisher_level = serializers.FloatField(min_value=0.0)
    replenisher_location = serializers.CharField(required=False)

    def validate(self, data):
        config = self.context["config"]
        levels = data["user_levels"]
        if len(levels) != config.n:
            raise serializers.ValidationError({
                "user_levels": [f"Expected {config.n} levels, got {len(levels)}."]
            })
        over = [
            f"users[{i}] level {level} exceeds capacity {user.capacity}."
            for i, (level, user) in enumerate(zip(levels, config.users))
            if level > user.capacity
        ]
        if over:
            raise serializers.ValidationError({"user_levels": over})
        if data["replenisher_level"] > config.replenisher.capacity:
            raise serializers.ValidationError({
                "replenisher_level": [
                    f"Level exceeds replenisher capacity {config.replenisher.capacity}."
                ]
            })
        location = data.get("replenisher_location") or config.location_of(DEPOT)
        if location not in config.network.nodes:
            raise serializers.ValidationError({
                "replenisher_location": [f"Unknown node {location!r}."]
            })
        data["replenisher_location"] = location
        return data

    def create(self, validated_data):
        return FleetState(
            clock=validated_data.get("clock", 0.0),
            user_levels=tuple(validated_data["user_levels"]),
            replenisher_level=validated_data["replenisher_level"],
            replenisher_location=validated_data["replenisher_location"],
        )


# ============================================================================
# API REQUESTS
# ============================================================================

class PlanRequestSerializer(serializers.Serializer):
    scenario = serializers.JSONField(required=False)
    users = serializers.IntegerField(required=False, min_value=1)
    state = serializers.JSONField()
    objective = serializers.ChoiceField(choices=ObjectiveKind.choices)
    horizon = serializers.IntegerField(min_value=1)


class EvaluateRequestSerializer(serializers.Serializer):
    scenario = serializers.JSONField(required=False)
    users = serializers.IntegerField(required=False, min_value=1)
    state = serializers.JSONField()
    schedule = serializers.ListField(child=serializers.CharField(), allow_empty=False)


# ============================================================================
# RESULTS
# ============================================================================

class TimeMomentSerializer(serializers.Serializer):
    mean = serializers.FloatField()
    variance = serializers.FloatField()


class TaskRecordSerializer(serializers.Serializer):
    task = serializers.CharField()
    start = TimeMomentSerializer()
    transfer_start = TimeMomentSerializer()
    end = TimeMomentSerializer()
    transferred = serializers.FloatField()


class PredictionSerializer(serializers.Serializer):
    per_task = TaskRecordSerializer(many=True)
    empty_time = TimeMomentSerializer(many=True)
    total_time = TimeMomentSerializer()
    end_state = FleetStateSerializer()


class AggregateResultSerializer(serializers.Serializer):
    objective = serializers.CharField()
    horizon = serializers.IntegerField()
    runs = serializers.IntegerField()
    median = serializers.FloatField()
    q1 = serializers.FloatField()
    q3 = serializers.FloatField()
    minimum = serializers.FloatField()
    maximum = serializers.FloatField()
    full_uptime_percent = serializers.FloatField()
    mean_nodes_expanded = serializers.FloatField()
    wall_time_s = serializers.FloatField()
