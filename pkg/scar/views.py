from rest_framework import generics, status
from rest_framework.decorators import api_view
from rest_framework.exceptions import ValidationError
from rest_framework.response import Response

from .models import ObjectiveKind, parse_schedule, schedule_label
from .serializers import (
    EvaluateRequestSerializer, PlanRequestSerializer, PredictionSerializer, ScenarioSerializer,
)
from .utils.objectives import evaluate_all
from .utils.prediction import rollout_deterministic, rollout_stochastic
from .utils.scenario import default_config, parse_config, parse_state, with_users
from .utils.search import astar_schedule


def _request_config(data):
    """Posted scenario if any, else the shipped one; optionally cut to `users` agents."""
    config = parse_config(data["scenario"]) if data.get("scenario") is not None else default_config()
    if data.get("users"):
        config = with_users(config, data["users"])
    return config


@api_view(['POST'])
def validate_scenario(request):
    """
    POST /api/scenarios/validate/

    Body: a scenario document. Returns the normalized scenario (weights
    summing to one, defaults filled in) or a 400 with per-field messages.
    """
    config = parse_config(request.data)
    return Response({
        "valid": True,
        "users": config.n,
        "scenario": ScenarioSerializer(config).data,
    }, status=status.HTTP_200_OK)


class PlanView(generics.GenericAPIView):
    """
    POST /api/plan/

    Request body:
    {
        "scenario": {...},          # optional, shipped scenario otherwise
        "users": 4,                 # optional
        "state": {"clock_s": 0, "user_levels": [...], "replenisher_level": 3800},
        "objective": "sr",
        "horizon": 5
    }
    """
    serializer_class = PlanRequestSerializer

    def post(self, request):
        serializer = self.get_serializer(data=request.data)
        serializer.is_valid(raise_exception=True)
        data = serializer.validated_data

        config = _request_config(data)
        state = parse_state(data["state"], config)
        result = astar_schedule(config, state, data["horizon"], data["objective"])

        return Response({
            "schedule": [str(task) for task in result.schedule],
            "label": schedule_label(result.schedule),
            "objective": result.cost.kind.value,
            "cost": result.cost.value,
            "nodes_expanded": result.nodes_expanded,
            "consistency_violations": result.consistency_violations,
            "admissibility_violations": result.admissibility_violations,
        }, status=status.HTTP_200_OK)


class EvaluateView(generics.GenericAPIView):
    """
    POST /api/evaluate/

    Same scenario/state fields as /api/plan/ plus "schedule": ["0", "2", "r"].
    Returns all four costs and both rollouts of the schedule.
    """
    serializer_class = EvaluateRequestSerializer

    def post(self, request):
        serializer = self.get_serializer(data=request.data)
        serializer.is_valid(raise_exception=True)
        data = serializer.validated_data

        try:
            schedule = parse_schedule(data["schedule"])
        except ValueError as exc:
            raise ValidationError({"schedule": [str(exc)]})

        config = _request_config(data)
        state = parse_state(data["state"], config)
        costs = evaluate_all(config, state, schedule)

        return Response({
            "schedule": [str(task) for task in schedule],
            "costs": {kind.value: costs[kind].value for kind in ObjectiveKind},
            "deterministic": PredictionSerializer(rollout_deterministic(config, state, schedule)).data,
            "stochastic": PredictionSerializer(rollout_stochastic(config, state, schedule)).data,
        }, status=status.HTTP_200_OK)
