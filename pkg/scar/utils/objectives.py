# utils/objectives.py
from ..models import Cost, ObjectiveKind
from .exceptions import ObjectiveError
from .prediction import rollout_deterministic, rollout_stochastic


def weighted_tardiness(empty_time, weights) -> float:
    """Sum of w_i * E[T_i]; the search computes its heuristic with this too."""
    if len(empty_time) != len(weights):
        raise ObjectiveError(
            f"{len(empty_time)} empty times but {len(weights)} weights"
        )
    total = 0.0
    for moment, weight in zip(empty_time, weights):
        total += weight * moment.mean
    return total


def tardiness_cost(prediction, weights, kind=ObjectiveKind.DT) -> Cost:
    if any(weight < 0 for weight in weights):
        raise ObjectiveError("Weights must be non-negative")
    return Cost(weighted_tardiness(prediction.empty_time, weights), ObjectiveKind(kind))


def ratio_cost(prediction, weights, n, kind=ObjectiveKind.DR) -> Cost:
    """Weighted tardiness over n * E[T_max]: the weighted share of time spent empty."""
    total_time = prediction.total_time.mean
    if total_time <= 0:
        raise ObjectiveError("Ratio cost needs a positive total schedule time")
    tardiness = tardiness_cost(prediction, weights, kind).value
    return Cost(tardiness / (n * total_time), ObjectiveKind(kind))


def cost_of(kind, prediction, config) -> Cost:
    kind = ObjectiveKind(kind)
    if kind.is_ratio:
        return ratio_cost(prediction, config.weights, config.n, kind)
    return tardiness_cost(prediction, config.weights, kind)


def evaluate(kind, config, state, schedule) -> Cost:
    """Cost of `schedule` under `kind`: D* kinds roll out at the means, S* kinds propagate variances."""
    kind = ObjectiveKind(kind)
    rollout = rollout_stochastic if kind.is_stochastic else rollout_deterministic
    return cost_of(kind, rollout(config, state, schedule), config)


def evaluate_all(config, state, schedule) -> dict:
    deterministic = rollout_deterministic(config, state, schedule)
    stochastic = rollout_stochastic(config, state, schedule)
    return {
        kind: cost_of(kind, stochastic if kind.is_stochastic else deterministic, config)
        for kind in ObjectiveKind
    }
