# utils/search.py
"""
Finite-horizon schedule optimisation by A* over the task tree.

The root of the tree is the current fleet state, each level adds one task and
a phantom goal node hangs below every depth-h leaf: the first phantom popped
from the frontier carries the lowest-cost schedule.

Pruning rules applied while branching:
  - a task never follows itself;
  - a replenisher predicted below its depot threshold (or empty) may only go
    to the depot.
"""
import heapq
import itertools
import logging
from dataclasses import dataclass

import numpy as np
from django.conf import settings

from ..models import DEPOT, ObjectiveKind
from .exceptions import SearchError
from .network import distance
from .objectives import cost_of, evaluate, weighted_tardiness
from .prediction import RolloutCursor

logger = logging.getLogger(__name__)

# relative slack when checking the heuristic against costs
TOLERANCE = 1e-9


# ============================================================================
# MAX-TIME TABLE
# ============================================================================

def _task_index(config, task) -> int:
    return config.n if task.is_depot else task.user


def max_task_duration_from(config, location, task) -> float:
    """
    Longest mean-parameter time of `task` started at `location`: the user is
    assumed completely empty (or the replenisher completely empty for the
    depot visit).
    """
    rep = config.replenisher
    travel = distance(config.network, location, config.location_of(task)) / rep.speed.mean
    if task.is_depot:
        depot = config.depot
        transfer = rep.capacity / depot.replenish_rate.mean
        return travel + depot.setup_time.mean + transfer + depot.packup_time.mean
    user = config.users[task.user]
    transfer = user.capacity / (rep.replenish_rate.mean - user.usage_rate.mean)
    return travel + rep.setup_time.mean + transfer + rep.packup_time.mean


def max_task_duration(config, prev_task, next_task) -> float:
    if prev_task == next_task:
        raise SearchError(f"Task {next_task} cannot follow itself")
    return max_task_duration_from(config, config.location_of(prev_task), next_task)


@dataclass(frozen=True)
class MaxTimeTable:
    """
    entries[p, k]: upper bound on the mean time of the next k tasks when the
    last task was p (index n is the depot).
    """
    entries: np.ndarray

    @property
    def horizon(self) -> int:
        return self.entries.shape[1] - 1

    def max_remaining(self, config, last_task, k) -> float:
        return float(self.entries[_task_index(config, last_task), k])

    def from_location(self, config, location, k) -> float:
        """Bound for the root, where no task has been performed yet."""
        if k == 0:
            return 0.0
        return max(
            max_task_duration_from(config, location, task)
            + float(self.entries[_task_index(config, task), k - 1])
            for task in config.tasks
        )


def build_max_time_table(config, h) -> MaxTimeTable:
    """Backwards recursion over the number of tasks still to be chosen."""
    if h < 1:
        raise SearchError(f"Horizon must be at least 1, got {h}")
    tasks = config.tasks
    size = len(tasks)
    legs = np.full((size, size), -np.inf)
    for p, prev_task in enumerate(tasks):
        for t, next_task in enumerate(tasks):
            if p != t:
                legs[p, t] = max_task_duration(config, prev_task, next_task)

    entries = np.zeros((size, h + 1))
    for k in range(1, h + 1):
        entries[:, k] = np.max(legs + entries[:, k - 1][None, :], axis=1)
    return MaxTimeTable(entries=entries)


# ============================================================================
# TREE
# ============================================================================

@dataclass(frozen=True)
class SearchNode:
    cursor: RolloutCursor
    depth: int
    f_value: float = 0.0
    phantom: bool = False

    @property
    def partial_schedule(self) -> tuple:
        return self.cursor.schedule

    def priority(self, tiebreak) -> tuple:
        # lower f, then deeper, then lexicographic task order
        keys = tuple(task.sort_key for task in self.cursor.schedule)
        return (self.f_value, -self.depth, keys, tiebreak)


def depot_forced(config, level) -> bool:
    return level <= 0 or level < config.replenisher.threshold


def successors(config, cursor) -> list:
    # the depot rule wins over the no-repeat rule
    if depot_forced(config, cursor.replenisher_level):
        return [DEPOT]
    return [task for task in config.tasks if task != cursor.last_task]


def root_node(config, state, kind, last_task=None) -> SearchNode:
    kind = ObjectiveKind(kind)
    cursor = RolloutCursor.start(config, state, stochastic=kind.is_stochastic, last_task=last_task)
    return SearchNode(cursor, 0)


def heuristic(node: SearchNode, kind, table: MaxTimeTable, h) -> float:
    """
    Tardiness kinds: accrued weighted tardiness, assuming nobody runs empty in
    the remaining tasks. Ratio kinds divide that by n times an upper bound on
    the schedule time (elapsed time plus the max-time table entry).
    """
    cursor = node.cursor
    config = cursor.config
    accrued = weighted_tardiness(cursor.empty_times(), config.weights)
    if not ObjectiveKind(kind).is_ratio:
        return accrued
    remaining = h - node.depth
    if node.depth == 0:
        bound = table.from_location(config, cursor.location, remaining)
    else:
        bound = table.max_remaining(config, cursor.last_task, remaining)
    total = cursor.elapsed + bound
    if total <= 0:
        return 0.0
    return accrued / (config.n * total)


def child_node(node: SearchNode, task, kind, table, h) -> SearchNode:
    child = SearchNode(node.cursor.advance(task), node.depth + 1)
    return SearchNode(child.cursor, child.depth, heuristic(child, kind, table, h))


# ============================================================================
# SEARCHES
# ============================================================================

@dataclass(frozen=True)
class SearchResult:
    schedule: tuple
    cost: object
    nodes_expanded: int
    consistency_violations: int = 0
    admissibility_violations: int = 0


def astar_schedule(config, state, h, kind, table=None, last_task=None) -> SearchResult:
    """
    Lowest-cost length-h schedule under `kind`. `nodes_expanded` counts the
    tree nodes whose successors were generated; popping a leaf only produces
    the phantom goal.
    """
    if h < 1:
        raise SearchError(f"Horizon must be at least 1, got {h}")
    kind = ObjectiveKind(kind)
    if table is None or table.horizon < h:
        table = build_max_time_table(config, h)

    counter = itertools.count()
    root = root_node(config, state, kind, last_task)
    root = SearchNode(root.cursor, 0, heuristic(root, kind, table, h))
    frontier = [(root.priority(next(counter)), root)]
    expanded_f = []
    nodes_expanded = 0
    inconsistent = 0

    while frontier:
        _, node = heapq.heappop(frontier)

        if node.phantom:
            schedule = node.partial_schedule
            cost = evaluate(kind, config, state, schedule)
            slack = TOLERANCE * max(1.0, abs(cost.value))
            inadmissible = sum(1 for f in expanded_f if f > cost.value + slack)
            if inadmissible:
                logger.warning(
                    "Heuristic overestimated the %s cost at %d node(s)", kind.value, inadmissible
                )
            if inconsistent:
                logger.warning(
                    "Heuristic decreased along %d edge(s) for %s", inconsistent, kind.value
                )
            return SearchResult(schedule, cost, nodes_expanded, inconsistent, inadmissible)

        expanded_f.append(node.f_value)
        if node.depth == h:
            phantom = SearchNode(node.cursor, h + 1, node.f_value, phantom=True)
            heapq.heappush(frontier, (phantom.priority(next(counter)), phantom))
            continue

        nodes_expanded += 1
        slack = TOLERANCE * max(1.0, abs(node.f_value))
        for task in successors(config, node.cursor):
            child = child_node(node, task, kind, table, h)
            if child.f_value < node.f_value - slack:
                inconsistent += 1
            heapq.heappush(frontier, (child.priority(next(counter)), child))

    raise SearchError("No feasible schedule")


@dataclass(frozen=True)
class BruteForceResult:
    schedule: tuple
    cost: object
    evaluated: int


def brute_force_schedule(config, state, h, kind, limit=None, last_task=None) -> BruteForceResult:
    """Exhaustive enumeration under the same pruning rules; the first minimum in task order wins."""
    if h < 1:
        raise SearchError(f"Horizon must be at least 1, got {h}")
    limit = limit or settings.SCAR["BRUTE_FORCE_LIMIT"]
    if (config.n + 1) ** h > limit:
        raise SearchError(f"(n+1)^h = {(config.n + 1) ** h} exceeds the enumeration limit {limit}")
    kind = ObjectiveKind(kind)

    best = None
    evaluated = 0
    stack = [root_node(config, state, kind, last_task).cursor]
    while stack:
        cursor = stack.pop()
        if cursor.depth == h:
            evaluated += 1
            cost = cost_of(kind, cursor.prediction(), config)
            if best is None or cost.value < best[1].value:
                best = (cursor.schedule, cost)
            continue
        # reversed so the stack pops in task order
        for task in reversed(successors(config, cursor)):
            stack.append(cursor.advance(task))

    return BruteForceResult(best[0], best[1], evaluated)
