"""
Domain types of the SCAR (Stochastic Collection and Replenishment) scenario.

None of these are ORM models: the project keeps no database. They are frozen
value objects shared read-only by prediction, search and simulation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np
from django.db import models

# Sampled physical quantities are clamped below at this fraction of their mean
TRUNCATION_FRACTION = 1e-6


# ============================================================================
# PARAMETERS
# ============================================================================

@dataclass(frozen=True)
class GaussianParam:
    mean: float
    std_dev: float = 0.0

    @property
    def variance(self) -> float:
        return self.std_dev ** 2

    def sample(self, rng: np.random.Generator, size=None):
        """
        Truncated Gaussian draw. Values are clamped below at 1e-6 of the mean
        so rates, speeds and durations never go negative or to zero.
        """
        draw = rng.normal(self.mean, self.std_dev, size)
        floor = TRUNCATION_FRACTION * self.mean
        if size is None:
            return float(max(draw, floor))
        return np.maximum(draw, floor)


@dataclass(frozen=True)
class UserAgentSpec:
    id: int
    capacity: float
    usage_rate: GaussianParam
    weight: float
    location: str


@dataclass(frozen=True)
class ReplenisherSpec:
    capacity: float
    replenish_rate: GaussianParam
    setup_time: GaussianParam
    packup_time: GaussianParam
    speed: GaussianParam
    depot_threshold_fraction: float = 0.05

    @property
    def threshold(self) -> float:
        # Below this level the only legal next task is the depot visit
        return self.depot_threshold_fraction * self.capacity


@dataclass(frozen=True)
class DepotSpec:
    location: str
    setup_time: GaussianParam
    packup_time: GaussianParam
    replenish_rate: GaussianParam


@dataclass(frozen=True)
class RoadNetwork:
    """
    Undirected road graph. `distances` holds all-pairs shortest-path lengths
    (metres) and is filled in by `scar.utils.network.build_network`.
    """
    nodes: Mapping[str, tuple]
    edges: tuple
    distances: Mapping[str, Mapping[str, float]] = field(
        default_factory=dict, compare=False, repr=False
    )


# ============================================================================
# TASKS & SCHEDULES
# ============================================================================

@dataclass(frozen=True)
class Task:
    """Replenish user `user`, or visit the depot when `user` is None."""
    user: Optional[int] = None

    @property
    def is_depot(self) -> bool:
        return self.user is None

    @property
    def sort_key(self) -> tuple:
        # users by index first, the depot task last
        return (1, 0) if self.user is None else (0, self.user)

    @classmethod
    def parse(cls, token) -> "Task":
        token = str(token).strip().lower()
        if token == "r":
            return DEPOT
        if not token.isdigit():
            raise ValueError(f"Invalid task token: {token!r}")
        return cls(int(token))

    def __str__(self):
        return "r" if self.user is None else str(self.user)


DEPOT = Task()


def schedule_label(schedule) -> str:
    return "(" + ",".join(str(task) for task in schedule) + ")"


def parse_schedule(text) -> tuple:
    if isinstance(text, str):
        text = text.strip().strip("()").split(",")
    return tuple(Task.parse(token) for token in text if str(token).strip())


# ============================================================================
# SCENARIO
# ============================================================================

@dataclass(frozen=True)
class ScenarioConfig:
    users: tuple
    replenisher: ReplenisherSpec
    depot: DepotSpec
    network: RoadNetwork
    sim_duration: float = 18000.0

    @property
    def n(self) -> int:
        return len(self.users)

    @property
    def weights(self) -> tuple:
        return tuple(user.weight for user in self.users)

    @property
    def tasks(self) -> tuple:
        """Every task in lexicographic order."""
        return tuple(Task(i) for i in range(self.n)) + (DEPOT,)

    def location_of(self, task: Task) -> str:
        if task.is_depot:
            return self.depot.location
        return self.users[task.user].location


@dataclass(frozen=True)
class FleetState:
    clock: float
    user_levels: tuple
    replenisher_level: float
    replenisher_location: str


# ============================================================================
# PREDICTIONS
# ============================================================================

@dataclass(frozen=True)
class TimeMoment:
    """Mean/variance pair. Deterministic rollouts carry zero variance."""
    mean: float
    variance: float = 0.0

    @property
    def std_dev(self) -> float:
        return math.sqrt(max(self.variance, 0.0))

    def __add__(self, other: "TimeMoment") -> "TimeMoment":
        # independent components
        return TimeMoment(self.mean + other.mean, self.variance + other.variance)


@dataclass(frozen=True)
class TaskDuration:
    travel: TimeMoment
    setup: TimeMoment
    transfer: TimeMoment
    packup: TimeMoment
    transferred: TimeMoment

    @property
    def total(self) -> TimeMoment:
        return self.travel + self.setup + self.transfer + self.packup


@dataclass(frozen=True)
class TaskRecord:
    task: Task
    start: TimeMoment
    transfer_start: TimeMoment
    end: TimeMoment
    transferred: float


@dataclass(frozen=True)
class Prediction:
    per_task: tuple
    empty_time: tuple
    total_time: TimeMoment
    end_state: FleetState


# ============================================================================
# OBJECTIVES
# ============================================================================

class ObjectiveKind(models.TextChoices):
    DT = "dt", "Deterministic total weighted tardiness"
    ST = "st", "Stochastic total weighted tardiness"
    DR = "dr", "Deterministic ratio"
    SR = "sr", "Stochastic ratio"

    @property
    def is_stochastic(self) -> bool:
        return self in (ObjectiveKind.ST, ObjectiveKind.SR)

    @property
    def is_ratio(self) -> bool:
        return self in (ObjectiveKind.DR, ObjectiveKind.SR)


@dataclass(frozen=True)
class Cost:
    value: float
    kind: ObjectiveKind


# ============================================================================
# SIMULATION
# ============================================================================

class EventKind(models.TextChoices):
    TRAVEL_START = "travel-start", "Travel start"
    TRANSFER_START = "transfer-start", "Transfer start"
    TRANSFER_END = "transfer-end", "Transfer end"
    TASK_END = "task-end", "Task end"
    AGENT_EMPTY = "agent-empty", "Agent empty"
    AGENT_REPLENISHED = "agent-replenished", "Agent replenished"
    REPLAN = "replan", "Replan"


@dataclass(frozen=True)
class SimEvent:
    time: float
    kind: EventKind
    task: Optional[Task] = None
    agent: Optional[int] = None
    # user level for user events, replenisher level otherwise
    level: Optional[float] = None


@dataclass(frozen=True)
class SimRecord:
    events: tuple
    empty_intervals: tuple
    final_state: FleetState
    seed: int
    initial_state: Optional[FleetState] = None
    plans: int = 0
    nodes_expanded: int = 0


@dataclass(frozen=True)
class RunMetrics:
    percent_uptime: float
    full_uptime: bool
    per_agent_uptime: tuple


# ============================================================================
# EXPERIMENTS
# ============================================================================

@dataclass(frozen=True)
class ExperimentPlan:
    scenario: str
    kinds: tuple
    horizons: tuple
    repeats: int = 40
    base_seed: int = 0
    sim_duration: float = 18000.0
    users: Optional[int] = None
    workers: int = 1


@dataclass(frozen=True)
class RunRow:
    scenario: str
    users: int
    objective: str
    horizon: int
    seed: int
    percent_uptime: float
    full_uptime: bool
    per_agent_uptime: tuple
    nodes_expanded: int
    wall_time_s: float = 0.0


@dataclass(frozen=True)
class ExperimentResults:
    rows: tuple
    aggregates: tuple
    scenario: str = ""
    users: int = 0
    # run r of every objective kind starts from the same fleet state
    pairing: str = "paired-seeds"


@dataclass(frozen=True)
class AggregateResult:
    objective: str
    horizon: int
    runs: int
    median: float
    q1: float
    q3: float
    minimum: float
    maximum: float
    full_uptime_percent: float
    mean_nodes_expanded: float
    wall_time_s: float = 0.0
