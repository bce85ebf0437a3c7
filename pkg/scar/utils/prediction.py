# utils/prediction.py
"""
Schedule rollouts: predicted per-agent empty time E[T_i] and total schedule
time E[T_max] for a schedule executed from a fleet state.

Three modes share the same task semantics:
  - deterministic: every parameter at its mean;
  - stochastic: first-order Gaussian moment propagation (means as in the
    deterministic mode, variances carried alongside);
  - Monte-Carlo: vectorized sampled rollouts, used as the reference for the
    stochastic estimator.

Task semantics: travel, set-up, transfer, pack-up. Users keep consuming during
all four phases. A transfer stops when the user is full or the replenisher is
exhausted. An empty user stops being counted as empty when its transfer
begins.
"""
import math
from dataclasses import dataclass, replace

import numpy as np
from django.conf import settings
from scipy.special import ndtr

from ..models import (
    FleetState, Prediction, TaskDuration, TaskRecord, TimeMoment,
)
from .exceptions import PredictionError
from .network import distance

INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


# ============================================================================
# GAUSSIAN HELPERS
# ============================================================================

def gaussian_positive_part(mean: float, std_dev: float) -> float:
    """E[max(0, X)] for X ~ N(mean, std_dev^2)."""
    if std_dev < 0:
        raise ValueError(f"std_dev must be non-negative, got {std_dev}")
    if std_dev == 0:
        return max(0.0, mean)
    z = mean / std_dev
    return float(mean * ndtr(z) + std_dev * INV_SQRT_2PI * math.exp(-0.5 * z * z))


def gaussian_positive_part_variance(mean: float, std_dev: float) -> float:
    """Var[max(0, X)] for X ~ N(mean, std_dev^2)."""
    if std_dev <= 0:
        return 0.0
    z = mean / std_dev
    cdf = float(ndtr(z))
    pdf = INV_SQRT_2PI * math.exp(-0.5 * z * z)
    first = mean * cdf + std_dev * pdf
    second = (mean * mean + std_dev * std_dev) * cdf + mean * std_dev * pdf
    return max(second - first * first, 0.0)


# ============================================================================
# MOMENT-PROPAGATING CURSOR
# ============================================================================

@dataclass(frozen=True)
class _UserTrack:
    """
    A user's level is known (mean `level`, variance `level_var`) at the
    reference time `ref_time`; `ref_var` is the clock variance at that time.
    `drain_var` accumulates window^2 * var(usage) over the task windows since
    the reference (usage is redrawn per task window). Closed empty segments
    are summed in `empty_mean`/`empty_var`.
    """
    ref_time: float
    ref_var: float
    level: float
    level_var: float = 0.0
    drain_var: float = 0.0
    empty_mean: float = 0.0
    empty_var: float = 0.0


@dataclass(frozen=True)
class _Step:
    duration: TaskDuration
    record: TaskRecord
    target: _UserTrack
    replenisher_level: float


class RolloutCursor:
    """
    Immutable rollout of a schedule prefix; `advance` returns the cursor of the
    prefix extended by one task. The search tree stores one cursor per node.
    """

    __slots__ = (
        "config", "stochastic", "origin", "clock", "clock_var", "replenisher_level",
        "location", "users", "records", "last_task",
    )

    def __init__(self, config, stochastic, origin, clock, clock_var, replenisher_level,
                 location, users, records=(), last_task=None):
        self.config = config
        self.stochastic = stochastic
        self.origin = origin
        self.clock = clock
        self.clock_var = clock_var
        self.replenisher_level = replenisher_level
        self.location = location
        self.users = users
        self.records = records
        self.last_task = last_task

    @classmethod
    def start(cls, config, state: FleetState, stochastic: bool = False, last_task=None) -> "RolloutCursor":
        """`last_task` is the task just executed before `state`, if any."""
        if len(state.user_levels) != config.n:
            raise PredictionError(
                f"State has {len(state.user_levels)} user levels, scenario has {config.n} users"
            )
        users = tuple(
            _UserTrack(ref_time=state.clock, ref_var=0.0, level=float(level))
            for level in state.user_levels
        )
        return cls(
            config, stochastic, state.clock, state.clock, 0.0,
            float(state.replenisher_level), state.replenisher_location, users,
            last_task=last_task,
        )

    @property
    def depth(self) -> int:
        return len(self.records)

    @property
    def elapsed(self) -> float:
        return self.clock - self.origin

    @property
    def schedule(self) -> tuple:
        return tuple(record.task for record in self.records)

    def _var(self, param) -> float:
        return param.variance if self.stochastic else 0.0

    def _segment(self, track: _UserTrack, user, until: float, until_var: float, extra_drain_var: float = 0.0):
        """
        Empty time of the open segment of `track` up to `until`: the user runs
        dry at ref_time + level / rate, so the empty part is the positive part
        of (until - ref_time - level / rate).
        """
        rate = user.usage_rate.mean
        margin = (until - track.ref_time) - track.level / rate
        if not self.stochastic:
            return TimeMoment(max(0.0, margin), 0.0)
        level_spread = track.level_var + track.drain_var + extra_drain_var
        margin_var = max(until_var - track.ref_var, 0.0) + level_spread / (rate * rate)
        spread = math.sqrt(margin_var)
        return TimeMoment(
            gaussian_positive_part(margin, spread),
            gaussian_positive_part_variance(margin, spread),
        )

    def _step(self, task) -> _Step:
        config = self.config
        rep = config.replenisher
        if task.user is not None and not 0 <= task.user < config.n:
            raise PredictionError(f"Task {task} names an unknown user (n={config.n})")

        destination = config.location_of(task)
        dist = distance(config.network, self.location, destination)
        speed = rep.speed.mean
        travel = TimeMoment(dist / speed, dist * dist * self._var(rep.speed) / speed ** 4)

        site = config.depot if task.is_depot else rep
        setup = TimeMoment(site.setup_time.mean, self._var(site.setup_time))
        packup = TimeMoment(site.packup_time.mean, self._var(site.packup_time))

        start = TimeMoment(self.clock, self.clock_var)
        transfer_start = start + travel + setup
        stock = self.replenisher_level
        target = None

        if task.is_depot:
            rate = config.depot.replenish_rate
            deficit = max(rep.capacity - stock, 0.0)
            transfer = TimeMoment(
                deficit / rate.mean,
                deficit * deficit * self._var(rate) / rate.mean ** 4,
            )
            transferred = TimeMoment(deficit, 0.0)
            new_stock = rep.capacity
        else:
            user = config.users[task.user]
            track = self.users[task.user]
            usage = user.usage_rate
            rate = rep.replenish_rate
            net = rate.mean - usage.mean
            if net <= 0:
                raise PredictionError(
                    f"Replenish rate {rate.mean} cannot outpace usage {usage.mean} of user {task.user}"
                )

            pre_window = travel.mean + setup.mean
            pre_drain_var = pre_window * pre_window * self._var(usage)
            segment = self._segment(track, user, transfer_start.mean, transfer_start.variance, pre_drain_var)

            since = transfer_start.mean - track.ref_time
            level = track.level - usage.mean * since
            if level > 0:
                level_var = (
                    track.level_var + track.drain_var + pre_drain_var
                    + usage.mean ** 2 * max(transfer_start.variance - track.ref_var, 0.0)
                )
            else:
                level, level_var = 0.0, 0.0

            deficit = user.capacity - level
            fill_time = deficit / net
            exhaust_time = stock / rate.mean
            if fill_time <= exhaust_time:
                tau = fill_time
                tau_var = (
                    level_var / net ** 2
                    + deficit ** 2 * (self._var(rate) + self._var(usage)) / net ** 4
                )
                new_level, new_level_var = user.capacity, 0.0
            else:
                tau = exhaust_time
                tau_var = stock * stock * self._var(rate) / rate.mean ** 4
                new_level = min(level + net * tau, user.capacity)
                new_level_var = level_var

            transfer = TimeMoment(tau, tau_var)
            amount = rate.mean * tau
            transferred = TimeMoment(
                amount, rate.mean ** 2 * tau_var + tau * tau * self._var(rate)
            )
            new_stock = max(stock - amount, 0.0)

            transfer_end = transfer_start + transfer
            target = _UserTrack(
                ref_time=transfer_end.mean,
                ref_var=transfer_end.variance,
                level=new_level,
                level_var=new_level_var,
                # the rest of this task window is the pack-up
                drain_var=packup.mean ** 2 * self._var(usage),
                empty_mean=track.empty_mean + segment.mean,
                empty_var=track.empty_var + segment.variance,
            )

        duration = TaskDuration(
            travel=travel, setup=setup, transfer=transfer, packup=packup, transferred=transferred
        )
        end = transfer_start + transfer + packup
        record = TaskRecord(
            task=task, start=start, transfer_start=transfer_start, end=end,
            transferred=transferred.mean,
        )
        return _Step(duration, record, target, new_stock)

    def advance(self, task) -> "RolloutCursor":
        step = self._step(task)
        record = step.record
        window = record.end.mean - record.start.mean

        users = []
        for index, (track, user) in enumerate(zip(self.users, self.config.users)):
            if index == task.user:
                users.append(step.target)
            elif self.stochastic:
                users.append(replace(
                    track, drain_var=track.drain_var + window * window * user.usage_rate.variance
                ))
            else:
                users.append(track)

        return RolloutCursor(
            self.config, self.stochastic, self.origin, record.end.mean, record.end.variance,
            step.replenisher_level, self.config.location_of(task), tuple(users),
            self.records + (record,), task,
        )

    def empty_times(self) -> tuple:
        """Per-user E[T_i] from the origin to the current end of the prefix."""
        times = []
        for track, user in zip(self.users, self.config.users):
            open_segment = self._segment(track, user, self.clock, self.clock_var)
            times.append(TimeMoment(
                track.empty_mean + open_segment.mean, track.empty_var + open_segment.variance
            ))
        return tuple(times)

    def end_state(self) -> FleetState:
        levels = []
        for track, user in zip(self.users, self.config.users):
            level = track.level - user.usage_rate.mean * (self.clock - track.ref_time)
            levels.append(min(max(level, 0.0), user.capacity))
        return FleetState(
            clock=self.clock,
            user_levels=tuple(levels),
            replenisher_level=self.replenisher_level,
            replenisher_location=self.location,
        )

    def prediction(self) -> Prediction:
        return Prediction(
            per_task=self.records,
            empty_time=self.empty_times(),
            total_time=TimeMoment(self.elapsed, self.clock_var),
            end_state=self.end_state(),
        )


# ============================================================================
# ROLLOUTS
# ============================================================================

def validate_schedule(config, schedule):
    if not schedule:
        raise PredictionError("Schedule is empty")
    previous = None
    for position, task in enumerate(schedule):
        if task.user is not None and not 0 <= task.user < config.n:
            raise PredictionError(f"Task {task} at position {position} names an unknown user")
        if task == previous:
            raise PredictionError(f"Task {task} repeats consecutively at position {position}")
        previous = task


def task_duration(config, state: FleetState, task, stochastic: bool = False) -> TaskDuration:
    """Travel, set-up, transfer and pack-up of `task` started from `state`."""
    return RolloutCursor.start(config, state, stochastic)._step(task).duration


def _rollout(config, state, schedule, stochastic):
    validate_schedule(config, schedule)
    cursor = RolloutCursor.start(config, state, stochastic)
    for task in schedule:
        cursor = cursor.advance(task)
    return cursor.prediction()


def rollout_deterministic(config, state: FleetState, schedule) -> Prediction:
    return _rollout(config, state, schedule, stochastic=False)


def rollout_stochastic(config, state: FleetState, schedule) -> Prediction:
    """
    First-order propagation: duration variances by the delta method
    (travel d/v, transfer q/(r - rho)), independent components summed along
    the clock, each empty segment scored with the Gaussian positive part.
    """
    return _rollout(config, state, schedule, stochastic=True)


# ============================================================================
# MONTE-CARLO
# ============================================================================

def _drain(levels, empty_since, rates, t0, dt, skip=None):
    """
    Drains every column of `levels` at `rates` for `dt` seconds from `t0`,
    stamping the time a column runs dry. `skip` is a column left untouched.
    """
    dt = dt[:, None]
    hit = levels / rates
    dries = (levels > 0) & (hit <= dt)
    drained = np.where(dries, 0.0, np.maximum(levels - rates * dt, 0.0))
    since = np.where(dries, t0[:, None] + hit, empty_since)
    if skip is not None:
        drained[:, skip] = levels[:, skip]
        since[:, skip] = empty_since[:, skip]
    return drained, since


def _moment(values) -> TimeMoment:
    variance = float(np.var(values, ddof=1)) if len(values) > 1 else 0.0
    return TimeMoment(float(np.mean(values)), variance)


def rollout_monte_carlo(config, state: FleetState, schedule, samples=None, seed=0) -> Prediction:
    """
    Sample-mean prediction over `samples` sampled rollouts (default
    `SCAR["MC_SAMPLES"]`). Every Gaussian parameter is drawn once per task per
    run (usage rates once per task window per user); the same seed gives the
    same prediction.
    """
    if samples is None:
        samples = settings.SCAR["MC_SAMPLES"]
    if samples < 1:
        raise PredictionError(f"samples must be at least 1, got {samples}")
    validate_schedule(config, schedule)
    if len(state.user_levels) != config.n:
        raise PredictionError("State and scenario disagree on the number of users")

    rng = np.random.default_rng(seed)
    rep = config.replenisher
    n = config.n
    capacities = np.array([user.capacity for user in config.users], dtype=float)

    levels = np.tile(np.asarray(state.user_levels, dtype=float), (samples, 1))
    clock = np.full(samples, float(state.clock))
    empty_since = np.where(levels <= 0, clock[:, None], np.nan)
    empty_total = np.zeros((samples, n))
    stock = np.full(samples, float(state.replenisher_level))
    location = state.replenisher_location

    starts, transfer_starts, ends, amounts = [], [], [], []
    for task in schedule:
        destination = config.location_of(task)
        dist = distance(config.network, location, destination)
        travel = dist / rep.speed.sample(rng, samples)
        site = config.depot if task.is_depot else rep
        setup = site.setup_time.sample(rng, samples)
        packup = site.packup_time.sample(rng, samples)
        rate = site.replenish_rate.sample(rng, samples)
        usage = np.column_stack([user.usage_rate.sample(rng, samples) for user in config.users])

        start = clock
        pre = travel + setup
        levels, empty_since = _drain(levels, empty_since, usage, start, pre)
        transfer_start = start + pre

        if task.is_depot:
            transferred = np.maximum(rep.capacity - stock, 0.0)
            tau = transferred / rate
            levels, empty_since = _drain(levels, empty_since, usage, transfer_start, tau)
            stock = np.full(samples, rep.capacity)
        else:
            i = task.user
            open_ = ~np.isnan(empty_since[:, i])
            empty_total[:, i] += np.where(open_, transfer_start - np.nan_to_num(empty_since[:, i]), 0.0)
            empty_since[:, i] = np.nan

            net = rate - usage[:, i]
            deficit = capacities[i] - levels[:, i]
            with np.errstate(divide="ignore"):
                fill_time = np.where(net > 0, deficit / np.where(net > 0, net, 1.0), np.inf)
            exhaust_time = stock / rate
            fills = fill_time <= exhaust_time
            tau = np.where(fills, fill_time, exhaust_time)

            levels, empty_since = _drain(levels, empty_since, usage, transfer_start, tau, skip=i)
            levels[:, i] = np.where(
                fills, capacities[i], np.clip(levels[:, i] + net * tau, 0.0, capacities[i])
            )
            transferred = rate * tau
            stock = np.maximum(stock - transferred, 0.0)
            transfer_end = transfer_start + tau
            empty_since[:, i] = np.where(levels[:, i] <= 0, transfer_end, np.nan)

        end = transfer_start + tau + packup
        levels, empty_since = _drain(levels, empty_since, usage, transfer_start + tau, packup)

        starts.append(start)
        transfer_starts.append(transfer_start)
        ends.append(end)
        amounts.append(transferred)
        clock = end
        location = destination

    open_ = ~np.isnan(empty_since)
    empty_total += np.where(open_, clock[:, None] - np.nan_to_num(empty_since), 0.0)

    per_task = tuple(
        TaskRecord(
            task=task,
            start=_moment(s),
            transfer_start=_moment(ts),
            end=_moment(e),
            transferred=float(np.mean(a)),
        )
        for task, s, ts, e, a in zip(schedule, starts, transfer_starts, ends, amounts)
    )
    end_state = FleetState(
        clock=float(np.mean(clock)),
        user_levels=tuple(float(v) for v in levels.mean(axis=0)),
        replenisher_level=float(np.mean(stock)),
        replenisher_location=location,
    )
    return Prediction(
        per_task=per_task,
        empty_time=tuple(_moment(empty_total[:, i]) for i in range(n)),
        total_time=_moment(clock - state.clock),
        end_state=end_state,
    )
