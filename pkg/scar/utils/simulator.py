# utils/simulator.py
"""
Closed-loop execution of the replanning scheduler on a simpy clock.

The replenisher process observes the actual fleet state, plans with A*,
executes the first task of the plan with freshly sampled durations and rates,
then replans. Every user agent is its own process draining its tank at the
usage rate sampled for the current task window; it wakes when it runs dry and
is interrupted whenever its rate changes or a transfer starts or stops.

A user counts as empty from the moment its level reaches zero until its next
transfer starts. Usage pauses while the tank is empty.
"""
import logging

import numpy as np
import pandas as pd
import simpy

from ..models import (
    EventKind, FleetState, ObjectiveKind, RunMetrics, SimEvent, SimRecord,
)
from .exceptions import SimulationError
from .network import distance
from .search import astar_schedule, build_max_time_table, depot_forced

logger = logging.getLogger(__name__)

# relative tolerance of the inline resource checks
CONSERVATION_TOLERANCE = 1e-6


def initial_state(config, rng) -> FleetState:
    """Every tank (the replenisher's too) uniformly between half and full; replenisher at the depot."""
    levels = tuple(float(rng.uniform(0.5, 1.0) * user.capacity) for user in config.users)
    stock = float(rng.uniform(0.5, 1.0) * config.replenisher.capacity)
    return FleetState(
        clock=0.0,
        user_levels=levels,
        replenisher_level=stock,
        replenisher_location=config.depot.location,
    )


# ============================================================================
# AGENTS
# ============================================================================

class UserAgent:
    """
    Tracks one user's tank between events. `sync(now)` is the only place the
    level, the usage total and the received total change.
    """

    def __init__(self, sim, index, spec, level):
        self.sim = sim
        self.env = sim.env
        self.index = index
        self.spec = spec
        self.level = level
        self.initial_level = level
        self.rate = spec.usage_rate.mean
        self.fill_rate = None
        self.updated = self.env.now
        self.used = 0.0
        self.received = 0.0
        self.empty_since = self.env.now if level <= 0 else None
        self.intervals = []
        self.action = self.env.process(self.run())

    def run(self):
        while True:
            try:
                if self.fill_rate is None and self.level > 0:
                    yield self.env.timeout(self.level / self.rate)
                    self.sync(self.env.now)
                else:
                    # empty or filling: nothing happens until interrupted
                    yield self.env.event()
            except simpy.Interrupt:
                pass

    def sync(self, now):
        dt = now - self.updated
        if dt <= 0:
            return
        if self.fill_rate is not None:
            received = self.fill_rate * dt
            level = self.level + received - self.rate * dt
            if level < 0:
                # supply slower than usage: the user burns what arrives
                self.used += self.level + received
                level = 0.0
            else:
                self.used += self.rate * dt
            if level > self.spec.capacity:
                received -= level - self.spec.capacity
                level = self.spec.capacity
            self.received += received
            self.level = level
        elif self.level > 0:
            drain = self.rate * dt
            if drain >= self.level - 1e-9 * self.spec.capacity:
                self.empty_since = self.updated + self.level / self.rate
                self.used += self.level
                self.level = 0.0
                self.sim.log(EventKind.AGENT_EMPTY, agent=self.index, level=0.0, time=self.empty_since)
            else:
                self.level -= drain
                self.used += drain
        self.updated = now

    def _wake(self):
        if self.action.is_alive:
            self.action.interrupt()

    def set_rate(self, rate):
        self.sync(self.env.now)
        self.rate = rate
        self._wake()

    def start_fill(self, rate):
        self.sync(self.env.now)
        if self.empty_since is not None:
            self.close_empty(self.env.now)
            self.sim.log(EventKind.AGENT_REPLENISHED, agent=self.index, level=self.level)
        self.fill_rate = rate
        self._wake()

    def stop_fill(self):
        self.sync(self.env.now)
        self.fill_rate = None
        if self.level <= 0 and self.empty_since is None:
            # a transfer slower than usage left the tank dry
            self.empty_since = self.env.now
            self.sim.log(EventKind.AGENT_EMPTY, agent=self.index, level=0.0)
        self._wake()

    def close_empty(self, until):
        if self.empty_since is not None and until > self.empty_since:
            self.intervals.append((self.empty_since, until))
        self.empty_since = None


class Simulation:
    """One seeded run: a replenisher process plus one process per user."""

    def __init__(self, config, kind, h, seed, state=None):
        if not isinstance(seed, (int, np.integer)) or seed < 0:
            raise SimulationError(f"Seed must be a non-negative integer, got {seed!r}")
        if h < 1:
            raise SimulationError(f"Horizon must be at least 1, got {h}")
        if config.sim_duration <= 0:
            raise SimulationError("Simulation duration must be positive")

        self.config = config
        self.kind = ObjectiveKind(kind)
        self.h = h
        self.seed = int(seed)
        init_seq, dynamics_seq = np.random.SeedSequence(self.seed).spawn(2)
        self.rng = np.random.default_rng(dynamics_seq)
        self.initial_state = state or initial_state(config, np.random.default_rng(init_seq))

        self.env = simpy.Environment()
        self.events = []
        self.table = build_max_time_table(config, h)
        self.stock = float(self.initial_state.replenisher_level)
        self.location = self.initial_state.replenisher_location
        self.last_task = None
        self.transfer = None
        self.refill = None
        self.plans = 0
        self.nodes_expanded = 0
        self.users = [
            UserAgent(self, i, spec, float(level))
            for i, (spec, level) in enumerate(zip(config.users, self.initial_state.user_levels))
        ]
        self.env.process(self.replenisher())

    def log(self, kind, task=None, agent=None, level=None, time=None):
        now = self.env.now if time is None else time
        if level is None:
            level = self.stock
        self.events.append(SimEvent(time=now, kind=kind, task=task, agent=agent, level=level))

    def sync(self):
        for user in self.users:
            user.sync(self.env.now)

    def observe(self) -> FleetState:
        self.sync()
        return FleetState(
            clock=self.env.now,
            user_levels=tuple(user.level for user in self.users),
            replenisher_level=self.stock,
            replenisher_location=self.location,
        )

    def replenisher(self):
        config = self.config
        rep = config.replenisher
        while True:
            state = self.observe()
            plan = astar_schedule(config, state, self.h, self.kind, self.table, self.last_task)
            self.plans += 1
            self.nodes_expanded += plan.nodes_expanded
            self.log(EventKind.REPLAN)
            task = plan.schedule[0]
            logger.debug(
                "t=%.1f plan %s (%d nodes)", self.env.now,
                ",".join(str(t) for t in plan.schedule), plan.nodes_expanded,
            )

            if not task.is_depot and depot_forced(config, self.stock):
                raise SimulationError(
                    f"Plan sends the replenisher to user {task.user} at level {self.stock:.1f}"
                )
            if task == self.last_task and not depot_forced(config, self.stock):
                raise SimulationError(f"Task {task} planned twice in a row")

            # one usage draw per user per task window
            for user in self.users:
                user.set_rate(user.spec.usage_rate.sample(self.rng))

            site = config.depot if task.is_depot else rep
            destination = config.location_of(task)
            travel = distance(config.network, self.location, destination) / rep.speed.sample(self.rng)
            setup = site.setup_time.sample(self.rng)
            packup = site.packup_time.sample(self.rng)
            rate = site.replenish_rate.sample(self.rng)

            self.log(EventKind.TRAVEL_START, task=task)
            yield self.env.timeout(travel)
            self.location = destination
            yield self.env.timeout(setup)

            self.sync()
            if task.is_depot:
                self.log(EventKind.TRANSFER_START, task=task)
                self.refill = (self.env.now, rate)
                yield self.env.timeout(max(rep.capacity - self.stock, 0.0) / rate)
                self.refill = None
                self.stock = rep.capacity
                self.log(EventKind.TRANSFER_END, task=task)
            else:
                user = self.users[task.user]
                self.log(EventKind.TRANSFER_START, task=task, agent=task.user, level=user.level)
                user.start_fill(rate)
                net = rate - user.rate
                fill_time = (user.spec.capacity - user.level) / net if net > 0 else np.inf
                tau = min(fill_time, self.stock / rate)
                self.transfer = (user, user.received)
                yield self.env.timeout(tau)
                self.finish_transfer()
                self.log(EventKind.TRANSFER_END, task=task, agent=task.user, level=user.level)

            yield self.env.timeout(packup)
            self.last_task = task
            self.log(EventKind.TASK_END, task=task)
            self.sync()
            self.check()

    def finish_transfer(self):
        user, received_before = self.transfer
        user.stop_fill()
        self.stock = max(self.stock - (user.received - received_before), 0.0)
        self.transfer = None

    def check(self):
        for user in self.users:
            scale = max(user.spec.capacity, 1.0)
            if not -1e-9 * scale <= user.level <= user.spec.capacity * (1 + 1e-9):
                raise SimulationError(f"User {user.index} level {user.level} out of bounds")
            balance = user.initial_level + user.received - user.used
            if abs(balance - user.level) > CONSERVATION_TOLERANCE * scale:
                raise SimulationError(
                    f"User {user.index} resource balance {balance} does not match level {user.level}"
                )
        if self.stock < 0:
            raise SimulationError(f"Replenisher level {self.stock} is negative")

    def run(self) -> SimRecord:
        end = self.config.sim_duration
        logger.info(
            "seed %d: initial levels %s, replenisher %.1f",
            self.seed, [round(level, 1) for level in self.initial_state.user_levels], self.stock,
        )
        self.env.run(until=end)

        # the activity in progress at the cutoff is truncated there
        self.sync()
        if self.transfer is not None:
            self.finish_transfer()
        if self.refill is not None:
            started, rate = self.refill
            self.stock = min(self.stock + rate * (end - started), self.config.replenisher.capacity)
        for user in self.users:
            user.close_empty(end)
        self.check()

        events = sorted(self.events, key=lambda event: event.time)
        final_state = FleetState(
            clock=end,
            user_levels=tuple(user.level for user in self.users),
            replenisher_level=self.stock,
            replenisher_location=self.location,
        )
        return SimRecord(
            events=tuple(events),
            empty_intervals=tuple(tuple(user.intervals) for user in self.users),
            final_state=final_state,
            seed=self.seed,
            initial_state=self.initial_state,
            plans=self.plans,
            nodes_expanded=self.nodes_expanded,
        )


def run_simulation(config, kind, h, seed, initial_state=None) -> SimRecord:
    """
    Runs the replanning loop for `config.sim_duration` seconds. The same seed
    gives the same record; initial levels come from a stream of the seed that
    does not depend on `kind` or `h`.
    """
    return Simulation(config, kind, h, seed, initial_state).run()


# ============================================================================
# METRICS & EXPORT
# ============================================================================

def compute_metrics(record: SimRecord, n, sim_duration) -> RunMetrics:
    if sim_duration <= 0:
        raise SimulationError("Simulation duration must be positive")
    per_agent = []
    for i in range(n):
        intervals = record.empty_intervals[i] if i < len(record.empty_intervals) else ()
        empty = sum(end - start for start, end in intervals)
        per_agent.append(min(max(100.0 * (1.0 - empty / sim_duration), 0.0), 100.0))
    full = not any(record.empty_intervals)
    return RunMetrics(
        percent_uptime=float(np.mean(per_agent)) if per_agent else 100.0,
        full_uptime=full,
        per_agent_uptime=tuple(per_agent),
    )


def level_trace(record: SimRecord, config, step_s=60.0) -> pd.DataFrame:
    """
    User levels sampled every `step_s` seconds, interpolated linearly between
    the levels the event log records for each user.
    """
    end = record.final_state.clock
    times = np.arange(0.0, end + step_s / 2, step_s)
    trace = {"time": times}
    for i in range(config.n):
        points = [(0.0, record.initial_state.user_levels[i])] if record.initial_state else []
        points += [(event.time, event.level) for event in record.events if event.agent == i]
        points.append((end, record.final_state.user_levels[i]))
        xs, ys = zip(*points)
        trace[f"user_{i}"] = np.interp(times, xs, ys)
    return pd.DataFrame(trace)


def format_event_log(record: SimRecord) -> list:
    lines = ["time,event,task,agent,level"]
    for event in record.events:
        task = "" if event.task is None else str(event.task)
        agent = "" if event.agent is None else str(event.agent)
        level = "" if event.level is None else f"{event.level:.3f}"
        lines.append(f"{event.time:.3f},{event.kind.value},{task},{agent},{level}")
    return lines
