"""
Small scenarios for the engine tests.

Users sit on a star network around the depot: user i is `distance` metres from
the depot, so user-to-user roads go through the depot.
"""
import numpy as np

from scar.models import FleetState
from scar.utils.scenario import parse_config

# (capacity, usage mean, usage std, distance to depot)
ONE_USER = ((1000, 0.5, 0.05, 300),)
THREE_USERS = ((1000, 0.5, 0.05, 300), (800, 0.4, 0.08, 450), (600, 0.3, 0.02, 600))


def _param(mean, std, noise):
    return {"mean": mean, "std_dev": std if noise else 0.0}


def scenario_doc(users=ONE_USER, noise=True, capacity=5000, rate=(10, 0.5), setup=(60, 20),
                 packup=(20, 5), speed=(15, 0.5), depot_setup=(30, 10), depot_packup=(10, 1),
                 depot_rate=(20, 1), weights=None, sim_duration=18000, threshold=0.05):
    nodes = {"depot": [0, 0]}
    edges = []
    user_docs = []
    for i, (cap, usage, usage_std, dist) in enumerate(users):
        location = f"u{i}" if dist > 0 else "depot"
        if dist > 0:
            nodes[location] = [dist, i]
            edges.append(["depot", location, dist])
        doc = {
            "capacity": cap,
            "usage_rate": _param(usage, usage_std, noise),
            "location": location,
        }
        if weights is not None:
            doc["weight"] = weights[i]
        user_docs.append(doc)

    return {
        "sim_duration_s": sim_duration,
        "users": user_docs,
        "replenisher": {
            "capacity": capacity,
            "replenish_rate": _param(*rate, noise),
            "setup_time": _param(*setup, noise),
            "packup_time": _param(*packup, noise),
            "speed": _param(*speed, noise),
            "depot_threshold_fraction": threshold,
        },
        "depot": {
            "location": "depot",
            "setup_time": _param(*depot_setup, noise),
            "packup_time": _param(*depot_packup, noise),
            "replenish_rate": _param(*depot_rate, noise),
        },
        "network": {"nodes": nodes, "edges": edges},
    }


def make_config(**kwargs):
    return parse_config(scenario_doc(**kwargs))


def make_state(config, levels, stock=None, location="depot", clock=0.0):
    return FleetState(
        clock=clock,
        user_levels=tuple(float(level) for level in levels),
        replenisher_level=float(config.replenisher.capacity if stock is None else stock),
        replenisher_location=location,
    )


def random_states(config, count, seed, stock_range=(0.7, 1.0)):
    """Seeded fleet states: user levels anywhere in their tank, replenisher in `stock_range`."""
    rng = np.random.default_rng(seed)
    locations = ["depot"] + [user.location for user in config.users]
    states = []
    for _ in range(count):
        levels = [rng.uniform(0.0, 1.0) * user.capacity for user in config.users]
        stock = rng.uniform(*stock_range) * config.replenisher.capacity
        location = locations[int(rng.integers(len(locations)))]
        states.append(make_state(config, levels, stock, location))
    return states


def random_schedule(config, length, rng, last_task=None):
    """Uniformly drawn tasks with no task directly following itself."""
    tasks = config.tasks
    schedule = []
    previous = last_task
    while len(schedule) < length:
        task = tasks[int(rng.integers(len(tasks)))]
        if task != previous:
            schedule.append(task)
            previous = task
    return tuple(schedule)
