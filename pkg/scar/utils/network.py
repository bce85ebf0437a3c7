# utils/network.py
import logging

import networkx as nx

from ..models import RoadNetwork
from .exceptions import NetworkError, ScenarioError

logger = logging.getLogger(__name__)


def build_network(nodes, edges, required=()):
    """
    Builds the road graph and precomputes all-pairs shortest-path distances.

    `nodes` maps node id -> (x, y) in metres, `edges` is a sequence of
    (node_a, node_b, length_m). Every node in `required` (agent locations and
    the depot) must be reachable from every other.
    """
    graph = nx.Graph()
    for node, coords in nodes.items():
        graph.add_node(str(node), pos=tuple(float(c) for c in coords))

    for index, (a, b, length) in enumerate(edges):
        a, b, length = str(a), str(b), float(length)
        if a not in graph or b not in graph:
            raise ScenarioError(
                "Edge references an unknown node",
                {f"network.edges[{index}]": [f"{a!r}-{b!r} is not a declared node pair."]},
            )
        if length <= 0:
            raise ScenarioError(
                "Edge length must be positive",
                {f"network.edges[{index}]": [f"Length {length} is not positive."]},
            )
        # parallel roads: keep the shortest
        if graph.has_edge(a, b):
            length = min(length, graph[a][b]["length"])
        graph.add_edge(a, b, length=length)

    missing = [node for node in required if node not in graph]
    if missing:
        raise ScenarioError(
            "Agent or depot location is not a network node",
            {"network.nodes": [f"Missing node(s): {', '.join(missing)}."]},
        )

    required = list(required)
    if required:
        component = nx.node_connected_component(graph, required[0])
        unreachable = [node for node in required if node not in component]
        if unreachable:
            raise ScenarioError(
                "Road network is disconnected",
                {"network.edges": [f"Unreachable from {required[0]}: {', '.join(unreachable)}."]},
            )

    distances = {
        source: dict(lengths)
        for source, lengths in nx.all_pairs_dijkstra_path_length(graph, weight="length")
    }
    logger.debug("Road network: %d nodes, %d edges", graph.number_of_nodes(), graph.number_of_edges())

    return RoadNetwork(
        nodes={node: data["pos"] for node, data in graph.nodes(data=True)},
        edges=tuple((a, b, data["length"]) for a, b, data in graph.edges(data=True)),
        distances=distances,
    )


def distance(network: RoadNetwork, origin, destination) -> float:
    if origin not in network.distances:
        raise NetworkError(f"Unknown node: {origin!r}")
    if destination not in network.nodes:
        raise NetworkError(f"Unknown node: {destination!r}")
    try:
        return network.distances[origin][destination]
    except KeyError:
        raise NetworkError(f"No road between {origin!r} and {destination!r}")


def travel_time(network: RoadNetwork, origin, destination, speed: float) -> float:
    """Shortest-path distance divided by speed (seconds)."""
    if speed <= 0:
        raise NetworkError(f"Speed must be positive, got {speed}")
    return distance(network, origin, destination) / speed
