import logging
from typing import Union

import networkx as nx
import numpy as np

from models.graph import AugmentedGraph, Graph, StubbornnessProfile
from utils.errors import DomainError

logger = logging.getLogger(__name__)


def is_connected(g: Graph) -> bool:
    return nx.is_connected(g.to_networkx())


def is_bipartite(g: Graph) -> bool:
    return nx.is_bipartite(g.to_networkx())


def diameter(g: Graph) -> int:
    """Largest shortest-path edge count over all pairs."""
    graph = g.to_networkx()
    if not nx.is_connected(graph):
        raise DomainError("diameter is undefined on a disconnected graph")
    return int(nx.diameter(graph))


def require_connected(g: Graph, what: str = "this operation") -> None:
    if not is_connected(g):
        raise DomainError(f"{what} needs a connected graph")


def build_augmented(g: Graph, profile: StubbornnessProfile) -> AugmentedGraph:
    require_connected(g, "build_augmented")
    augmented = AugmentedGraph(g, profile)
    logger.debug("augmented graph: %s", augmented.describe())
    return augmented


def stationary_distribution(graph: Union[Graph, AugmentedGraph]) -> np.ndarray:
    """Degree-proportional distribution.

    Plain graph: pi_i = w_i / sum_j w_j over 1..n.
    Augmented graph: weights w_i restricted to the free nodes (V minus fully stubborn),
    in `free_nodes` order.
    """
    if isinstance(graph, AugmentedGraph):
        require_connected(graph.base, "stationary_distribution")
        w = graph.free_weights()
    else:
        require_connected(graph, "stationary_distribution")
        w = graph.strengths()
    total = w.sum()
    if total <= 0:
        raise DomainError("stationary distribution needs at least one edge")
    return w / total


def augmented_stationary(augmented: AugmentedGraph) -> np.ndarray:
    """pi_x = w_x / Z over every node of the augmented graph, virtual nodes included."""
    require_connected(augmented.base, "augmented_stationary")
    return augmented.weighted_degrees / augmented.total_weight
