import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))

from models.graph import FULLY_STUBBORN, Graph, StubbornnessProfile  # noqa: E402
from utils.graph_generator import erdos_renyi  # noqa: E402
from utils.graph_metrics import is_connected  # noqa: E402


@pytest.fixture
def nine_agent_graph() -> Graph:
    """Tree on 9 agents: agent 1 partially stubborn, agent 2 fully stubborn."""
    edges = [(1, 3), (3, 4), (1, 5), (2, 6), (2, 7), (6, 8), (8, 9), (4, 9)]
    return Graph.from_edges(9, edges)


@pytest.fixture
def nine_agent_profile() -> StubbornnessProfile:
    return StubbornnessProfile.from_mapping(9, {1: 1.0, 2: FULLY_STUBBORN})


@pytest.fixture
def mixed_path():
    """Path 1-2-3 with K_1 = 2 and agent 3 fully stubborn."""
    g = Graph.from_edges(3, [(1, 2), (2, 3)])
    profile = StubbornnessProfile.from_mapping(3, {1: 2.0, 3: FULLY_STUBBORN})
    return g, profile


def connected_erdos_renyi(n: int, p: float, seed: int) -> Graph:
    """First connected G(n, p) at or after `seed`."""
    for offset in range(100):
        g = erdos_renyi(n, p=p, seed=seed + 1000 * offset)
        if is_connected(g):
            return g
    raise RuntimeError("no connected sample")


def random_instance(seed: int, n_low: int = 8, n_high: int = 40, max_stubborn: int = 5):
    """Connected random graph with 1..max_stubborn stubborn agents, mixed partial and full."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(n_low, n_high + 1))
    g = connected_erdos_renyi(n, p=min(1.0, 3.0 * np.log(n) / n), seed=seed)
    count = int(rng.integers(1, max_stubborn + 1))
    agents = rng.choice(np.arange(1, n + 1), size=count, replace=False)
    levels = {}
    for agent in agents:
        levels[int(agent)] = FULLY_STUBBORN if rng.random() < 0.4 else float(rng.uniform(0.2, 5.0))
    profile = StubbornnessProfile.from_mapping(n, levels)
    x0 = rng.random(n)
    return g, profile, x0
