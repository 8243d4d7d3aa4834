import logging
import math
from typing import Dict, List, Optional, Tuple, Union

import networkx as nx
import numpy as np

from models.graph import Graph
from utils.errors import GenerationError, ParameterError

logger = logging.getLogger(__name__)

RANDOM_KINDS = ('erdos_renyi', 'small_world', 'random_regular')
PAIRING_RETRIES = 1000


def normalize_kind(kind: str) -> str:
    return kind.strip().lower().replace('-', '_')


def _require_n(n: int, minimum: int = 2) -> int:
    n = int(n)
    if n < minimum:
        raise ParameterError(f"n must be >= {minimum}, got {n}")
    return n


def _require_seed(kind: str, seed: Optional[int]) -> int:
    if seed is None:
        raise ParameterError(f"{kind} is randomized and needs a seed")
    return int(seed)


def complete(n: int) -> Graph:
    return Graph.from_networkx(nx.complete_graph(_require_n(n)))


def ring(n: int) -> Graph:
    return Graph.from_networkx(nx.cycle_graph(_require_n(n, 3)))


def line(n: int) -> Graph:
    return Graph.from_networkx(nx.path_graph(_require_n(n)))


def star(n: int) -> Graph:
    """Center is node 1, leaves 2..n."""
    return Graph.from_networkx(nx.star_graph(_require_n(n) - 1))


def grid(side: int) -> Graph:
    """side x side lattice, nodes numbered row-major."""
    side = _require_n(side)
    return Graph.from_networkx(nx.grid_2d_graph(side, side))


def node_coordinates(side: int, i: Union[int, np.ndarray]) -> Tuple:
    """(row, column) of node i in a row-major grid; i may be an array of nodes."""
    return divmod(i - 1, side)


def erdos_renyi(n: int, p: Optional[float] = None, lam: Optional[float] = None,
                seed: Optional[int] = None) -> Graph:
    """G(n, p); when p is omitted it is lam * log(n) / n."""
    n = _require_n(n)
    seed = _require_seed('erdos_renyi', seed)
    if p is None:
        if lam is None or lam <= 0:
            raise ParameterError("erdos_renyi needs p, or lam > 0")
        p = min(1.0, lam * math.log(n) / n)
    if not 0.0 < p <= 1.0:
        raise ParameterError(f"edge probability must be in (0, 1], got {p}")
    graph = Graph.from_networkx(nx.gnp_random_graph(n, p, seed=seed))
    if not nx.is_connected(graph.to_networkx()):
        logger.warning("erdos_renyi(n=%d, p=%.4g, seed=%d) is not connected", n, p, seed)
    return graph


def small_world_shortcuts(side: int, q: int, alpha: float, seed: Optional[int]) -> List[Tuple[int, int]]:
    """q shortcuts per node; destination j drawn with probability proportional to ||i-j||_1^(-alpha)."""
    side = _require_n(side)
    if q < 0:
        raise ParameterError(f"q must be >= 0, got {q}")
    if alpha < 0:
        raise ParameterError(f"alpha must be >= 0, got {alpha}")
    rng = np.random.default_rng(_require_seed('small_world', seed))
    n = side * side
    rows, cols = node_coordinates(side, np.arange(1, n + 1))
    shortcuts = []
    for i in range(n):
        dist = np.abs(rows - rows[i]) + np.abs(cols - cols[i])
        weights = np.zeros(n)
        others = dist > 0
        weights[others] = dist[others].astype(float) ** (-alpha)
        probs = weights / weights.sum()
        for j in rng.choice(n, size=q, p=probs):
            shortcuts.append((i + 1, int(j) + 1))
    return shortcuts


def small_world(side: int, q: int = 1, alpha: float = 2.0, seed: Optional[int] = None) -> Graph:
    base = grid(side)
    edges: Dict[Tuple[int, int], float] = {(i, j): w for i, j, w in base.edges}
    dropped = 0
    for i, j in small_world_shortcuts(side, q, alpha, seed):
        key = (min(i, j), max(i, j))
        if key in edges:
            dropped += 1
            continue
        edges[key] = 1.0
    if dropped:
        logger.debug("small_world dropped %d duplicate shortcuts", dropped)
    return Graph(side * side, tuple((i, j, w) for (i, j), w in edges.items()))


def random_regular(n: int, d: int, seed: Optional[int] = None) -> Graph:
    """Pairing model, rejecting self-loops and repeated pairs."""
    n = _require_n(n)
    d = int(d)
    if not 1 <= d < n:
        raise ParameterError(f"degree must satisfy 1 <= d < n, got d={d}, n={n}")
    if (n * d) % 2:
        raise ParameterError(f"n*d must be even, got n={n}, d={d}")
    rng = np.random.default_rng(_require_seed('random_regular', seed))
    points = np.repeat(np.arange(1, n + 1), d)
    for attempt in range(1, PAIRING_RETRIES + 1):
        pairs = rng.permutation(points).reshape(-1, 2)
        if np.any(pairs[:, 0] == pairs[:, 1]):
            continue
        keys = {(int(min(a, b)), int(max(a, b))) for a, b in pairs}
        if len(keys) < len(pairs):
            continue
        logger.debug("random_regular(n=%d, d=%d) paired after %d attempts", n, d, attempt)
        return Graph(n, tuple((a, b, 1.0) for a, b in sorted(keys)))
    raise GenerationError(f"random_regular(n={n}, d={d}) found no simple pairing in {PAIRING_RETRIES} attempts")


def generate(kind: str, params: Dict, seed: Optional[int] = None) -> Graph:
    """Build a named graph from a parameter dict (keys n, side, p, lam, q, alpha, d)."""
    kind = normalize_kind(kind)
    try:
        if kind == 'complete':
            return complete(params['n'])
        if kind == 'ring':
            return ring(params['n'])
        if kind == 'line':
            return line(params['n'])
        if kind == 'star':
            return star(params['n'])
        if kind == 'grid':
            return grid(params['side'])
        if kind == 'erdos_renyi':
            return erdos_renyi(params['n'], p=params.get('p'), lam=params.get('lam'), seed=seed)
        if kind == 'small_world':
            return small_world(params['side'], q=params.get('q', 1), alpha=params.get('alpha', 2.0), seed=seed)
        if kind == 'random_regular':
            return random_regular(params['n'], params['d'], seed=seed)
    except KeyError as e:
        raise ParameterError(f"{kind} needs parameter {e.args[0]!r}") from None
    raise ParameterError(f"unknown graph kind {kind!r}")
