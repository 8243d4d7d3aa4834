import math
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

import networkx as nx
import numpy as np
from scipy.sparse import csr_matrix, diags

from utils.errors import ParameterError

FULLY_STUBBORN = math.inf

Edge = Tuple[int, int, float]


@dataclass(frozen=True)
class Graph:
    """Undirected weighted social graph on agents 1..n.

    Edges are stored once, canonically as (i, j, w) with i < j, sorted.
    """

    n: int
    edges: Tuple[Edge, ...] = ()

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError(f"graph needs at least one node, got n={self.n}")
        canonical: Dict[Tuple[int, int], float] = {}
        for edge in self.edges:
            if len(edge) == 2:
                i, j = edge
                w = 1.0
            else:
                i, j, w = edge
            i, j, w = int(i), int(j), float(w)
            if i == j:
                raise ParameterError(f"self-loop on node {i}")
            if not (1 <= i <= self.n and 1 <= j <= self.n):
                raise ParameterError(f"edge ({i},{j}) outside node range 1..{self.n}")
            if not w > 0 or math.isinf(w):
                raise ParameterError(f"edge ({i},{j}) needs a finite positive weight, got {w}")
            key = (min(i, j), max(i, j))
            if key in canonical:
                raise ParameterError(f"duplicate edge {key}; multigraphs are not supported")
            canonical[key] = w
        object.__setattr__(self, 'edges', tuple((i, j, w) for (i, j), w in sorted(canonical.items())))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable) -> 'Graph':
        return cls(n, tuple(edges))

    @classmethod
    def from_networkx(cls, graph: nx.Graph) -> 'Graph':
        """Relabel the networkx nodes (in sorted order) to 1..n."""
        nodes = sorted(graph.nodes())
        index = {node: k + 1 for k, node in enumerate(nodes)}
        edges = [(index[u], index[v], data.get('weight', 1.0)) for u, v, data in graph.edges(data=True)]
        return cls(len(nodes), tuple(edges))

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @cached_property
    def _weight_map(self) -> Dict[Tuple[int, int], float]:
        return {(i, j): w for i, j, w in self.edges}

    @cached_property
    def _neighbor_lists(self) -> List[Tuple[int, ...]]:
        buckets: List[List[int]] = [[] for _ in range(self.n + 1)]
        for i, j, _ in self.edges:
            buckets[i].append(j)
            buckets[j].append(i)
        return [tuple(sorted(b)) for b in buckets]

    def weight(self, i: int, j: int) -> float:
        return self._weight_map.get((min(i, j), max(i, j)), 0.0)

    def neighbors(self, i: int) -> Tuple[int, ...]:
        return self._neighbor_lists[i]

    def degree(self, i: int) -> int:
        return len(self._neighbor_lists[i])

    def degrees(self) -> np.ndarray:
        """Edge counts d_i, position i-1."""
        return np.array([len(self._neighbor_lists[i]) for i in range(1, self.n + 1)], dtype=int)

    def strengths(self) -> np.ndarray:
        """Weighted degrees sum_j w_ij, position i-1 (equal to degrees for unit weights)."""
        return np.asarray(self.adjacency().sum(axis=1)).ravel()

    @property
    def total_weight(self) -> float:
        return float(sum(w for _, _, w in self.edges))

    @cached_property
    def _adjacency(self) -> csr_matrix:
        if not self.edges:
            return csr_matrix((self.n, self.n))
        rows, cols, vals = [], [], []
        for i, j, w in self.edges:
            rows += [i - 1, j - 1]
            cols += [j - 1, i - 1]
            vals += [w, w]
        return csr_matrix((vals, (rows, cols)), shape=(self.n, self.n))

    def adjacency(self) -> csr_matrix:
        """Symmetric weight matrix, 0-based."""
        return self._adjacency

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(1, self.n + 1))
        graph.add_weighted_edges_from(self.edges)
        return graph


@dataclass(frozen=True)
class StubbornnessProfile:
    """Per-agent stubbornness K_i, position i-1. FULLY_STUBBORN marks K_i = inf."""

    levels: Tuple[float, ...]

    def __post_init__(self):
        levels = tuple(float(k) for k in self.levels)
        for i, k in enumerate(levels, start=1):
            if math.isnan(k) or k < 0:
                raise ParameterError(f"stubbornness of agent {i} must be >= 0 or inf, got {k}")
        object.__setattr__(self, 'levels', levels)

    @classmethod
    def none(cls, n: int) -> 'StubbornnessProfile':
        return cls(tuple([0.0] * n))

    @classmethod
    def from_mapping(cls, n: int, mapping: Mapping[int, float]) -> 'StubbornnessProfile':
        levels = [0.0] * n
        for i, k in mapping.items():
            if not 1 <= int(i) <= n:
                raise ParameterError(f"agent {i} outside 1..{n}")
            levels[int(i) - 1] = float(k)
        return cls(tuple(levels))

    @property
    def n(self) -> int:
        return len(self.levels)

    def level(self, i: int) -> float:
        return self.levels[i - 1]

    def is_fully(self, i: int) -> bool:
        return math.isinf(self.levels[i - 1])

    def is_partial(self, i: int) -> bool:
        return 0 < self.levels[i - 1] < math.inf

    @cached_property
    def stubborn(self) -> Tuple[int, ...]:
        return tuple(i for i, k in enumerate(self.levels, start=1) if k > 0)

    @cached_property
    def partial(self) -> Tuple[int, ...]:
        return tuple(i for i, k in enumerate(self.levels, start=1) if 0 < k < math.inf)

    @cached_property
    def full(self) -> Tuple[int, ...]:
        return tuple(i for i, k in enumerate(self.levels, start=1) if math.isinf(k))

    @property
    def has_stubborn(self) -> bool:
        return bool(self.stubborn)

    def finite_levels(self) -> np.ndarray:
        """K_i with fully stubborn entries zeroed (they are pinned, not weighted)."""
        levels = np.array(self.levels, dtype=float)
        levels[np.isinf(levels)] = 0.0
        return levels


@dataclass(frozen=True)
class AugmentedGraph:
    """Social graph plus one virtual absorbing node u_i per partially stubborn agent i.

    Node ids: agents are 1..n, the virtual node of the r-th partially stubborn agent
    (in increasing id order) is n + r.
    """

    base: Graph
    profile: StubbornnessProfile

    def __post_init__(self):
        if self.profile.n != self.base.n:
            raise ParameterError(f"profile covers {self.profile.n} agents, graph has {self.base.n}")

    @property
    def n(self) -> int:
        return self.base.n

    @cached_property
    def virtual_of(self) -> Dict[int, int]:
        return {agent: self.n + r for r, agent in enumerate(self.profile.partial, start=1)}

    @cached_property
    def agent_of(self) -> Dict[int, int]:
        return {u: agent for agent, u in self.virtual_of.items()}

    @property
    def n_hat(self) -> int:
        return self.n + len(self.profile.partial)

    @property
    def virtual_nodes(self) -> Tuple[int, ...]:
        return tuple(range(self.n + 1, self.n_hat + 1))

    def is_virtual(self, x: int) -> bool:
        return x > self.n

    @cached_property
    def absorbing(self) -> Tuple[int, ...]:
        return tuple(sorted(self.profile.full + self.virtual_nodes))

    @cached_property
    def free_nodes(self) -> Tuple[int, ...]:
        full = set(self.profile.full)
        return tuple(i for i in range(1, self.n + 1) if i not in full)

    def absorber_of(self, agent: int) -> int:
        """Absorbing vertex standing for stubborn agent `agent`."""
        if self.profile.is_fully(agent):
            return agent
        if agent in self.virtual_of:
            return self.virtual_of[agent]
        raise ParameterError(f"agent {agent} is not stubborn")

    @cached_property
    def edges(self) -> Tuple[Edge, ...]:
        virtual = tuple((agent, u, self.profile.level(agent)) for agent, u in self.virtual_of.items())
        return self.base.edges + virtual

    def weight(self, x: int, y: int) -> float:
        if self.is_virtual(x) or self.is_virtual(y):
            u, agent = (x, y) if self.is_virtual(x) else (y, x)
            return self.profile.level(agent) if self.agent_of.get(u) == agent else 0.0
        return self.base.weight(x, y)

    def neighbors(self, x: int) -> Tuple[int, ...]:
        if self.is_virtual(x):
            return (self.agent_of[x],)
        if x in self.virtual_of:
            return self.base.neighbors(x) + (self.virtual_of[x],)
        return self.base.neighbors(x)

    @cached_property
    def weighted_degrees(self) -> np.ndarray:
        """w_i over all augmented nodes, position x-1."""
        w = np.zeros(self.n_hat)
        w[:self.n] = self.base.strengths()
        for agent, u in self.virtual_of.items():
            k = self.profile.level(agent)
            w[agent - 1] += k
            w[u - 1] = k
        return w

    def weighted_degree(self, x: int) -> float:
        return float(self.weighted_degrees[x - 1])

    @property
    def total_weight(self) -> float:
        """Z = sum of weighted degrees over every augmented node."""
        return float(self.weighted_degrees.sum())

    @cached_property
    def _adjacency(self) -> csr_matrix:
        rows, cols, vals = [], [], []
        for x, y, w in self.edges:
            rows += [x - 1, y - 1]
            cols += [y - 1, x - 1]
            vals += [w, w]
        return csr_matrix((vals, (rows, cols)), shape=(self.n_hat, self.n_hat))

    def adjacency(self) -> csr_matrix:
        return self._adjacency

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(1, self.n_hat + 1))
        graph.add_weighted_edges_from(self.edges)
        return graph

    def transition_matrix(self) -> csr_matrix:
        """Walk on the augmented graph: P_xy = w_xy / w_x; a virtual node steps back to its agent."""
        w = self.weighted_degrees
        with np.errstate(divide='ignore'):
            inv = np.where(w > 0, 1.0 / w, 0.0)
        return csr_matrix(diags(inv) @ self._adjacency)

    def reduced_system(self) -> Tuple[csr_matrix, csr_matrix]:
        """(A~, B~) with x~(t+1) = A~ x~(t) + B~ x_S(0).

        Rows follow `free_nodes`; B~ columns follow `profile.stubborn`.
        """
        free = self.free_nodes
        stubborn = self.profile.stubborn
        position = {node: r for r, node in enumerate(free)}
        column = {agent: c for c, agent in enumerate(stubborn)}
        w = self.weighted_degrees
        a_rows, a_cols, a_vals = [], [], []
        b_rows, b_cols, b_vals = [], [], []
        for i in free:
            r = position[i]
            for j in self.base.neighbors(i):
                p = self.base.weight(i, j) / w[i - 1]
                if j in position:
                    a_rows.append(r)
                    a_cols.append(position[j])
                    a_vals.append(p)
                else:
                    b_rows.append(r)
                    b_cols.append(column[j])
                    b_vals.append(p)
            if i in self.virtual_of:
                b_rows.append(r)
                b_cols.append(column[i])
                b_vals.append(self.profile.level(i) / w[i - 1])
        a_tilde = csr_matrix((a_vals, (a_rows, a_cols)), shape=(len(free), len(free)))
        b_tilde = csr_matrix((b_vals, (b_rows, b_cols)), shape=(len(free), len(stubborn)))
        return a_tilde, b_tilde

    def free_weights(self) -> np.ndarray:
        return np.array([self.weighted_degrees[i - 1] for i in self.free_nodes])

    def describe(self) -> Dict[str, Optional[float]]:
        return {
            'n': self.n,
            'virtual_nodes': len(self.virtual_nodes),
            'absorbing': len(self.absorbing),
            'Z': self.total_weight,
        }
