import logging
import math
from collections import deque
from typing import Dict, Iterable, List, Optional, Set, Tuple

from models.graph import AugmentedGraph
from models.results import BoundReport, PathSet
from utils.errors import DomainError, ModeError, ParameterError
from utils.graph_metrics import diameter

logger = logging.getLogger(__name__)

EXACT_CAP = 22
AUTO_EXACT_CAP = 16
CONDUCTANCE_MODES = ('exact', 'heuristic', 'auto')


def shortest_path_forest(augmented: AugmentedGraph) -> PathSet:
    """Shortest path from every free agent into the absorbing set.

    A partially stubborn agent routes over its own edge (i, u_i); everyone else follows
    BFS parents, picking the smallest-index neighbour one hop closer.
    """
    if not augmented.absorbing:
        raise DomainError("shortest paths need at least one stubborn agent")
    distance: Dict[int, int] = {x: 0 for x in augmented.absorbing}
    queue = deque(augmented.absorbing)
    while queue:
        x = queue.popleft()
        for y in augmented.neighbors(x):
            if y not in distance:
                distance[y] = distance[x] + 1
                queue.append(y)

    parent: Dict[int, int] = {}
    for x in augmented.free_nodes:
        if x in augmented.virtual_of:
            parent[x] = augmented.virtual_of[x]
        elif x in distance:
            parent[x] = min(y for y in augmented.neighbors(x) if distance.get(y) == distance[x] - 1)

    paths: Dict[int, Tuple[int, ...]] = {}
    weighted: Dict[int, float] = {}
    groups: Dict[int, List[int]] = {a: [] for a in augmented.absorbing}
    absorbing = set(augmented.absorbing)
    for i in augmented.free_nodes:
        if i not in parent:
            raise DomainError(f"agent {i} cannot reach any stubborn agent")
        path = [i]
        while path[-1] not in absorbing:
            path.append(parent[path[-1]])
        paths[i] = tuple(path)
        weighted[i] = sum(1.0 / augmented.weight(x, y) for x, y in zip(path[:-1], path[1:]))
        groups[path[-1]].append(i)
    return PathSet(paths, weighted, {a: tuple(members) for a, members in groups.items()})


def _argmax(loads: Dict[Tuple[int, int], float]) -> Tuple[float, Optional[Tuple[int, int]]]:
    if not loads:
        return 0.0, None
    edge = min(loads, key=lambda e: (-loads[e], e))
    return loads[edge], edge


def xi_bound(augmented: AugmentedGraph, paths: PathSet) -> Tuple[float, Optional[Tuple[int, int]]]:
    """xi(x,y) = sum over paths through (x,y) of w_i |gamma_i|_w; max over oriented edges."""
    w = augmented.weighted_degrees
    loads: Dict[Tuple[int, int], float] = {}
    for i in paths.paths:
        contribution = w[i - 1] * paths.weighted_lengths[i]
        for edge in paths.edges_of(i):
            loads[edge] = loads.get(edge, 0.0) + contribution
    return _argmax(loads)


def eta_bound(augmented: AugmentedGraph, paths: PathSet) -> Tuple[float, Optional[Tuple[int, int]]]:
    """eta(x,y) = (1/w_xy) sum over paths through (x,y) of w_i |gamma_i|; max over oriented edges."""
    return _argmax(edge_congestion(augmented, paths))


def edge_congestion(augmented: AugmentedGraph, paths: PathSet) -> Dict[Tuple[int, int], float]:
    w = augmented.weighted_degrees
    sums: Dict[Tuple[int, int], float] = {}
    for i in paths.paths:
        contribution = w[i - 1] * paths.length(i)
        for edge in paths.edges_of(i):
            sums[edge] = sums.get(edge, 0.0) + contribution
    return {edge: total / augmented.weight(*edge) for edge, total in sums.items()}


def conductance(augmented: AugmentedGraph, subset: Iterable[int]) -> float:
    """psi(B) = boundary weight of B / sum of w_i over B."""
    members = set(subset)
    if not members:
        raise ParameterError("conductance needs a nonempty set")
    w = augmented.weighted_degrees
    volume = sum(w[i - 1] for i in members)
    inside = sum(augmented.weight(i, j) for i in members for j in augmented.neighbors(i) if j in members)
    return (volume - inside) / volume


class _ConnectedSetSearch:
    """Minimum conductance over connected subsets of the free agents, each visited once."""

    def __init__(self, augmented: AugmentedGraph):
        self.augmented = augmented
        self.weights = augmented.weighted_degrees
        free = set(augmented.free_nodes)
        self.adjacent: Dict[int, Set[int]] = {
            i: {j for j in augmented.base.neighbors(i) if j in free} for i in augmented.free_nodes
        }
        self.best_psi = math.inf
        self.best_set: Tuple[int, ...] = ()
        self.visited = 0

    def run(self) -> Tuple[float, Tuple[int, ...]]:
        for root in self.augmented.free_nodes:
            volume = self.weights[root - 1]
            extension = {u for u in self.adjacent[root] if u > root}
            self._extend(root, [root], extension, {root} | self.adjacent[root], volume, volume)
        logger.debug("exact conductance visited %d connected sets", self.visited)
        return self.best_psi, self.best_set

    def _offer(self, subset: List[int], cut: float, volume: float) -> None:
        self.visited += 1
        psi = cut / volume
        slack = 1e-12 * self.best_psi if self.best_psi < math.inf else 0.0
        if psi < self.best_psi - slack:
            self.best_psi, self.best_set = psi, tuple(sorted(subset))
        elif abs(psi - self.best_psi) <= slack:
            candidate = tuple(sorted(subset))
            if candidate < self.best_set:
                self.best_psi, self.best_set = min(psi, self.best_psi), candidate

    def _extend(self, root: int, subset: List[int], extension: Set[int], closed: Set[int],
                cut: float, volume: float) -> None:
        self._offer(subset, cut, volume)
        extension = set(extension)
        while extension:
            w = min(extension)
            extension.remove(w)
            # Edges into the subset stop being cut
            internal = sum(self.augmented.weight(u, w) for u in subset)
            # Only new neighbours above the root, so each set is reached once
            grown = extension | {u for u in self.adjacent[w] if u > root and u not in closed}
            self._extend(root, subset + [w], grown, closed | self.adjacent[w],
                         cut + self.weights[w - 1] - 2.0 * internal, volume + self.weights[w - 1])


def heuristic_candidates(augmented: AugmentedGraph) -> List[Tuple[int, ...]]:
    """V minus S_F, that set minus each agent adjacent to an absorber, and V minus S."""
    free = augmented.free_nodes
    absorbing = set(augmented.absorbing)
    candidates = [free]
    for i in free:
        if any(j in absorbing for j in augmented.neighbors(i)):
            reduced = tuple(j for j in free if j != i)
            if reduced:
                candidates.append(reduced)
    stubborn = set(augmented.profile.stubborn)
    plain = tuple(i for i in free if i not in stubborn)
    if plain:
        candidates.append(plain)
    return candidates


def conductance_lower(augmented: AugmentedGraph, mode: str = 'auto') -> Tuple[float, Tuple[int, ...], float]:
    """(psi_min, argmin set, T_lower = 1/psi_min)."""
    if mode not in CONDUCTANCE_MODES:
        raise ParameterError(f"unknown conductance mode {mode!r}, expected one of {CONDUCTANCE_MODES}")
    if not augmented.profile.has_stubborn:
        raise DomainError("conductance bound needs at least one stubborn agent")
    size = len(augmented.free_nodes)
    if size == 0:
        return 1.0, (), 1.0
    if mode == 'exact' and size > EXACT_CAP:
        raise ModeError(f"exact conductance is capped at {EXACT_CAP} free agents, got {size}")
    if mode == 'exact' or (mode == 'auto' and size <= AUTO_EXACT_CAP):
        psi, best = _ConnectedSetSearch(augmented).run()
    else:
        scored = [(conductance(augmented, c), tuple(sorted(c))) for c in heuristic_candidates(augmented)]
        psi, best = min(scored)
    return psi, best, 1.0 / psi


def _resolve_mode(augmented: AugmentedGraph, mode: str) -> str:
    if mode == 'auto':
        return 'exact' if len(augmented.free_nodes) <= AUTO_EXACT_CAP else 'heuristic'
    return mode


def bottleneck(augmented: AugmentedGraph, paths: PathSet) -> int:
    """Largest number of paths crossing one social edge, either direction."""
    counts: Dict[Tuple[int, int], int] = {}
    for i in paths.paths:
        for x, y in paths.edges_of(i):
            if augmented.is_virtual(x) or augmented.is_virtual(y):
                continue
            key = (min(x, y), max(x, y))
            counts[key] = counts.get(key, 0) + 1
    return max(counts.values(), default=0)


def scaling_lower_bound(augmented: AugmentedGraph) -> Dict[str, Optional[float]]:
    """Lower bounds from B = V minus S_F in closed form.

    Without fully stubborn agents: 1 + sum_i s_i / sum K_j.
    With them: (sum K_j + sum_i s_i - sum_{S_F} s_j) / (sum K_j + sum_{S_F} s_j).
    """
    profile = augmented.profile
    strengths = augmented.base.strengths()
    total_k = sum(profile.level(j) for j in profile.partial)
    total = float(strengths.sum())
    if not profile.full:
        value = 1.0 + total / total_k if total_k > 0 else math.inf
        return {'case': 'partial-only', 'value': value}
    full_strength = float(sum(strengths[j - 1] for j in profile.full))
    value = (total_k + total - full_strength) / (total_k + full_strength)
    return {'case': 'with-fully-stubborn', 'value': value}


def canonical_quantities(augmented: AugmentedGraph, paths: PathSet) -> Dict[str, Optional[float]]:
    profile = augmented.profile
    g = augmented.base
    degrees = g.degrees()
    stubborn = set(profile.stubborn)
    plain = [degrees[i - 1] for i in range(1, g.n + 1) if i not in stubborn]
    d_tilde = int(max(plain, default=0))
    d_hat = int(max((degrees[i - 1] for i in stubborn), default=0))
    k_min = min((profile.level(j) for j in profile.partial), default=None)
    gamma = paths.max_length
    big_gamma = paths.max_group
    b = bottleneck(augmented, paths)

    social = gamma * b * d_tilde
    numerator = d_hat + gamma * big_gamma * d_tilde
    k_star = None
    if profile.partial and social > 1:
        k_star = numerator / (social - 1)
    cong1 = 2.0 * (1.0 + numerator / k_min) if k_min is not None else None
    cong2 = 2.0 * social
    if cong1 is None:
        regime, t_upper = 'social-bottleneck', cong2
    elif k_star is None or k_min <= k_star:
        regime, t_upper = 'stubborn-edge', cong1
    else:
        regime, t_upper = 'social-bottleneck', cong2

    scaling = scaling_lower_bound(augmented)
    return {
        'd_tilde': d_tilde,
        'd_hat': d_hat,
        'K_min': k_min,
        'K_star': k_star,
        'B': b,
        'gamma': gamma,
        'Gamma': big_gamma,
        'cong1': cong1,
        'cong2': cong2,
        'regime': regime,
        'T_upper_canonical': t_upper,
        'naive': float(g.n * diameter(g) * int(degrees.max())),
        'scaling_case': scaling['case'],
        'scaling_lower': scaling['value'],
        'psi_free_set_lower': 1.0 / conductance(augmented, augmented.free_nodes) if augmented.free_nodes else 1.0,
    }


def canonical_report(augmented: AugmentedGraph, paths: Optional[PathSet] = None, mode: str = 'auto',
                     T_exact: Optional[float] = None) -> BoundReport:
    paths = paths or shortest_path_forest(augmented)
    xi, xi_edge = xi_bound(augmented, paths)
    eta, eta_edge = eta_bound(augmented, paths)
    psi, psi_set, _ = conductance_lower(augmented, mode)
    report = BoundReport(
        xi=xi,
        xi_edge=xi_edge,
        eta=eta,
        eta_edge=eta_edge,
        psi_min=psi,
        psi_set=psi_set,
        conductance_mode=_resolve_mode(augmented, mode),
        canonical=canonical_quantities(augmented, paths),
        T_exact=T_exact,
    )
    if T_exact is not None and not report.T_lower <= T_exact * (1 + 1e-9) <= report.T_upper * (1 + 1e-9):
        logger.warning("bounds do not bracket T_exact=%.6g (lower %.6g, upper %.6g)",
                       T_exact, report.T_lower, report.T_upper)
    return report


def complete_graph_closed_forms(n: int, k: float) -> Dict[str, float]:
    """Complete graph, one partially stubborn agent at node 1, shortest paths through node 1."""
    edges = n * (n - 1) / 2
    return {
        'eta_virtual': (k + (n - 1) + 2 * (n - 1) ** 2) / k,
        'eta_social': 2.0 * (n - 1),
        'psi_all': k / (k + 2 * edges),
        'psi_without_stubborn': 1.0 / (n - 1),
        'T_lower': max((k + 2 * edges) / k, n - 1.0),
    }


def ring_closed_forms(n: int, k: float) -> Dict[str, float]:
    """Ring, one partially stubborn agent at node 1."""
    return {
        'psi_all': k / (k + 2 * n),
        'psi_without_stubborn': 1.0 / (n - 1),
        'T_lower': max((k + 2 * n) / k, n - 1.0),
    }


def star_closed_forms(n: int, k: float) -> Dict[str, float]:
    """Star with the stubborn agent at the center (node 1)."""
    if math.isinf(k):
        return {'eta_social': 1.0, 'T_upper': 2.0}
    return {'eta_virtual': 1.0 + 3.0 * (n - 1) / k, 'eta_social': 2.0}
