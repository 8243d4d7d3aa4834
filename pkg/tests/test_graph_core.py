from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from models.graph import FULLY_STUBBORN, AugmentedGraph, Graph, StubbornnessProfile
from utils.errors import DomainError, ParameterError
from utils.graph_generator import (
    complete,
    erdos_renyi,
    generate,
    grid,
    line,
    node_coordinates,
    random_regular,
    ring,
    small_world,
    small_world_shortcuts,
    star,
)
from utils.graph_metrics import (
    augmented_stationary,
    build_augmented,
    diameter,
    is_bipartite,
    is_connected,
    stationary_distribution,
)

SMALL_WORLD_DEGREE_C = 3.0


def test_complete_graph_has_all_pairs() -> None:
    g = complete(5)
    assert g.edge_count == 10
    assert g.degrees().tolist() == [4] * 5


def test_ring_parity_decides_bipartiteness() -> None:
    assert is_bipartite(ring(6))
    assert not is_bipartite(ring(5))


def test_ring_structure() -> None:
    g = ring(6)
    assert is_connected(g)
    assert diameter(g) == 3


def test_line_and_grid_diameters() -> None:
    assert diameter(line(7)) == 6
    assert diameter(grid(4)) == 2 * (4 - 1)


def test_diameter_rejects_disconnected_graph() -> None:
    g = Graph.from_edges(4, [(1, 2), (3, 4)])
    assert not is_connected(g)
    with pytest.raises(DomainError):
        diameter(g)


def test_star_center_is_node_one() -> None:
    g = star(5)
    assert g.neighbors(1) == (2, 3, 4, 5)
    assert g.degree(2) == 1


def test_grid_is_row_major() -> None:
    g = grid(3)
    assert node_coordinates(3, 5) == (1, 1)
    rows, cols = node_coordinates(3, np.arange(1, 10))
    assert rows.tolist() == [0, 0, 0, 1, 1, 1, 2, 2, 2]
    assert cols.tolist() == [0, 1, 2] * 3
    assert g.neighbors(5) == (2, 4, 6, 8)


@pytest.mark.parametrize("g", [complete(7), ring(9), line(5), grid(4), star(6)])
def test_handshake_lemma(g: Graph) -> None:
    assert g.degrees().sum() == 2 * g.edge_count


def test_small_world_is_deterministic() -> None:
    first = small_world(32, q=1, alpha=0.0, seed=7)
    second = small_world(32, q=1, alpha=0.0, seed=7)
    assert first.edges == second.edges
    assert len(small_world_shortcuts(32, 1, 0.0, seed=7)) == 1024
    base_edges = grid(32).edge_count
    assert base_edges < first.edge_count <= base_edges + 1024
    assert first.degrees().sum() == 2 * first.edge_count


def test_small_world_keeps_grid_edges() -> None:
    g = small_world(8, q=2, alpha=2.0, seed=3)
    for i, j, _ in grid(8).edges:
        assert g.weight(i, j) == 1.0


@pytest.mark.slow
@pytest.mark.parametrize("side", [16, 32, 64])
def test_small_world_max_degree_is_logarithmic(side: int) -> None:
    n = side * side
    for seed in range(20):
        for alpha in (0.0, 1.0, 2.0):
            g = small_world(side, q=1, alpha=alpha, seed=seed)
            assert g.degrees().max() <= SMALL_WORLD_DEGREE_C * math.log(n), (seed, alpha)


def test_random_regular_is_simple_and_regular() -> None:
    g = random_regular(12, 3, seed=4)
    assert g.degrees().tolist() == [3] * 12
    assert g.edge_count == 18


def test_random_regular_rejects_odd_total_degree() -> None:
    with pytest.raises(ParameterError):
        random_regular(7, 3, seed=1)


def test_randomized_kinds_need_a_seed() -> None:
    with pytest.raises(ParameterError):
        generate('erdos-renyi', {'n': 20, 'p': 0.3})
    with pytest.raises(ParameterError):
        generate('small-world', {'side': 4})


def test_erdos_renyi_uses_log_scaling_when_lambda_given() -> None:
    a = erdos_renyi(100, lam=1.5, seed=3)
    b = erdos_renyi(100, p=1.5 * math.log(100) / 100, seed=3)
    assert a.edges == b.edges


def test_generate_rejects_unknown_kind_and_bad_parameters() -> None:
    with pytest.raises(ParameterError):
        generate('hypercube', {'n': 8})
    with pytest.raises(ParameterError):
        generate('ring', {})
    with pytest.raises(ParameterError):
        generate('complete', {'n': 1})


def test_graph_rejects_self_loops_and_multi_edges() -> None:
    with pytest.raises(ParameterError):
        Graph.from_edges(3, [(1, 1)])
    with pytest.raises(ParameterError):
        Graph.from_edges(3, [(1, 2), (2, 1)])
    with pytest.raises(ParameterError):
        Graph.from_edges(3, [(1, 4)])
    with pytest.raises(ParameterError):
        Graph.from_edges(3, [(1, 2, -1.0)])


def test_graph_weights_are_symmetric() -> None:
    g = Graph.from_edges(3, [(2, 1, 0.5), (2, 3)])
    assert g.weight(1, 2) == g.weight(2, 1) == 0.5
    assert g.strengths().tolist() == [0.5, 1.5, 1.0]
    adjacency = g.adjacency().toarray()
    assert np.array_equal(adjacency, adjacency.T)


def test_networkx_bridge_preserves_edges() -> None:
    g = Graph.from_edges(4, [(1, 2, 2.0), (2, 3), (3, 4, 0.25)])
    assert Graph.from_networkx(g.to_networkx()) == g


def test_profile_partitions_stubborn_set() -> None:
    profile = StubbornnessProfile.from_mapping(5, {1: 2.0, 3: FULLY_STUBBORN, 4: 0.0})
    assert profile.stubborn == (1, 3)
    assert profile.partial == (1,)
    assert profile.full == (3,)
    assert set(profile.partial).isdisjoint(profile.full)


def test_profile_rejects_negative_levels() -> None:
    with pytest.raises(ParameterError):
        StubbornnessProfile.from_mapping(3, {1: -1.0})


def test_augmented_ring_weights() -> None:
    augmented = build_augmented(ring(5), StubbornnessProfile.from_mapping(5, {1: 2.0}))
    assert augmented.virtual_of == {1: 6}
    assert augmented.weighted_degree(1) == 4.0
    assert augmented.weighted_degree(6) == 2.0
    assert [augmented.weighted_degree(i) for i in range(2, 6)] == [2.0] * 4
    assert augmented.total_weight == 14.0
    assert augmented.absorbing == (6,)


def test_augmented_without_partial_agents_adds_nothing() -> None:
    g = ring(6)
    augmented = build_augmented(g, StubbornnessProfile.from_mapping(6, {2: FULLY_STUBBORN}))
    assert augmented.n_hat == 6
    assert augmented.edges == g.edges
    assert augmented.absorbing == (2,)
    assert augmented.free_nodes == (1, 3, 4, 5, 6)


def test_augmented_line_total_weight() -> None:
    augmented = build_augmented(line(3), StubbornnessProfile.from_mapping(3, {1: 1.0, 3: 1.0}))
    assert augmented.total_weight == 8.0
    assert len(augmented.virtual_nodes) == 2


def test_augmented_rebuild_is_identical() -> None:
    g = ring(7)
    profile = StubbornnessProfile.from_mapping(7, {2: 0.5, 5: 3.0})
    first, second = AugmentedGraph(g, profile), AugmentedGraph(g, profile)
    assert first.edges == second.edges
    assert np.array_equal(first.weighted_degrees, second.weighted_degrees)


def test_build_augmented_needs_connected_graph() -> None:
    g = Graph.from_edges(4, [(1, 2), (3, 4)])
    with pytest.raises(DomainError):
        build_augmented(g, StubbornnessProfile.from_mapping(4, {1: 1.0}))


def test_reduced_system_on_mixed_path(mixed_path) -> None:
    g, profile = mixed_path
    a_tilde, b_tilde = AugmentedGraph(g, profile).reduced_system()
    assert np.allclose(a_tilde.toarray(), [[0.0, 1 / 3], [0.5, 0.0]])
    assert np.allclose(b_tilde.toarray(), [[2 / 3, 0.0], [0.0, 0.5]])


def test_transition_matrix_is_stochastic() -> None:
    augmented = AugmentedGraph(ring(6), StubbornnessProfile.from_mapping(6, {1: 2.0, 4: 0.5}))
    transitions = augmented.transition_matrix()
    assert np.allclose(np.asarray(transitions.sum(axis=1)).ravel(), 1.0)
    assert transitions[6, 0] == pytest.approx(1.0)


def test_stationary_distribution_on_regular_ring() -> None:
    assert np.allclose(stationary_distribution(ring(8)), 1 / 8)


def test_stationary_distribution_on_star() -> None:
    pi = stationary_distribution(star(4))
    assert pi[0] == pytest.approx(0.5)
    assert np.allclose(pi[1:], 1 / 6)


def test_stationary_distribution_is_normalized() -> None:
    pi = stationary_distribution(erdos_renyi(50, p=0.2, seed=11))
    assert abs(pi.sum() - 1.0) <= 1e-12


def test_stationary_distribution_on_augmented_graph(nine_agent_graph, nine_agent_profile) -> None:
    augmented = AugmentedGraph(nine_agent_graph, nine_agent_profile)
    pi = stationary_distribution(augmented)
    assert pi.size == len(augmented.free_nodes) == 8
    assert abs(pi.sum() - 1.0) <= 1e-12
    full = augmented_stationary(augmented)
    assert full.size == 10
    assert full[9] == pytest.approx(1.0 / augmented.total_weight)


def test_stationary_distribution_rejects_disconnected_graph() -> None:
    with pytest.raises(DomainError):
        stationary_distribution(Graph.from_edges(4, [(1, 2), (3, 4)]))


def _two_colorable(g: Graph) -> bool:
    for colors in itertools.product((0, 1), repeat=g.n):
        if all(colors[i - 1] != colors[j - 1] for i, j, _ in g.edges):
            return True
    return False


def test_bipartite_check_matches_brute_force() -> None:
    for seed in range(40):
        n = 2 + seed % 7
        g = erdos_renyi(n, p=0.4, seed=seed)
        assert is_bipartite(g) == _two_colorable(g)
