"""End-to-end checks over batches of random instances."""
from __future__ import annotations

import math

import numpy as np
import pytest

from conftest import random_instance
from models.graph import FULLY_STUBBORN, StubbornnessProfile
from models.results import DynamicsConfig
from utils.bounds import conductance, scaling_lower_bound
from utils.dynamics import decay_check, run
from utils.equilibrium import (
    consensus_value,
    electrical_voltages,
    hitting_probabilities,
    line_closed_form,
    solve_equilibrium,
)
from utils.graph_generator import complete, line, ring, star
from utils.graph_metrics import build_augmented, is_bipartite
from utils.method_agreement import MethodAgreement
from utils.monte_carlo import mc_hitting
from utils.spectral import dense_spectrum, lambda_sub, slem, symmetrized_substochastic
from utils.sweep import log_range, sweep

pytestmark = pytest.mark.slow


def test_consensus_on_random_graphs() -> None:
    checked = 0
    for seed in range(50):
        g, _, x0 = random_instance(seed)
        if is_bipartite(g):
            continue
        target = consensus_value(g, x0)
        trajectory = run(g, StubbornnessProfile.none(g.n), x0, DynamicsConfig(nu=1e-11))
        assert trajectory.converged
        assert np.allclose(trajectory.final, target, atol=1e-8)
        checked += 1
    assert checked >= 45


@pytest.mark.parametrize("n", [5, 8, 11, 50])
def test_reference_spectra(n: int) -> None:
    full = slem(complete(n))
    assert full.lambda_2 == pytest.approx(-1 / (n - 1), abs=1e-9)
    assert full.rho_2 == pytest.approx(1 / (n - 1), abs=1e-9)
    cycle = slem(ring(n))
    assert cycle.lambda_2 == pytest.approx(math.cos(2 * math.pi / n), abs=1e-9)
    expected_rho = 1.0 if n % 2 == 0 else math.cos(math.pi / n)
    assert cycle.rho_2 == pytest.approx(expected_rho, abs=1e-9)


@pytest.mark.parametrize("n", [3, 10, 50])
@pytest.mark.parametrize("k", [0.5, 1.0, 10.0])
def test_line_matches_closed_form(n: int, k: float) -> None:
    profile = StubbornnessProfile.from_mapping(n, {1: k, n: k})
    x0 = np.full(n, 0.5)
    x0[0], x0[-1] = 1.0, 0.0
    expected = line_closed_form(n, k, k, 1.0, 0.0)
    assert np.allclose(solve_equilibrium(line(n), profile, x0).x_inf, expected, atol=1e-10)
    assert np.allclose(electrical_voltages(line(n), profile, x0).x_inf, expected, atol=1e-10)


@pytest.mark.parametrize("n, k_first, k_last", [(2, 1.0, 1.0), (7, 0.3, 4.0), (20, FULLY_STUBBORN, 2.0)])
def test_line_with_unequal_ends(n: int, k_first: float, k_last: float) -> None:
    profile = StubbornnessProfile.from_mapping(n, {1: k_first, n: k_last})
    x0 = np.full(n, 0.5)
    x0[0], x0[-1] = 1.0, 0.0
    result = solve_equilibrium(line(n), profile, x0)
    assert np.allclose(result.x_inf, line_closed_form(n, k_first, k_last, 1.0, 0.0), atol=1e-10)


def test_methods_agree_on_hundred_instances() -> None:
    checker = MethodAgreement()
    for seed in range(100):
        g, profile, x0 = random_instance(1000 + seed)
        report = checker.compare(checker.run_exact_methods(g, profile, x0))
        assert report['passed'], (seed, report['max_deviation'])


def test_monte_carlo_coverage() -> None:
    checker = MethodAgreement()
    walks = 100_000
    inside_3, inside_5, entries, instances = 0, 0, 0, 0
    for seed in range(10):
        g, profile, _ = random_instance(2000 + seed, n_low=10, n_high=30, max_stubborn=3)
        augmented = build_augmented(g, profile)
        if not augmented.free_nodes:
            continue
        exact = hitting_probabilities(augmented)
        estimate = mc_hitting(augmented, walks, seed=seed, n_jobs=4)
        three = checker.monte_carlo_within(exact, estimate, walks, sigmas=3.0)
        five = checker.monte_carlo_within(exact, estimate, walks, sigmas=5.0)
        assert five['all_inside'], (seed, five['max_gap'])
        inside_3 += three['inside']
        inside_5 += five['inside']
        entries += three['entries']
        instances += 1
    assert instances == 10
    assert inside_5 == entries
    assert inside_3 >= 0.98 * entries


@pytest.mark.parametrize("kind", ['complete', 'ring'])
def test_sweep_sandwich(kind: str) -> None:
    rows = sweep(kind, 'K_1', log_range(1e-2, 1e2, 31), n=11, n_jobs=2)
    assert len(rows) == 31
    for row in rows:
        assert row['T_lower'] <= row['T_exact'] * (1 + 1e-9)
        assert row['T_exact'] <= row['T_upper_eta'] * (1 + 1e-9)
        assert row['T_exact'] <= row['T_upper_xi'] * (1 + 1e-9)
    if kind == 'complete':
        at_one = min(rows, key=lambda row: abs(row['value'] - 1.0))
        assert at_one['value'] == pytest.approx(1.0)
        assert at_one['T_upper_eta'] == pytest.approx(422.0)


def test_error_decay_on_random_instances() -> None:
    for seed in range(20):
        g, profile, x0 = random_instance(3000 + seed, n_high=30)
        augmented = build_augmented(g, profile)
        rate = lambda_sub(augmented).lambda_A
        trajectory = run(g, profile, x0, DynamicsConfig(nu=1e-9), equilibrium=solve_equilibrium(g, profile, x0))
        assert trajectory.converged
        ok, _ = decay_check(trajectory, rate)
        assert ok, seed


def test_even_ring_keeps_alternating() -> None:
    x0 = np.random.default_rng(4).random(10)
    trajectory = run(ring(10), StubbornnessProfile.none(10), x0)
    assert trajectory.stop_reason == 'oscillating'
    even, odd = trajectory.parity_limits()
    assert not np.allclose(even, odd)
    assert np.allclose(0.5 * (even + odd), x0.mean(), atol=1e-9)


def test_fully_stubborn_star_center_settles_immediately() -> None:
    for n in (3, 10, 40):
        profile = StubbornnessProfile.from_mapping(n, {1: FULLY_STUBBORN})
        assert lambda_sub(build_augmented(star(n), profile)).T_exact == pytest.approx(1.0)
        x0 = np.linspace(0.0, 1.0, n)
        trajectory = run(star(n), profile, x0)
        assert np.allclose(trajectory.states[1], x0[0])


def test_perron_root_matches_dense_oracle() -> None:
    for seed in range(30):
        g, profile, _ = random_instance(4000 + seed, n_high=30)
        augmented = build_augmented(g, profile)
        if not augmented.free_nodes:
            continue
        oracle = dense_spectrum(symmetrized_substochastic(augmented))[0]
        assert lambda_sub(augmented).lambda_A == pytest.approx(oracle, abs=1e-8)


def test_self_confidence_restores_consensus_on_bipartite_ring() -> None:
    x0 = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0]
    target = np.full(6, consensus_value(ring(6), x0))
    trajectory = run(ring(6), StubbornnessProfile.none(6), x0, DynamicsConfig(epsilon=0.1), equilibrium=target)
    assert trajectory.converged
    assert np.allclose(trajectory.final, target, atol=1e-8)


def test_partial_only_scaling_bound_is_free_set_conductance() -> None:
    for seed in range(20):
        g, profile, _ = random_instance(5000 + seed)
        partial = StubbornnessProfile.from_mapping(
            g.n, {i: (1.0 if profile.is_fully(i) else profile.level(i)) for i in profile.stubborn})
        augmented = build_augmented(g, partial)
        scaling = scaling_lower_bound(augmented)
        assert scaling['case'] == 'partial-only'
        expected = 1 + 2 * g.edge_count / sum(partial.level(j) for j in partial.partial)
        assert scaling['value'] == pytest.approx(expected, abs=1e-12 * expected)
        assert scaling['value'] == pytest.approx(1 / conductance(augmented, augmented.free_nodes), rel=1e-12)
