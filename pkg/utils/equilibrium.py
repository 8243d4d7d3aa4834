import logging
import math
from typing import Optional

import networkx as nx
import numpy as np
from scipy.sparse import csc_matrix, csr_matrix, diags, identity
from scipy.sparse.linalg import cg, splu, spsolve

from models.graph import AugmentedGraph, Graph, StubbornnessProfile
from models.results import EquilibriumResult, HittingMatrix
from utils.config import get_settings
from utils.errors import DomainError, ParameterError
from utils.graph_metrics import build_augmented, require_connected

logger = logging.getLogger(__name__)


def _opinions(x0, n: int) -> np.ndarray:
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (n,):
        raise ParameterError(f"expected {n} initial opinions, got shape {x0.shape}")
    return x0


def _require_stubborn(profile: StubbornnessProfile, what: str) -> None:
    if not profile.has_stubborn:
        raise DomainError(f"{what} needs at least one stubborn agent; use consensus_value instead")


def consensus_value(g: Graph, x0, profile: Optional[StubbornnessProfile] = None) -> float:
    """Common limit without stubborn agents: sum_j d_j x_j(0) / 2|E| (weighted degrees in general)."""
    if profile is not None and profile.has_stubborn:
        raise DomainError("consensus_value is only defined without stubborn agents")
    require_connected(g, "consensus_value")
    x0 = _opinions(x0, g.n)
    w = g.strengths()
    return float(w @ x0 / w.sum())


def fixed_point_residual(augmented: AugmentedGraph, x_inf, x0) -> float:
    """max_i |x_i - (sum_j w_ij x_j + K_i x0_i) / w_i| over the free agents."""
    g = augmented.base
    levels = augmented.profile.finite_levels()
    free = np.array(augmented.free_nodes, dtype=int) - 1
    if free.size == 0:
        return 0.0
    numerator = g.adjacency() @ x_inf + levels * x0
    w = augmented.weighted_degrees[:g.n]
    return float(np.max(np.abs(x_inf[free] - numerator[free] / w[free])))


def _stubborn_opinions(augmented: AugmentedGraph, x0: np.ndarray) -> np.ndarray:
    return x0[np.array(augmented.profile.stubborn, dtype=int) - 1]


def _assemble(augmented: AugmentedGraph, x0: np.ndarray, free_values: np.ndarray) -> np.ndarray:
    x_inf = x0.copy()
    if augmented.free_nodes:
        x_inf[np.array(augmented.free_nodes, dtype=int) - 1] = free_values
    return x_inf


def solve_equilibrium(g: Graph, profile: StubbornnessProfile, x0, tol: Optional[float] = None) -> EquilibriumResult:
    """Solve (I - A~) x~ = B~ x_S(0) on the free agents.

    Conjugate gradients run on the symmetric form (W - Adj) x~ = W B~ x_S(0); if the
    fixed-point residual misses `tol` the system is re-solved with a sparse direct solver.
    """
    _require_stubborn(profile, "solve_equilibrium")
    augmented = build_augmented(g, profile)
    x0 = _opinions(x0, g.n)
    tol = get_settings().solver_tol if tol is None else tol
    if not augmented.free_nodes:
        return EquilibriumResult(x0.copy(), 'linear', 0.0)

    a_tilde, b_tilde = augmented.reduced_system()
    w_free = augmented.free_weights()
    weight = diags(w_free)
    system = csr_matrix(weight - weight @ a_tilde)
    rhs = w_free * (b_tilde @ _stubborn_opinions(augmented, x0))

    # |r_i| / w_i bounds the fixed-point residual
    atol = 0.5 * tol * float(w_free.min())
    free_values, info = cg(system, rhs, rtol=0.0, atol=atol, maxiter=max(10 * len(w_free), 1000))
    x_inf = _assemble(augmented, x0, free_values)
    residual = fixed_point_residual(augmented, x_inf, x0)
    method = 'linear'
    if info != 0 or residual > tol:
        logger.warning("conjugate gradients missed the residual target (info=%s, residual=%.3g); "
                       "falling back to a direct solve", info, residual)
        free_values = spsolve(csc_matrix(system), rhs)
        x_inf = _assemble(augmented, x0, np.atleast_1d(free_values))
        residual = fixed_point_residual(augmented, x_inf, x0)
        method = 'linear-direct'
    return EquilibriumResult(x_inf, method, residual, converged=residual <= tol)


def hitting_probabilities(augmented: AugmentedGraph, tol: Optional[float] = None) -> HittingMatrix:
    """F = B~ + A~ F, one column per stubborn agent, from one LU factorization of I - A~."""
    if not augmented.absorbing:
        raise DomainError("hitting probabilities need a nonempty absorbing set")
    tol = get_settings().solver_tol if tol is None else tol
    a_tilde, b_tilde = augmented.reduced_system()
    size = a_tilde.shape[0]
    stubborn = augmented.profile.stubborn
    if size == 0:
        return HittingMatrix(augmented.free_nodes, stubborn, np.zeros((0, len(stubborn))), augmented.n)

    system = csc_matrix(identity(size) - a_tilde)
    lu = splu(system)
    rhs = b_tilde.toarray()
    values = np.column_stack([lu.solve(rhs[:, c]) for c in range(rhs.shape[1])])
    residual = float(np.max(np.abs(system @ values - rhs)))
    if residual > tol:
        logger.warning("hitting-probability residual %.3g above %.3g", residual, tol)
    return HittingMatrix(augmented.free_nodes, stubborn, values, augmented.n)


def hitting_equilibrium(g: Graph, profile: StubbornnessProfile, x0) -> EquilibriumResult:
    """x(inf) = F x_S(0)."""
    _require_stubborn(profile, "hitting_equilibrium")
    augmented = build_augmented(g, profile)
    x0 = _opinions(x0, g.n)
    hitting = hitting_probabilities(augmented)
    x_inf = hitting.apply(x0)
    return EquilibriumResult(x_inf, 'hitting', fixed_point_residual(augmented, x_inf, x0), hitting=hitting)


def _harmonic_extension(augmented: AugmentedGraph, boundary_values: np.ndarray) -> np.ndarray:
    """Voltages on every augmented node given values on the absorbing set (in `absorbing` order)."""
    nodes = list(range(1, augmented.n_hat + 1))
    laplacian = csr_matrix(nx.laplacian_matrix(augmented.to_networkx(), nodelist=nodes, weight='weight'))
    interior = np.array(augmented.free_nodes, dtype=int) - 1
    boundary = np.array(augmented.absorbing, dtype=int) - 1
    voltages = np.zeros(augmented.n_hat)
    # Fix the sources, solve L_II v_I = -L_IB v_B for the rest
    voltages[boundary] = boundary_values
    if interior.size:
        l_ii = csc_matrix(laplacian[interior][:, interior])
        l_ib = laplacian[interior][:, boundary]
        voltages[interior] = np.atleast_1d(spsolve(l_ii, -(l_ib @ boundary_values)))
    return voltages


def electrical_voltages(g: Graph, profile: StubbornnessProfile, x0) -> EquilibriumResult:
    """Node voltages with source i held at x0_i behind internal conductance K_i."""
    _require_stubborn(profile, "electrical_voltages")
    augmented = build_augmented(g, profile)
    x0 = _opinions(x0, g.n)
    boundary_values = np.array([
        x0[augmented.agent_of[node] - 1] if augmented.is_virtual(node) else x0[node - 1]
        for node in augmented.absorbing
    ])
    voltages = _harmonic_extension(augmented, boundary_values)[:g.n]
    return EquilibriumResult(voltages, 'electrical', fixed_point_residual(augmented, voltages, x0))


def unit_source_voltages(augmented: AugmentedGraph, source: int) -> np.ndarray:
    """Agent voltages when stubborn agent `source` is at 1 volt and every other source is grounded.

    Equals column `source` of the hitting matrix.
    """
    terminal = augmented.absorber_of(source)
    boundary_values = np.array([1.0 if node == terminal else 0.0 for node in augmented.absorbing])
    return _harmonic_extension(augmented, boundary_values)[:augmented.n]


def line_closed_form(n: int, k_first: float, k_last: float, x_first: float, x_last: float) -> np.ndarray:
    """Voltages on a line 1..n with sources at both ends.

    I = (x_1 - x_n) / (1/K_1 + 1/K_n + n - 1) and v_i = x_1 - I (1/K_1 + i - 1).
    """
    if n < 2:
        raise ParameterError(f"line needs n >= 2, got {n}")
    r_first = 0.0 if math.isinf(k_first) else 1.0 / k_first
    r_last = 0.0 if math.isinf(k_last) else 1.0 / k_last
    current = (x_first - x_last) / (r_first + r_last + n - 1)
    return x_first - current * (r_first + np.arange(n))
