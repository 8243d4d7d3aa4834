"""Second eigenvalues of the walk operator and the Perron root of the sub-stochastic operator.

Both operators are reversible, so they are iterated in symmetrized form
D^{1/2} A D^{-1/2}, where the known top pair can be projected out exactly.
"""

import logging
import math
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.sparse import csr_matrix, diags, identity

from models.graph import AugmentedGraph, Graph, StubbornnessProfile
from models.results import SpectralResult
from utils.config import get_settings
from utils.errors import DomainError, ParameterError
from utils.graph_metrics import require_connected

logger = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-10


def symmetrized_walk(g: Graph, epsilon: float = 0.0) -> csr_matrix:
    """eps I + (1 - eps) D^{-1/2} W D^{-1/2}."""
    scale = diags(1.0 / np.sqrt(g.strengths()))
    operator = scale @ g.adjacency() @ scale
    if epsilon:
        operator = epsilon * identity(g.n) + (1.0 - epsilon) * operator
    return csr_matrix(operator)


def symmetrized_substochastic(augmented: AugmentedGraph) -> csr_matrix:
    """A*_ij = w_ij / sqrt(w_i w_j) on the free agents."""
    a_tilde, _ = augmented.reduced_system()
    w = augmented.free_weights()
    return csr_matrix(diags(np.sqrt(w)) @ a_tilde @ diags(1.0 / np.sqrt(w)))


def dense_spectrum(operator) -> np.ndarray:
    """All eigenvalues of a symmetric operator, descending."""
    dense = operator.toarray() if hasattr(operator, 'toarray') else np.asarray(operator, dtype=float)
    return np.sort(np.linalg.eigvalsh(dense))[::-1]


def _power_iteration(apply: Callable[[np.ndarray], np.ndarray], start: np.ndarray,
                     max_iter: int, tol: float) -> Tuple[float, np.ndarray, int, float, bool]:
    """Dominant eigenpair of a positive semidefinite operator; stops on the Rayleigh residual."""
    v = start / np.linalg.norm(start)
    mu, residual = 0.0, math.inf
    for iteration in range(1, max_iter + 1):
        w = apply(v)
        mu = float(v @ w)
        residual = float(np.linalg.norm(w - mu * v))
        if residual <= tol:
            return mu, v, iteration, residual, True
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0, v, iteration, 0.0, True
        v = w / norm
    return mu, v, max_iter, residual, False


def _start_vector(size: int) -> np.ndarray:
    return np.random.default_rng(0).standard_normal(size)


def slem(g: Graph, profile: Optional[StubbornnessProfile] = None, epsilon: float = 0.0,
         max_iter: Optional[int] = None) -> SpectralResult:
    """lambda_2, lambda_n and rho_2 of the walk operator (lazy with weight epsilon)."""
    if profile is not None and profile.has_stubborn:
        raise DomainError("slem is defined without stubborn agents; use lambda_sub")
    if not 0.0 <= epsilon < 1.0:
        raise ParameterError(f"epsilon must be in [0, 1), got {epsilon}")
    require_connected(g, "slem")
    if g.n < 2:
        raise DomainError("slem needs at least two agents")
    max_iter = max_iter or get_settings().power_max_iter
    operator = symmetrized_walk(g, epsilon)
    top = np.sqrt(g.strengths())
    top /= np.linalg.norm(top)

    def deflate(v: np.ndarray) -> np.ndarray:
        return v - (top @ v) * top

    start = deflate(_start_vector(g.n))
    # (S + I) / 2 and (I - S) / 2 have spectra in [0, 1]
    mu_up, _, it_up, res_up, ok_up = _power_iteration(
        lambda v: deflate(0.5 * (operator @ v + v)), start, max_iter, RESIDUAL_TOL / 2)
    mu_down, _, it_down, res_down, ok_down = _power_iteration(
        lambda v: deflate(0.5 * (v - operator @ v)), start, max_iter, RESIDUAL_TOL / 2)
    lambda_2 = 2.0 * mu_up - 1.0
    lambda_min = 1.0 - 2.0 * mu_down
    rho_2 = max(abs(lambda_2), abs(lambda_min))
    converged = ok_up and ok_down
    if not converged:
        logger.warning("power iteration hit the %d-iteration cap (residuals %.3g, %.3g)",
                       max_iter, 2 * res_up, 2 * res_down)
    return SpectralResult(
        lambda_2=lambda_2,
        lambda_min=lambda_min,
        rho_2=rho_2,
        T_exact=1.0 / (1.0 - rho_2) if rho_2 < 1.0 else math.inf,
        iterations=it_up + it_down,
        residual=2.0 * max(res_up, res_down),
        converged=converged,
    )


def epsilon_shift(spectral: SpectralResult, epsilon: float) -> SpectralResult:
    """lambda^(eps) = eps + (1 - eps) lambda for the lazy operator."""
    if not 0.0 < epsilon < 1.0:
        raise ParameterError(f"epsilon must be in (0, 1), got {epsilon}")
    if spectral.lambda_2 is None or spectral.lambda_min is None:
        raise ParameterError("epsilon_shift needs lambda_2 and lambda_min")
    lambda_2 = epsilon + (1.0 - epsilon) * spectral.lambda_2
    lambda_min = epsilon + (1.0 - epsilon) * spectral.lambda_min
    rho_2 = max(abs(lambda_2), abs(lambda_min))
    return SpectralResult(
        lambda_2=lambda_2,
        lambda_min=lambda_min,
        rho_2=rho_2,
        T_exact=1.0 / (1.0 - rho_2) if rho_2 < 1.0 else math.inf,
        iterations=spectral.iterations,
        residual=spectral.residual,
        converged=spectral.converged,
    )


def lambda_sub(augmented: AugmentedGraph, epsilon: float = 0.0,
               max_iter: Optional[int] = None) -> SpectralResult:
    """Perron root lambda_A of A~ and T = 1 / (1 - lambda_A).

    With epsilon > 0 the root is that of the lazy operator eps I + (1 - eps) A~,
    i.e. eps + (1 - eps) lambda_A.
    """
    if not augmented.profile.has_stubborn:
        raise DomainError("lambda_sub needs at least one stubborn agent")
    if not 0.0 <= epsilon < 1.0:
        raise ParameterError(f"epsilon must be in [0, 1), got {epsilon}")
    max_iter = max_iter or get_settings().power_max_iter
    size = len(augmented.free_nodes)
    if size == 0:
        return SpectralResult(lambda_A=0.0, T_exact=1.0, perron_vector=np.zeros(0))

    operator = symmetrized_substochastic(augmented)
    mu, vector, iterations, residual, converged = _power_iteration(
        lambda v: 0.5 * (operator @ v + v), np.ones(size), max_iter, RESIDUAL_TOL / 2)
    lambda_a = max(0.0, 2.0 * mu - 1.0)
    if epsilon:
        # A~ is nonnegative, so the shift moves the Perron root exactly
        lambda_a = epsilon + (1.0 - epsilon) * lambda_a
    if not converged:
        logger.warning("power iteration for lambda_A hit the %d-iteration cap (residual %.3g)",
                       max_iter, 2 * residual)
    return SpectralResult(
        lambda_A=lambda_a,
        T_exact=1.0 / (1.0 - lambda_a),
        iterations=iterations,
        residual=2.0 * residual,
        converged=converged,
        perron_vector=vector,
    )
