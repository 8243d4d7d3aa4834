import logging
import math
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np

from models.graph import Graph, StubbornnessProfile
from models.results import DynamicsConfig, EquilibriumResult, OpinionState, Trajectory
from utils.errors import DomainError, ParameterError
from utils.graph_metrics import is_bipartite, require_connected

logger = logging.getLogger(__name__)

OSCILLATION_TOL = 1e-12
OSCILLATION_STREAK = 10
DECAY_SLACK = 1e-9


def cost(i: int, x, x0, profile: StubbornnessProfile, g: Graph) -> float:
    """J_i = 1/2 sum_j w_ij (x_i - x_j)^2 + 1/2 K_i (x_i - x0_i)^2."""
    if profile.is_fully(i):
        raise DomainError(f"agent {i} is fully stubborn; its cost is only the constraint x_i = x0_i")
    x = np.asarray(x, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    social = sum(g.weight(i, j) * (x[i - 1] - x[j - 1]) ** 2 for j in g.neighbors(i))
    return 0.5 * social + 0.5 * profile.level(i) * (x[i - 1] - x0[i - 1]) ** 2


class BestResponse:
    """x'_i = (sum_j w_ij x_j + K_i x0_i) / (w_i + K_i); fully stubborn agents stay at x0_i."""

    def __init__(self, g: Graph, profile: StubbornnessProfile):
        if profile.n != g.n:
            raise ParameterError(f"profile covers {profile.n} agents, graph has {g.n}")
        self.adjacency = g.adjacency()
        self.levels = profile.finite_levels()
        self.denominator = g.strengths() + self.levels
        self.pinned = np.zeros(g.n, dtype=bool)
        self.pinned[np.array(profile.full, dtype=int) - 1] = True
        self.lonely = self.denominator <= 0

    def __call__(self, x: np.ndarray, x0: np.ndarray) -> np.ndarray:
        numerator = self.adjacency @ x + self.levels * x0
        safe = np.where(self.lonely, 1.0, self.denominator)
        x_new = np.where(self.lonely, x, numerator / safe)
        x_new[self.pinned] = x0[self.pinned]
        return x_new


def best_response_step(state: OpinionState, g: Graph, profile: StubbornnessProfile) -> OpinionState:
    if state.n != g.n:
        raise ParameterError(f"state has {state.n} opinions, graph has {g.n} agents")
    x_new = BestResponse(g, profile)(state.x, state.x0)
    return OpinionState(x=x_new, x0=state.x0, t=state.t + 1)


def noisy_step(state: OpinionState, g: Graph, epsilon: float) -> OpinionState:
    """x'_i = (1 - eps) * mean of neighbors + eps * x_i."""
    if not 0.0 < epsilon < 1.0:
        raise ParameterError(f"epsilon must be in (0, 1), got {epsilon}")
    average = BestResponse(g, StubbornnessProfile.none(g.n))(state.x, state.x0)
    return OpinionState(x=(1.0 - epsilon) * average + epsilon * state.x, x0=state.x0, t=state.t + 1)


def pi_norm(v, dist) -> float:
    """(sum_i v_i^2 dist_i)^(1/2)."""
    v = np.asarray(v, dtype=float)
    dist = np.asarray(dist, dtype=float)
    if v.shape != dist.shape:
        raise ParameterError(f"vector has shape {v.shape}, distribution {dist.shape}")
    if np.any(dist < 0):
        raise ParameterError("distribution has a negative entry")
    return float(np.sqrt(np.sum(v * v * dist)))


def error_norm(g: Graph, profile: StubbornnessProfile, norm: str = 'pi_norm') -> Callable[[np.ndarray, np.ndarray], float]:
    """||x - x_inf|| on the free agents: pi-weighted without stubborn agents, pi~-weighted with them."""
    free = np.ones(g.n, dtype=bool)
    free[np.array(profile.full, dtype=int) - 1] = False
    weights = (g.strengths() + profile.finite_levels())[free]
    dist = weights / weights.sum() if weights.sum() > 0 else np.full(weights.size, 1.0 / max(weights.size, 1))

    if norm == 'euclidean':
        return lambda x, x_inf: float(np.linalg.norm((x - x_inf)[free]))
    return lambda x, x_inf: pi_norm((x - x_inf)[free], dist)


def _as_vector(equilibrium: Union[None, EquilibriumResult, Sequence[float]]) -> Optional[np.ndarray]:
    if equilibrium is None:
        return None
    if isinstance(equilibrium, EquilibriumResult):
        return np.asarray(equilibrium.x_inf, dtype=float)
    return np.asarray(equilibrium, dtype=float)


def run(g: Graph, profile: StubbornnessProfile, x0, config: DynamicsConfig = DynamicsConfig(),
        equilibrium: Union[None, EquilibriumResult, Sequence[float]] = None) -> Trajectory:
    """Iterate the synchronous update until the stop rule fires.

    With an equilibrium the rule is ||x(t) - x(inf)|| <= nu in the configured norm,
    otherwise ||x(t+1) - x(t)||_inf <= nu. Period-2 alternation is detected on bipartite
    graphs without stubborn agents when epsilon is 0.
    """
    require_connected(g, "run")
    state = OpinionState.initial(x0)
    if state.n != g.n:
        raise ParameterError(f"got {state.n} initial opinions for {g.n} agents")
    x_inf = _as_vector(equilibrium)
    if x_inf is not None and x_inf.size != g.n:
        raise ParameterError(f"equilibrium has {x_inf.size} entries for {g.n} agents")

    update = BestResponse(g, profile)
    eps = config.epsilon
    measure = error_norm(g, profile, config.norm) if x_inf is not None else None
    watch_oscillation = not profile.has_stubborn and eps == 0.0 and is_bipartite(g)

    x = state.x
    states = [x]
    errors = [measure(x, x_inf)] if measure else None
    increments = []
    reason = 'max_steps'
    streak = 0
    if errors is not None and errors[0] <= config.nu:
        return Trajectory(states, 'converged', errors, increments, config.norm)

    for step in range(1, config.max_steps + 1):
        x_new = update(x, state.x0)
        if eps > 0.0:
            x_new = eps * x + (1.0 - eps) * x_new
        increment = float(np.max(np.abs(x_new - x)))
        states.append(x_new)
        increments.append(increment)
        if errors is not None:
            errors.append(measure(x_new, x_inf))
            done = errors[-1] <= config.nu
        else:
            done = increment <= config.nu
        if done:
            reason = 'converged'
            break
        if watch_oscillation and len(states) >= 3:
            if np.max(np.abs(x_new - states[-3])) <= OSCILLATION_TOL and increment > config.nu:
                streak += 1
            else:
                streak = 0
            if streak >= OSCILLATION_STREAK:
                reason = 'oscillating'
                logger.info("period-2 alternation detected at t=%d", step)
                break
        x = x_new

    logger.debug("run stopped: %s after %d steps", reason, len(states) - 1)
    return Trajectory(states, reason, errors, increments, config.norm)


def decay_check(trajectory: Trajectory, rate: float) -> Tuple[bool, float]:
    """Check ||e(t+1)|| <= rate * ||e(t)|| + 1e-9 at every recorded step; return (ok, largest ratio)."""
    if trajectory.error_norms is None:
        raise DomainError("trajectory has no equilibrium reference; rerun with an equilibrium")
    errors = trajectory.error_norms
    ok = True
    worst = 0.0
    for before, after in zip(errors[:-1], errors[1:]):
        if after > rate * before + DECAY_SLACK:
            ok = False
        if before > 0:
            worst = max(worst, after / before)
    return ok, worst


def convergence_bracket(rate: float, e0: float, nu: float) -> Optional[Tuple[float, float]]:
    """((1/(1-rate)) - 1) log(e0/nu) <= tau(nu) <= (1/(1-rate)) log(e0/nu); None when e0 <= nu."""
    if not 0.0 <= rate < 1.0:
        raise ParameterError(f"rate must be in [0, 1), got {rate}")
    if nu <= 0:
        raise ParameterError(f"nu must be positive, got {nu}")
    if e0 <= nu:
        return None
    T = 1.0 / (1.0 - rate)
    scale = math.log(e0 / nu)
    return (T - 1.0) * scale, T * scale


def euclidean_envelope(rate: float, t: int, weights, e0: float) -> float:
    """rate^t * sqrt(w_max / w_min) * ||e(0)||_2."""
    weights = np.asarray(weights, dtype=float)
    if weights.size == 0 or np.any(weights <= 0):
        raise ParameterError("weights must be positive")
    return rate ** t * math.sqrt(weights.max() / weights.min()) * e0
