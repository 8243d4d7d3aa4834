import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from utils.errors import ParameterError

NORMS = ('pi_norm', 'euclidean')
STOP_REASONS = ('converged', 'max_steps', 'oscillating')


@dataclass
class OpinionState:
    """Opinions x(t) of all agents at step t, plus the initial opinions they remember."""

    x: np.ndarray
    x0: np.ndarray
    t: int = 0

    @classmethod
    def initial(cls, x0) -> 'OpinionState':
        x0 = np.asarray(x0, dtype=float)
        if x0.ndim != 1:
            raise ParameterError("initial opinions must be a vector")
        if x0.size and (x0.min() < 0.0 or x0.max() > 1.0):
            raise ParameterError("initial opinions must lie in [0, 1]")
        return cls(x=x0.copy(), x0=x0.copy(), t=0)

    @property
    def n(self) -> int:
        return self.x.size


@dataclass(frozen=True)
class DynamicsConfig:
    epsilon: float = 0.0
    nu: float = 1e-10
    max_steps: int = 100_000
    norm: str = 'pi_norm'

    def __post_init__(self):
        if not 0.0 <= self.epsilon < 1.0:
            raise ParameterError(f"self-confidence epsilon must be in [0, 1), got {self.epsilon}")
        if not self.nu > 0:
            raise ParameterError(f"threshold nu must be positive, got {self.nu}")
        if self.max_steps < 1:
            raise ParameterError(f"max_steps must be positive, got {self.max_steps}")
        if self.norm not in NORMS:
            raise ParameterError(f"unknown norm {self.norm!r}, expected one of {NORMS}")


@dataclass
class Trajectory:
    """States x(0..T) of a run; `error_norms[t]` is ||x(t) - x(inf)|| when an equilibrium was given."""

    states: List[np.ndarray]
    stop_reason: str
    error_norms: Optional[List[float]] = None
    increments: List[float] = field(default_factory=list)
    norm: str = 'pi_norm'

    @property
    def steps(self) -> int:
        return len(self.states) - 1

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    @property
    def converged(self) -> bool:
        return self.stop_reason == 'converged'

    def parity_limits(self) -> Tuple[np.ndarray, np.ndarray]:
        """Last two states ordered (even t, odd t); meaningful after an oscillating stop."""
        if self.steps < 1:
            return self.final, self.final
        last, before = self.states[-1], self.states[-2]
        return (last, before) if self.steps % 2 == 0 else (before, last)

    def rows(self) -> List[List[float]]:
        rows = []
        for t, x in enumerate(self.states):
            err = self.error_norms[t] if self.error_norms is not None else math.nan
            rows.append([t, *x.tolist(), err])
        return rows


@dataclass
class HittingMatrix:
    """F[r, c]: probability the walk from free node `free_nodes[r]` is absorbed at the
    absorber of stubborn agent `stubborn[c]`."""

    free_nodes: Tuple[int, ...]
    stubborn: Tuple[int, ...]
    values: np.ndarray
    n: int
    standard_errors: Optional[np.ndarray] = None

    def entry(self, i: int, j: int) -> float:
        return float(self.full_matrix()[i - 1, self.stubborn.index(j)])

    def row_sums(self) -> np.ndarray:
        return self.values.sum(axis=1)

    def full_matrix(self) -> np.ndarray:
        """n x |S| matrix; rows of fully stubborn agents are their identity rows."""
        full = np.zeros((self.n, len(self.stubborn)))
        free_rows = np.array(self.free_nodes, dtype=int) - 1
        full[free_rows, :] = self.values
        free = set(self.free_nodes)
        for c, j in enumerate(self.stubborn):
            if j not in free:
                full[j - 1, c] = 1.0
        return full

    def apply(self, x0) -> np.ndarray:
        """x(inf) = F x_S(0)."""
        x0 = np.asarray(x0, dtype=float)
        x_s = x0[np.array(self.stubborn, dtype=int) - 1]
        return self.full_matrix() @ x_s


@dataclass
class EquilibriumResult:
    x_inf: np.ndarray
    method: str
    residual: float
    hitting: Optional[HittingMatrix] = None
    converged: bool = True

    def rows(self) -> List[List[float]]:
        return [[i, float(v)] for i, v in enumerate(self.x_inf, start=1)]


@dataclass
class SpectralResult:
    lambda_2: Optional[float] = None
    lambda_min: Optional[float] = None
    rho_2: Optional[float] = None
    lambda_A: Optional[float] = None
    T_exact: Optional[float] = None
    iterations: int = 0
    residual: float = 0.0
    converged: bool = True
    perron_vector: Optional[np.ndarray] = field(default=None, repr=False)

    def to_dict(self) -> Dict:
        return {
            'lambda_2': self.lambda_2,
            'lambda_min': self.lambda_min,
            'rho_2': self.rho_2,
            'lambda_A': self.lambda_A,
            'T_exact': self.T_exact,
            'iterations': self.iterations,
            'residual': self.residual,
            'converged': self.converged,
        }


@dataclass
class PathSet:
    """Routed path per free node, as a vertex sequence ending in the absorbing set."""

    paths: Dict[int, Tuple[int, ...]]
    weighted_lengths: Dict[int, float]
    groups: Dict[int, Tuple[int, ...]]

    def length(self, i: int) -> int:
        return len(self.paths[i]) - 1

    def absorber(self, i: int) -> int:
        return self.paths[i][-1]

    def edges_of(self, i: int) -> List[Tuple[int, int]]:
        path = self.paths[i]
        return list(zip(path[:-1], path[1:]))

    @property
    def max_length(self) -> int:
        """|gamma|."""
        return max((self.length(i) for i in self.paths), default=0)

    @property
    def max_group(self) -> int:
        """|Gamma|."""
        return max((len(g) for g in self.groups.values()), default=0)


@dataclass
class BoundReport:
    xi: float
    xi_edge: Optional[Tuple[int, int]]
    eta: float
    eta_edge: Optional[Tuple[int, int]]
    psi_min: float
    psi_set: Tuple[int, ...]
    conductance_mode: str
    canonical: Dict[str, Optional[float]]
    T_exact: Optional[float] = None

    @property
    def T_upper_xi(self) -> float:
        return 2.0 * self.xi

    @property
    def T_upper_eta(self) -> float:
        return 2.0 * self.eta

    @property
    def T_upper(self) -> float:
        return min(self.T_upper_xi, self.T_upper_eta)

    @property
    def T_lower(self) -> float:
        return 1.0 / self.psi_min if self.psi_min > 0 else math.inf

    def to_dict(self) -> Dict:
        return {
            'xi': self.xi,
            'xi_edge': list(self.xi_edge) if self.xi_edge else None,
            'eta': self.eta,
            'eta_edge': list(self.eta_edge) if self.eta_edge else None,
            'psi_min': self.psi_min,
            'psi_set': list(self.psi_set),
            'conductance_mode': self.conductance_mode,
            'T_upper_xi': self.T_upper_xi,
            'T_upper_eta': self.T_upper_eta,
            'T_lower': self.T_lower,
            'T_exact': self.T_exact,
            'canonical': dict(self.canonical),
        }


@dataclass(frozen=True)
class PlacementScore:
    candidate: Tuple[int, ...]
    gamma: int
    bottleneck: int
    d_tilde: int
    product: int
    T_upper: float
    T_exact: Optional[float] = None

    def to_dict(self) -> Dict:
        return {
            'candidate': list(self.candidate),
            'gamma': self.gamma,
            'bottleneck': self.bottleneck,
            'd_tilde': self.d_tilde,
            'product': self.product,
            'T_upper': self.T_upper,
            'T_exact': self.T_exact,
        }
