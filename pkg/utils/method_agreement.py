from itertools import combinations
from typing import Dict, List, Optional

import numpy as np

from models.graph import Graph, StubbornnessProfile
from models.results import EquilibriumResult, HittingMatrix
from utils.config import get_settings
from utils.equilibrium import electrical_voltages, hitting_equilibrium, solve_equilibrium


class MethodAgreement:
    """Cross-checks equilibria produced by independent methods."""

    def __init__(self, tol: Optional[float] = None):
        self.tol = get_settings().agreement_tol if tol is None else tol
        self.verdicts = {
            True: "All methods agree within tolerance",
            False: "Methods disagree; inspect the per-pair table",
        }

    def compare(self, results: List[EquilibriumResult]) -> Dict:
        pairs = self._pairwise(results)
        worst = max((p['deviation'] for p in pairs), default=0.0)
        passed = worst <= self.tol
        return {
            'methods': [r.method for r in results],
            'pairs': pairs,
            'max_deviation': worst,
            'tolerance': self.tol,
            'passed': passed,
            'summary': self.verdicts[passed],
            'residuals': {r.method: r.residual for r in results},
        }

    def _pairwise(self, results: List[EquilibriumResult]) -> List[Dict]:
        pairs = []
        for a, b in combinations(results, 2):
            deviation = float(np.max(np.abs(a.x_inf - b.x_inf))) if a.x_inf.size else 0.0
            pairs.append({'first': a.method, 'second': b.method, 'deviation': deviation})
        return pairs

    def run_exact_methods(self, g: Graph, profile: StubbornnessProfile, x0) -> List[EquilibriumResult]:
        return [
            solve_equilibrium(g, profile, x0),
            hitting_equilibrium(g, profile, x0),
            electrical_voltages(g, profile, x0),
        ]

    def monte_carlo_within(self, exact: HittingMatrix, estimate: HittingMatrix, walks: int,
                           sigmas: float = 3.0) -> Dict:
        """Count entries where |estimate - exact| <= sigmas * sqrt(p (1 - p) / walks), p exact."""
        p = np.clip(exact.values, 0.0, 1.0)
        gap = np.abs(estimate.values - exact.values)
        allowed = sigmas * np.sqrt(p * (1.0 - p) / walks) + 1e-12
        inside = gap <= allowed
        return {
            'entries': int(inside.size),
            'inside': int(inside.sum()),
            'max_gap': float(gap.max()) if gap.size else 0.0,
            'all_inside': bool(inside.all()),
        }


def compare_methods(results: List[EquilibriumResult], tol: Optional[float] = None) -> Dict:
    return MethodAgreement(tol).compare(results)
