import logging
from typing import Dict, List, Optional, Sequence

import numpy as np
from joblib import Parallel, delayed

from models.graph import StubbornnessProfile
from utils.bounds import canonical_report
from utils.config import get_settings
from utils.errors import ParameterError
from utils.graph_generator import generate
from utils.graph_metrics import build_augmented
from utils.spectral import lambda_sub

logger = logging.getLogger(__name__)

SWEEP_VARIABLES = ('K_1', 'n')
COLUMNS = ['value', 'T_exact', 'T_upper_eta', 'T_upper_xi', 'T_lower']


def log_range(start: float, stop: float, points: int) -> np.ndarray:
    if points < 1 or start <= 0 or stop <= 0:
        raise ParameterError(f"log range needs positive bounds and points, got {start}, {stop}, {points}")
    return np.logspace(np.log10(start), np.log10(stop), points)


def parse_range(text: str) -> List[float]:
    """"a,b,c" lists values; "start:stop:points[:lin|log]" spaces them (log by default)."""
    text = text.strip()
    if not text:
        raise ParameterError("empty sweep range")
    if ':' not in text:
        return [float(v) for v in text.split(',') if v.strip()]
    parts = text.split(':')
    if len(parts) not in (3, 4):
        raise ParameterError(f"bad range {text!r}, expected start:stop:points[:lin|log]")
    start, stop, points = float(parts[0]), float(parts[1]), int(parts[2])
    spacing = parts[3] if len(parts) == 4 else 'log'
    if spacing == 'log':
        return log_range(start, stop, points).tolist()
    if spacing == 'lin':
        if points < 1:
            raise ParameterError("range needs at least one point")
        return np.linspace(start, stop, points).tolist()
    raise ParameterError(f"unknown spacing {spacing!r}")


def sweep_point(kind: str, n: int, k: float, agent: int = 1, params: Optional[Dict] = None,
                seed: Optional[int] = None, mode: str = 'auto') -> Dict[str, float]:
    """Exact T and the three bounds for one partially stubborn agent with level k."""
    graph = generate(kind, dict(params or {}, n=int(n)), seed)
    profile = StubbornnessProfile.from_mapping(graph.n, {agent: k})
    augmented = build_augmented(graph, profile)
    exact = lambda_sub(augmented)
    report = canonical_report(augmented, mode=mode, T_exact=exact.T_exact)
    return {
        'T_exact': exact.T_exact,
        'T_upper_eta': report.T_upper_eta,
        'T_upper_xi': report.T_upper_xi,
        'T_lower': report.T_lower,
    }


def sweep(kind: str, variable: str, values: Sequence[float], n: int = 11, k: float = 1.0,
          params: Optional[Dict] = None, seed: Optional[int] = None, mode: str = 'auto',
          n_jobs: Optional[int] = None) -> List[Dict[str, float]]:
    """One row per sweep value, in increasing order of the value."""
    if variable not in SWEEP_VARIABLES:
        raise ParameterError(f"sweep variable must be one of {SWEEP_VARIABLES}, got {variable!r}")
    values = sorted(float(v) for v in values)
    if not values:
        raise ParameterError("empty sweep range")
    n_jobs = n_jobs or get_settings().threads
    if variable == 'K_1':
        tasks = [delayed(sweep_point)(kind, n, v, 1, params, seed, mode) for v in values]
    else:
        tasks = [delayed(sweep_point)(kind, int(v), k, 1, params, seed, mode) for v in values]
    points = Parallel(n_jobs=n_jobs, prefer="threads")(tasks)
    logger.info("swept %s over %d values on %s", variable, len(values), kind)
    return [dict(value=v, **point) for v, point in zip(values, points)]
