import logging
from typing import Iterable, List, Mapping, Optional, Union

from joblib import Parallel, delayed

from models.graph import FULLY_STUBBORN, Graph, StubbornnessProfile
from models.results import PlacementScore
from utils.bounds import canonical_quantities, shortest_path_forest
from utils.config import get_settings
from utils.errors import ParameterError
from utils.graph_metrics import build_augmented
from utils.spectral import lambda_sub

logger = logging.getLogger(__name__)

EXACT_LIMIT = 500

Levels = Union[float, Mapping[int, float]]


def placement_score(g: Graph, candidate_set: Iterable[int], levels: Levels = FULLY_STUBBORN) -> PlacementScore:
    """Score stubborn agents placed at `candidate_set` by |gamma| * B * d~ and the canonical upper bound."""
    candidate = tuple(sorted(set(candidate_set)))
    if not candidate:
        raise ParameterError("placement needs at least one candidate agent")
    if isinstance(levels, Mapping):
        mapping = {i: levels[i] for i in candidate}
    else:
        mapping = {i: levels for i in candidate}
    for i, k in mapping.items():
        if not k > 0:
            raise ParameterError(f"placed agent {i} needs positive stubbornness, got {k}")
    profile = StubbornnessProfile.from_mapping(g.n, mapping)
    augmented = build_augmented(g, profile)
    quantities = canonical_quantities(augmented, shortest_path_forest(augmented))
    t_exact = lambda_sub(augmented).T_exact if g.n <= EXACT_LIMIT else None
    gamma, b, d_tilde = quantities['gamma'], quantities['B'], quantities['d_tilde']
    return PlacementScore(
        candidate=candidate,
        gamma=gamma,
        bottleneck=b,
        d_tilde=d_tilde,
        product=gamma * b * d_tilde,
        T_upper=quantities['T_upper_canonical'],
        T_exact=t_exact,
    )


def rank_placements(g: Graph, candidates: Optional[Iterable[int]] = None, level: float = FULLY_STUBBORN,
                    n_jobs: Optional[int] = None) -> List[PlacementScore]:
    """Score every single-agent placement and sort by (product, T_upper, agent)."""
    agents = sorted(set(candidates)) if candidates is not None else list(range(1, g.n + 1))
    n_jobs = n_jobs or get_settings().threads
    scores = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(placement_score)(g, [i], level) for i in agents
    )
    scores.sort(key=lambda s: (s.product, s.T_upper, s.candidate))
    logger.debug("ranked %d placements; best %s", len(scores), scores[0].candidate if scores else None)
    return scores
