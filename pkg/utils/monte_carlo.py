import logging
import math
from typing import Optional

import numpy as np
from joblib import Parallel, delayed

from models.graph import AugmentedGraph
from models.results import HittingMatrix
from utils.config import get_settings
from utils.errors import CapExceededError, DomainError, ParameterError

logger = logging.getLogger(__name__)

STEP_CAP = 10_000_000
WALK_BLOCK = 4096


class _WalkTable:
    """Row-wise cumulative transition probabilities of the walk on the augmented graph."""

    def __init__(self, augmented: AugmentedGraph):
        transitions = augmented.transition_matrix()
        transitions.sort_indices()
        self.indptr = transitions.indptr
        self.indices = transitions.indices
        self.cumulative = np.cumsum(transitions.data)
        padded = np.concatenate(([0.0], self.cumulative))
        self.row_start = padded[self.indptr[:-1]]
        self.row_total = padded[self.indptr[1:]] - self.row_start
        self.absorbing = np.zeros(augmented.n_hat, dtype=bool)
        self.absorbing[np.array(augmented.absorbing, dtype=int) - 1] = True

    def step(self, rows: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
        target = self.row_start[rows] + uniforms * self.row_total[rows]
        slot = np.searchsorted(self.cumulative, target, side='right')
        slot = np.clip(slot, self.indptr[rows], self.indptr[rows + 1] - 1)
        return self.indices[slot]


def _walk_block(table: _WalkTable, node: int, seed: int, block: int, lanes: int) -> np.ndarray:
    """Absorbing vertex (0-based) of walks block * WALK_BLOCK ... + lanes started at `node`.

    Every step draws a full block of uniforms, so walk k depends only on (seed, node, k).
    """
    rng = np.random.default_rng([seed, node, block])
    position = np.full(lanes, node - 1, dtype=np.int64)
    active = ~table.absorbing[position]
    steps = 0
    while active.any():
        steps += 1
        if steps > STEP_CAP:
            raise CapExceededError(f"walk from node {node} not absorbed after {STEP_CAP} steps")
        uniforms = rng.random(WALK_BLOCK)
        running = np.flatnonzero(active)
        position[running] = table.step(position[running], uniforms[running])
        active[running] = ~table.absorbing[position[running]]
    return position


def mc_hitting(augmented: AugmentedGraph, walks_per_node: int, seed: int,
               n_jobs: Optional[int] = None) -> HittingMatrix:
    """Empirical absorption frequencies with binomial standard errors sqrt(p(1-p)/W)."""
    if walks_per_node < 1:
        raise ParameterError(f"walks_per_node must be >= 1, got {walks_per_node}")
    if not augmented.absorbing:
        raise DomainError("random walks need a nonempty absorbing set")
    n_jobs = n_jobs or get_settings().threads
    table = _WalkTable(augmented)
    stubborn = augmented.profile.stubborn
    column = np.full(augmented.n_hat, -1)
    for c, agent in enumerate(stubborn):
        column[augmented.absorber_of(agent) - 1] = c

    free = augmented.free_nodes
    # Split each node's walks into fixed-size blocks
    tasks = [
        (r, node, block, min(WALK_BLOCK, walks_per_node - block * WALK_BLOCK))
        for r, node in enumerate(free)
        for block in range(math.ceil(walks_per_node / WALK_BLOCK))
    ]
    endpoints = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(_walk_block)(table, node, seed, block, lanes) for _, node, block, lanes in tasks
    )
    counts = np.zeros((len(free), len(stubborn)))
    for (r, _, _, _), absorbed in zip(tasks, endpoints):
        counts[r] += np.bincount(column[absorbed], minlength=len(stubborn))
    values = counts / walks_per_node
    errors = np.sqrt(values * (1.0 - values) / walks_per_node)
    logger.debug("simulated %d walks from each of %d nodes in %d blocks", walks_per_node, len(free), len(tasks))
    return HittingMatrix(free, stubborn, values, augmented.n, standard_errors=errors)
