from models.graph import FULLY_STUBBORN, AugmentedGraph, Graph, StubbornnessProfile
from models.results import (
    BoundReport,
    DynamicsConfig,
    EquilibriumResult,
    HittingMatrix,
    OpinionState,
    PathSet,
    PlacementScore,
    SpectralResult,
    Trajectory,
)
