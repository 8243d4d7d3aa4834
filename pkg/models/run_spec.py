from dataclasses import dataclass, field
from typing import Dict, Optional

from utils.errors import ParameterError
from utils.graph_generator import RANDOM_KINDS, normalize_kind


@dataclass(frozen=True)
class RunSpec:
    """Validated command-line request."""

    subcommand: str
    graph_path: Optional[str] = None
    kind: Optional[str] = None
    params: Dict = field(default_factory=dict)
    profile: Optional[str] = None
    opinions: Optional[str] = None
    out: Optional[str] = None
    seed: Optional[int] = None
    epsilon: float = 0.0
    nu: float = 1e-10
    max_steps: int = 100_000
    walks: int = 0

    def __post_init__(self):
        if self.subcommand != 'sweep' and (self.graph_path is None) == (self.kind is None):
            raise ParameterError("give exactly one graph source: --graph PATH or --kind KIND")
        if self.seed is None:
            if self.kind is not None and normalize_kind(self.kind) in RANDOM_KINDS:
                raise ParameterError(f"--kind {self.kind} is randomized; pass --seed")
            if self.opinions == 'random':
                raise ParameterError("--opinions random needs --seed")
            if self.walks > 0:
                raise ParameterError("Monte-Carlo walks need --seed")
