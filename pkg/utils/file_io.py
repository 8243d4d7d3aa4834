"""Text formats: edge lists, stubbornness profiles, opinions, and CSV/JSON reports."""

import csv
import json
import logging
import math
import re
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Union

import numpy as np

from models.graph import FULLY_STUBBORN, Graph, StubbornnessProfile
from models.results import EquilibriumResult, HittingMatrix, Trajectory
from utils.errors import FormatError, ParameterError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

NODES_HEADER = re.compile(r'^#\s*nodes\s*[:=]\s*(\d+)\s*$', re.IGNORECASE)
EDGE_LINE = re.compile(r'^(\d+)\s+(\d+)(?:\s+(\S+))?$')
PROFILE_LINE = re.compile(r'^(\d+)\s+(\S+)$')
OPINION_LINE = re.compile(r'^(\d+)\s+(\S+)$')
INLINE_ITEM = re.compile(r'^\s*(\d+)\s*=\s*(\S+)\s*$')


def _format_number(value: float) -> str:
    if math.isinf(value):
        return 'inf'
    return repr(float(value))


def _parse_level(text: str) -> float:
    if text.lower() == 'inf':
        return FULLY_STUBBORN
    value = float(text)
    if math.isnan(value) or math.isinf(value) or value < 0:
        raise ValueError("stubbornness must be a nonnegative decimal or 'inf'")
    return value


def _content_lines(path: PathLike):
    with open(path, 'r', encoding='utf-8') as f:
        for number, raw in enumerate(f, start=1):
            yield number, raw, raw.strip()


def load_edge_list(path: PathLike, n: Optional[int] = None) -> Graph:
    """Read "i j [w]" lines; '#' starts a comment. A "# nodes: N" comment fixes n."""
    edges = []
    declared = None
    for number, raw, line in _content_lines(path):
        if not line:
            continue
        if line.startswith('#'):
            header = NODES_HEADER.match(line)
            if header:
                declared = int(header.group(1))
            continue
        match = EDGE_LINE.match(line)
        if not match:
            raise FormatError(str(path), number, raw, "expected 'i j [w]'")
        i, j = int(match.group(1)), int(match.group(2))
        if i < 1 or j < 1:
            raise FormatError(str(path), number, raw, "node ids are 1-based")
        try:
            w = float(match.group(3)) if match.group(3) else 1.0
        except ValueError:
            raise FormatError(str(path), number, raw, "weight is not a number") from None
        edges.append((i, j, w))
    # Isolated trailing agents only show up in the header
    size = max([n or 0, declared or 0] + [max(i, j) for i, j, _ in edges])
    try:
        return Graph(size, tuple(edges))
    except ParameterError as e:
        raise FormatError(str(path), 0, '', str(e)) from None


def save_edge_list(g: Graph, path: PathLike) -> None:
    with open(path, 'w', encoding='utf-8') as f:
        f.write(f"# nodes: {g.n}\n")
        for i, j, w in g.edges:
            f.write(f"{i} {j}\n" if w == 1.0 else f"{i} {j} {_format_number(w)}\n")
    logger.debug("wrote %d edges to %s", g.edge_count, path)


def load_profile(path: PathLike, n: int) -> StubbornnessProfile:
    """Read "i K" lines, K a nonnegative decimal or 'inf'. Unlisted agents are non-stubborn."""
    levels: Dict[int, float] = {}
    for number, raw, line in _content_lines(path):
        if not line or line.startswith('#'):
            continue
        match = PROFILE_LINE.match(line)
        if not match:
            raise FormatError(str(path), number, raw, "expected 'i K'")
        i = int(match.group(1))
        if not 1 <= i <= n:
            raise FormatError(str(path), number, raw, f"agent outside 1..{n}")
        try:
            levels[i] = _parse_level(match.group(2))
        except ValueError as e:
            raise FormatError(str(path), number, raw, str(e)) from None
    return StubbornnessProfile.from_mapping(n, levels)


def parse_profile_spec(text: str, n: int) -> StubbornnessProfile:
    """Inline form "i=K,j=inf"."""
    levels: Dict[int, float] = {}
    for item in filter(None, (part.strip() for part in text.split(','))):
        match = INLINE_ITEM.match(item)
        if not match:
            raise ParameterError(f"bad profile item {item!r}, expected 'i=K'")
        try:
            levels[int(match.group(1))] = _parse_level(match.group(2))
        except ValueError as e:
            raise ParameterError(f"bad profile item {item!r}: {e}") from None
    return StubbornnessProfile.from_mapping(n, levels)


def save_profile(profile: StubbornnessProfile, path: PathLike) -> None:
    with open(path, 'w', encoding='utf-8') as f:
        for i in profile.stubborn:
            f.write(f"{i} {_format_number(profile.level(i))}\n")


def load_opinions(path: PathLike, n: int) -> np.ndarray:
    """Read "i x0_i" lines covering every agent exactly once."""
    x0 = np.full(n, np.nan)
    for number, raw, line in _content_lines(path):
        if not line or line.startswith('#'):
            continue
        match = OPINION_LINE.match(line)
        if not match:
            raise FormatError(str(path), number, raw, "expected 'i x0'")
        i = int(match.group(1))
        if not 1 <= i <= n:
            raise FormatError(str(path), number, raw, f"agent outside 1..{n}")
        if not np.isnan(x0[i - 1]):
            raise FormatError(str(path), number, raw, "agent listed twice")
        try:
            value = float(match.group(2))
        except ValueError:
            raise FormatError(str(path), number, raw, "opinion is not a number") from None
        if not 0.0 <= value <= 1.0:
            raise FormatError(str(path), number, raw, "opinion outside [0, 1]")
        x0[i - 1] = value
    missing = [i + 1 for i in np.flatnonzero(np.isnan(x0))]
    if missing:
        raise ParameterError(f"{path}: no opinion for agents {missing[:10]}")
    return x0


def save_opinions(x0: Sequence[float], path: PathLike) -> None:
    with open(path, 'w', encoding='utf-8') as f:
        for i, value in enumerate(x0, start=1):
            f.write(f"{i} {_format_number(value)}\n")


def write_csv(path: PathLike, header: List[str], rows: Iterable[Sequence]) -> None:
    with open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(header)
        writer.writerows(rows)


def json_ready(value):
    """Copy of `value` with numpy scalars unwrapped and non-finite floats as None."""
    if isinstance(value, dict):
        return {k: json_ready(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_ready(v) for v in value]
    if isinstance(value, np.ndarray):
        return json_ready(value.tolist())
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def dumps_json(payload: Dict) -> str:
    return json.dumps(json_ready(payload), indent=2, sort_keys=True, allow_nan=False)


def write_json(path: PathLike, payload: Dict) -> None:
    with open(path, 'w', encoding='utf-8') as f:
        f.write(dumps_json(payload))
        f.write('\n')


def save_trajectory_csv(trajectory: Trajectory, path: PathLike) -> None:
    n = trajectory.final.size
    header = ['t'] + [f"x_{i}" for i in range(1, n + 1)] + ['err_norm']
    write_csv(path, header, trajectory.rows())


def save_equilibrium_csv(result: EquilibriumResult, path: PathLike) -> None:
    write_csv(path, ['i', 'x_inf'], result.rows())


def save_hitting_csv(hitting: HittingMatrix, path: PathLike) -> None:
    full = hitting.full_matrix()
    rows = [[i] + full[i - 1].tolist() for i in range(1, hitting.n + 1)]
    write_csv(path, ['i'] + [str(j) for j in hitting.stubborn], rows)
