"""
Black-point exploration on Z^2_+ embedded in the 3-d environment

Each plane vertex x = y + e (e east or north) is tested once, from a black
parent y at height psi(y). The east child tries heights psi(y)+i for
i in 1..N, the north child i in N+1..N+M, so the two children of a parent
never try the same heights. x is black when for some i the vertical edge
(y, psi(y)) -> (y, psi(y)+i) and the horizontal edge (y, psi(y)+i) ->
(x, psi(y)+i) are open and the two landing sites carry the next two letters
of the word. The minimal successful i fixes psi(x).
"""
import heapq
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Literal, Optional, Sequence, Tuple

import numpy as np

from ..errors import DomainError, ResourceRefusal
from ..logs import get_logger
from ..schemas import CouplingParams, ModelParams
from .environment import Edge, Environment, SiteField
from .words import Word, enumerate_xi

logger = get_logger("exploration")

Plane = Tuple[int, int]
Direction = Literal["east", "north"]

D_EVENT_MAX_M = 2

_STEP = {"east": (1, 0), "north": (0, 1)}
_AXIS = {"east": 1, "north": 2}


@dataclass(frozen=True)
class StepRecord:
    n: int
    x: Plane
    y: Optional[Plane]
    direction: Optional[Direction]
    i_or_fail: Optional[int]
    psi: Optional[int]
    truncated: bool = False

    def to_json(self) -> str:
        return json.dumps(asdict(self))


@dataclass
class ExplorationResult:
    xi: Word
    cp: CouplingParams
    psi: Dict[Plane, int] = field(default_factory=dict)
    parent: Dict[Plane, Tuple[Plane, Direction]] = field(default_factory=dict)
    white: set = field(default_factory=set)
    steps: List[StepRecord] = field(default_factory=list)

    @property
    def black(self) -> FrozenSet[Plane]:
        return frozenset(self.psi)

    @property
    def truncated(self) -> int:
        return sum(1 for s in self.steps if s.truncated)

    def status(self, v: Plane) -> str:
        if v in self.psi:
            return "black"
        if v in self.white:
            return "white"
        return "undetermined"

    def steps_jsonl(self) -> str:
        return "".join(s.to_json() + "\n" for s in self.steps)


def _try_heights(env: Environment, sites: SiteField, letters: Tuple[int, int], y: Plane, psi_y: int,
           direction: Direction, i_lo: int, i_hi: int) -> Tuple[Optional[int], bool]:
    """
    Minimal i in [i_lo, i_hi] making the child of y black, or None.
    The flag reports whether some tested heights fell outside the box.
    """
    dx, dy = _STEP[direction]
    x = (y[0] + dx, y[1] + dy)
    box = env.box
    widths = box.widths
    if x[0] > widths[0] or x[1] > widths[1]:
        return None, True
    i = np.arange(i_lo, i_hi + 1, dtype=np.int64)
    h = psi_y + i
    truncated = False
    if box.height is not None:
        inside = h <= box.height
        truncated = not bool(inside.all())
        i, h = i[inside], h[inside]
    if len(i) == 0:
        return None, truncated
    n = len(i)
    base = np.tile(np.array([y[0], y[1], psi_y], dtype=np.int64), (n, 1))
    corner = np.column_stack([np.full(n, y[0]), np.full(n, y[1]), h])
    landing = np.column_stack([np.full(n, x[0]), np.full(n, x[1]), h])
    ok = env.open_mask(base, 3, i)
    ok &= env.open_mask(corner, _AXIS[direction], 1)
    ok &= sites.labels(corner) == letters[0]
    ok &= sites.labels(landing) == letters[1]
    hits = np.flatnonzero(ok)
    if len(hits):
        return int(i[hits[0]]), False
    return None, truncated


def _trial_range(cp: CouplingParams, direction: Direction) -> Tuple[int, int]:
    if direction == "east":
        return 1, cp.N
    return cp.N + 1, cp.N + cp.M


def _check_environment(env: Environment):
    if env.params.d != 3:
        raise DomainError(f"exploration runs in d = 3, got d = {env.params.d}")


def explore(env: Environment, sites: SiteField, xi: Word, cp: CouplingParams) -> ExplorationResult:
    """
    Grow the black set from the origin until every vertex with coordinate
    sum < cp.max_diag that has a black oriented parent is determined.

    Candidates are taken in ascending coordinate sum, ties by ascending v_1.
    """
    _check_environment(env)
    if len(xi) < 2 * cp.max_diag:
        raise DomainError(f"word of length {len(xi)} is too short for max_diag {cp.max_diag}")
    res = ExplorationResult(xi=xi, cp=cp)
    origin = (0, 0)
    res.psi[origin] = 0
    res.steps.append(StepRecord(0, origin, None, None, 0, 0))
    heap: List[Tuple[int, int, Plane]] = []
    _push_children(heap, origin, cp.max_diag)
    first, second = ("east", "north") if cp.prefer == "east" else ("north", "east")
    n = 0
    while heap:
        _, _, x = heapq.heappop(heap)
        if x in res.psi or x in res.white:
            continue
        n += 1
        direction = None
        for cand in (first, second):
            dx, dy = _STEP[cand]
            y = (x[0] - dx, x[1] - dy)
            if y in res.psi:
                direction = cand
                break
        # every queued vertex was pushed by a black parent
        s = y[0] + y[1]
        letters = (xi[2 * s], xi[2 * s + 1])
        i_lo, i_hi = _trial_range(cp, direction)
        i, truncated = _try_heights(env, sites, letters, y, res.psi[y], direction, i_lo, i_hi)
        if i is None:
            res.white.add(x)
            res.steps.append(StepRecord(n, x, y, direction, None, None, truncated))
            continue
        res.psi[x] = res.psi[y] + i
        res.parent[x] = (y, direction)
        res.steps.append(StepRecord(n, x, y, direction, i, res.psi[x]))
        _push_children(heap, x, cp.max_diag)
    if res.truncated:
        logger.debug("exploration hit the box boundary on %d steps", res.truncated)
    return res


def _push_children(heap, v: Plane, max_diag: int):
    for dx, dy in _STEP.values():
        c = (v[0] + dx, v[1] + dy)
        if c[0] + c[1] < max_diag:
            heapq.heappush(heap, (c[0] + c[1], c[0], c))


def first_step_black(env: Environment, sites: SiteField, xi: Word, cp: CouplingParams,
                     direction: Direction = "east") -> Tuple[bool, bool]:
    """Fresh-randomness test of the origin's child; returns (black, truncated)"""
    _check_environment(env)
    if len(xi) < 2:
        raise DomainError("the first step reads two letters")
    i_lo, i_hi = _trial_range(cp, direction)
    i, truncated = _try_heights(env, sites, (xi[0], xi[1]), (0, 0), 0, direction, i_lo, i_hi)
    return i is not None, truncated


def _letter_probability(p: float, b: int) -> float:
    return p if b == 1 else 1.0 - p


def _truncated_pn(params: ModelParams, i: int) -> float:
    return params.pn.value(i) if i <= params.K else 0.0


def step_black_probability(params: ModelParams, cp: CouplingParams, direction: Direction = "east",
                           letters: Tuple[int, int] = (1, 1)) -> float:
    """
    Exact probability that a fresh step turns black:
    1 - prod_i [1 - eps * p_i^K * P(X = letter_1) * P(X = letter_2)]
    """
    q = _letter_probability(params.p, letters[0]) * _letter_probability(params.p, letters[1])
    i_lo, i_hi = _trial_range(cp, direction)
    return 1.0 - math.prod(1.0 - params.eps * _truncated_pn(params, i) * q for i in range(i_lo, i_hi + 1))


def step_black_lower_bound(params: ModelParams, cp: CouplingParams, direction: Direction = "east") -> float:
    q = min(params.p, 1.0 - params.p) ** 2
    i_lo, i_hi = _trial_range(cp, direction)
    return 1.0 - math.prod(1.0 - params.eps * _truncated_pn(params, i) * q for i in range(i_lo, i_hi + 1))


def black_probability_curve(params: ModelParams, n_max: int, letters: Tuple[int, int] = (1, 1)) -> np.ndarray:
    """step_black_probability of the east range 1..N for N = 1..n_max"""
    if n_max < 1:
        raise DomainError(f"n_max must be positive, got {n_max}")
    q = _letter_probability(params.p, letters[0]) * _letter_probability(params.p, letters[1])
    pn = np.array([_truncated_pn(params, i) for i in range(1, n_max + 1)])
    return 1.0 - np.cumprod(1.0 - params.eps * pn * q)


@dataclass(frozen=True)
class DiagonalSets:
    m: int
    L: FrozenSet[Plane]
    L1: FrozenSet[Plane]
    L2: FrozenSet[Plane]
    L3: FrozenSet[Plane]


def diagonal(m: int) -> List[Plane]:
    return [(v1, m - 1 - v1) for v1 in range(m)]


def diagonal_sets(m: int) -> DiagonalSets:
    """L_m split by 4 v_1 < m, m <= 4 v_1 < 3m and 3m <= 4 v_1"""
    if m < 1:
        raise DomainError(f"diagonal index must be positive, got {m}")
    line = diagonal(m)
    return DiagonalSets(
        m=m,
        L=frozenset(line),
        L1=frozenset(v for v in line if 4 * v[0] < m),
        L2=frozenset(v for v in line if m <= 4 * v[0] < 3 * m),
        L3=frozenset(v for v in line if 3 * m <= 4 * v[0]),
    )


def gamma_set(res: ExplorationResult, m: int) -> FrozenSet[Plane]:
    """Black vertices of L_{4m,2}"""
    if res.cp.max_diag < 4 * m:
        raise DomainError(f"exploration stopped at max_diag {res.cp.max_diag}, gamma_set needs {4 * m}")
    return frozenset(v for v in diagonal_sets(4 * m).L2 if v in res.psi)


def b_event(res: ExplorationResult, m: int) -> bool:
    return len(gamma_set(res, m)) >= m


def d_event(env: Environment, sites: SiteField, m: int, cp: CouplingParams) -> bool:
    """
    B_m(eta) for every eta of length 2(4m - 1); stops at the first failure.

    Raises ResourceRefusal when an exploration is cut off by the box height.
    """
    if m > D_EVENT_MAX_M:
        raise ResourceRefusal(
            f"D_m enumerates 2^{8 * m - 2} words; refusing m = {m} > {D_EVENT_MAX_M}", limit="2^(8m-2)"
        )
    cp = cp.model_copy(update={"max_diag": max(cp.max_diag, 4 * m)})
    for eta in enumerate_xi(4 * m):
        res = explore(env, sites, eta.pad(2 * cp.max_diag), cp)
        if res.truncated:
            raise ResourceRefusal("height-truncated", limit="height")
        if not b_event(res, m):
            return False
    return True


def witness_path(res: ExplorationResult, x: Plane) -> List[Tuple[int, int, int]]:
    """3-d path origin -> (x, psi(x)) alternating vertical and horizontal edges"""
    if x not in res.psi:
        raise DomainError(f"{x} is not black")
    chain = [x]
    while chain[-1] in res.parent:
        chain.append(res.parent[chain[-1]][0])
    chain.reverse()
    path = [(0, 0, 0)]
    for y, child in zip(chain, chain[1:]):
        h = res.psi[child]
        path.append((y[0], y[1], h))
        path.append((child[0], child[1], h))
    return path


def path_letters(sites: SiteField, path: Sequence[Tuple[int, int, int]]) -> Word:
    return Word(tuple(sites.site_label(v) for v in path[1:]))


def path_edges(path: Sequence[Tuple[int, int, int]]) -> List[Edge]:
    edges = []
    for v, u in zip(path, path[1:]):
        axis = next(k for k in range(3) if u[k] != v[k])
        edges.append(Edge(tuple(v), axis + 1, u[axis] - v[axis]))
    return edges


def step_outcome_correlation(results: Iterable[ExplorationResult]) -> float:
    """Lag-1 correlation of consecutive black/white determinations, pooled over step logs"""
    prev, nxt = [], []
    for res in results:
        outcomes = [int(s.i_or_fail is not None) for s in res.steps[1:]]
        prev.extend(outcomes[:-1])
        nxt.extend(outcomes[1:])
    if len(prev) < 2:
        raise DomainError("need at least two consecutive step pairs")
    a, b = np.asarray(prev, dtype=float), np.asarray(nxt, dtype=float)
    if a.std() == 0 or b.std() == 0:
        return math.nan
    return float(np.corrcoef(a, b)[0, 1])
