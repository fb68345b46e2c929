"""
Oriented site percolation lab

Configurations live on an inclusive rectangle of Z^2 (negative coordinates
allowed) as a boolean array indexed [x - x_min, y - y_min]. Reachability
sweeps the anti-diagonals x + y = t in order: a cell can only be entered
from (x - 1, y) or (x, y - 1), both on the previous diagonal.

Source convention: sources are starting points and need not be occupied
(unless asked); occupancy and the optional constraint apply from the first
step on.
"""
import math
from dataclasses import dataclass
from typing import FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import DomainError, ResourceRefusal
from ..logs import get_logger
from ..schemas import DecayPoint
from .environment import TAG_EDGE, TAG_SITE, mix_words, uniform_array
from .exploration import diagonal_sets
from .intervals import wilson_ci

logger = get_logger("oriented")

Plane = Tuple[int, int]
EVENTS = ("E1", "E2", "E3", "E4")


@dataclass(frozen=True)
class Region:
    x_min: int
    x_max: int
    y_min: int
    y_max: int

    def __post_init__(self):
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise DomainError(f"empty region {self}")

    @property
    def shape(self) -> Tuple[int, int]:
        return self.x_max - self.x_min + 1, self.y_max - self.y_min + 1

    def contains(self, v: Plane) -> bool:
        return self.x_min <= v[0] <= self.x_max and self.y_min <= v[1] <= self.y_max

    def grid(self) -> Tuple[np.ndarray, np.ndarray]:
        xs = np.arange(self.x_min, self.x_max + 1, dtype=np.int64)
        ys = np.arange(self.y_min, self.y_max + 1, dtype=np.int64)
        return np.meshgrid(xs, ys, indexing="ij")

    def mask(self, vertices: Iterable[Plane]) -> np.ndarray:
        out = np.zeros(self.shape, dtype=bool)
        for v in vertices:
            if self.contains(v):
                out[v[0] - self.x_min, v[1] - self.y_min] = True
        return out

    def transpose(self) -> "Region":
        return Region(self.y_min, self.y_max, self.x_min, self.x_max)


@dataclass(frozen=True)
class OrientedConfig:
    region: Region
    gamma: float
    occupied: np.ndarray

    def is_occupied(self, v: Plane) -> bool:
        r = self.region
        return bool(self.occupied[v[0] - r.x_min, v[1] - r.y_min])

    def transpose(self) -> "OrientedConfig":
        return OrientedConfig(self.region.transpose(), self.gamma, self.occupied.T.copy())


@dataclass(frozen=True)
class OrientedBonds:
    """Open incoming bonds: from_west[x, y] is (x-1, y) -> (x, y), from_south[x, y] is (x, y-1) -> (x, y)"""
    region: Region
    q: float
    from_west: np.ndarray
    from_south: np.ndarray


def _uniforms(region: Region, seed: int, tail: Sequence[int] = (), tag: int = TAG_SITE,
              shift: Plane = (0, 0)) -> np.ndarray:
    X, Y = region.grid()
    n = X.size
    words = np.empty((n, 3 + len(tail)), dtype=np.int64)
    words[:, 0] = tag
    words[:, 1] = X.ravel() + shift[0]
    words[:, 2] = Y.ravel() + shift[1]
    for k, t in enumerate(tail):
        words[:, 3 + k] = t
    return uniform_array(seed, words).reshape(region.shape)


def sample_region(gamma: float, region: Region, seed: int) -> OrientedConfig:
    """Bernoulli(gamma) occupancy; the same seed couples all gamma"""
    if not 0.0 <= gamma <= 1.0:
        raise DomainError(f"gamma must lie in [0, 1], got {gamma}")
    return OrientedConfig(region, gamma, _uniforms(region, seed) < gamma)


def sample_bonds(q: float, region: Region, seed: int) -> OrientedBonds:
    if not 0.0 <= q <= 1.0:
        raise DomainError(f"q must lie in [0, 1], got {q}")
    # bonds are keyed by their tail vertex and direction
    west = _uniforms(region, seed, tail=(1, 1), tag=TAG_EDGE, shift=(-1, 0)) < q
    south = _uniforms(region, seed, tail=(2, 1), tag=TAG_EDGE, shift=(0, -1)) < q
    return OrientedBonds(region, q, west, south)


def sites_from_bonds(bonds: OrientedBonds) -> OrientedConfig:
    """A site is occupied iff one of its two incoming bonds is open"""
    gamma = 1.0 - (1.0 - bonds.q) ** 2
    return OrientedConfig(bonds.region, gamma, bonds.from_west | bonds.from_south)


def _diagonal_sweep(src: np.ndarray, enter_west: np.ndarray, enter_south: np.ndarray) -> np.ndarray:
    nx, ny = src.shape
    reach = np.zeros_like(src)
    for t in range(nx + ny - 1):
        ix = np.arange(max(0, t - ny + 1), min(nx - 1, t) + 1)
        iy = t - ix
        fw = np.zeros(len(ix), dtype=bool)
        fs = np.zeros(len(ix), dtype=bool)
        w = ix >= 1
        fw[w] = reach[ix[w] - 1, iy[w]] & enter_west[ix[w], iy[w]]
        s = iy >= 1
        fs[s] = reach[ix[s], iy[s] - 1] & enter_south[ix[s], iy[s]]
        reach[ix, iy] = src[ix, iy] | fw | fs
    return reach


def _reach_mask(config: OrientedConfig, sources: np.ndarray, allowed: Optional[np.ndarray] = None,
                require_source_occupied: bool = False) -> np.ndarray:
    ok = config.occupied if allowed is None else config.occupied & allowed
    src = sources & config.occupied if require_source_occupied else sources
    return _diagonal_sweep(src, ok, ok)


def _vertices(region: Region, mask: np.ndarray) -> FrozenSet[Plane]:
    return frozenset((int(i) + region.x_min, int(j) + region.y_min) for i, j in np.argwhere(mask))


def reachable(config: OrientedConfig, sources: Iterable[Plane], constraint: Optional[Iterable[Plane]] = None,
              require_source_occupied: bool = False) -> FrozenSet[Plane]:
    """Vertices joined to some source by an oriented path of occupied vertices"""
    sources = list(sources)
    r = config.region
    for s in sources:
        if not r.contains(s):
            raise DomainError(f"source {s} outside region")
    allowed = None if constraint is None else r.mask(constraint)
    return _vertices(r, _reach_mask(config, r.mask(sources), allowed, require_source_occupied))


def _predicate_mask(region: Region, fn) -> np.ndarray:
    X, Y = region.grid()
    return fn(X, Y)


def t_box(region: Region, m: int, which: int) -> np.ndarray:
    """T_{m,1}: 3m <= v < 4m; T_{m,2}: 3m <= u < 4m; both with 4m <= u + v < 16m"""
    def fn(U, V):
        band = V if which == 1 else U
        return (3 * m <= band) & (band < 4 * m) & (4 * m <= U + V) & (U + V < 16 * m)
    return _predicate_mask(region, fn)


def _diag_mask(region: Region, n: int, part: Optional[int] = None) -> np.ndarray:
    """L_n, or its part 1..3, as a mask"""
    def fn(U, V):
        on = (U + V == n - 1) & (U >= 0) & (V >= 0)
        if part == 1:
            on &= 4 * U < n
        elif part == 2:
            on &= (n <= 4 * U) & (4 * U < 3 * n)
        elif part == 3:
            on &= 3 * n <= 4 * U
        return on
    return _predicate_mask(region, fn)


def default_w_left(m: int) -> int:
    return 8 * m


def proof_region(m: int, w_left: Optional[int] = None) -> Region:
    w = default_w_left(m) if w_left is None else w_left
    return Region(-w, 16 * m - 1, -w, 16 * m - 1)


def _require_extent(config: OrientedConfig, m: int, w_left: int):
    need = proof_region(m, w_left)
    r = config.region
    if r.x_min > need.x_min or r.y_min > need.y_min or r.x_max < need.x_max or r.y_max < need.y_max:
        raise ResourceRefusal(
            f"region {r} too small: m = {m}, w_left = {w_left} needs [{need.x_min}, {need.x_max}] x "
            f"[{need.y_min}, {need.y_max}]",
            limit="region",
        )


def _line_mask(region: Region, m: int, w_left: int) -> np.ndarray:
    """v_2 = -v_1 + 4m - 1 clipped to v_1 in [-w_left, 4m - 1 + w_left]"""
    def fn(U, V):
        return (U + V == 4 * m - 1) & (U >= -w_left) & (U <= 4 * m - 1 + w_left)
    return _predicate_mask(region, fn)


def _check_sources(m: int, sources: Iterable[Plane]) -> List[Plane]:
    sources = list(sources)
    middle = diagonal_sets(4 * m).L2
    for s in sources:
        if s not in middle:
            raise DomainError(f"source {s} is not on L_{{{4 * m},2}}")
    return sources


def m_s(config: OrientedConfig, m: int, sources: Optional[Iterable[Plane]] = None) -> int:
    """Number of L_{16m,2} vertices reached from S (default: all of L_{4m,2})"""
    sources = _check_sources(m, diagonal_sets(4 * m).L2 if sources is None else sources)
    r = config.region
    target = _diag_mask(r, 16 * m, part=2)
    if int(target.sum()) != 8 * m:
        raise ResourceRefusal(f"region {r} does not contain L_{{{16 * m},2}}", limit="region")
    reach = _reach_mask(config, r.mask(sources))
    return int((reach & target).sum())


def q_counts(config: OrientedConfig, m: int, w_left: Optional[int] = None) -> Tuple[int, int]:
    """(|Q cap L_{16m}|, |Q cap L_{16m,2}|) where Q is reached from the clipped line"""
    w = default_w_left(m) if w_left is None else w_left
    _require_extent(config, m, w)
    r = config.region
    reach = _reach_mask(config, _line_mask(r, m, w))
    return int((reach & _diag_mask(r, 16 * m)).sum()), int((reach & _diag_mask(r, 16 * m, part=2)).sum())


def event_indicator(config: OrientedConfig, m: int, sources: Optional[Iterable[Plane]], which: str,
                    w_left: Optional[int] = None) -> bool:
    if which not in EVENTS:
        raise DomainError(f"unknown event {which!r}")
    w = default_w_left(m) if w_left is None else w_left
    _require_extent(config, m, w)
    r = config.region
    target = _diag_mask(r, 16 * m)
    if which == "E1":
        reach = _reach_mask(config, _diag_mask(r, 4 * m, part=1), t_box(r, m, 1))
        return bool((reach & target).any())
    if which == "E3":
        reach = _reach_mask(config, _diag_mask(r, 4 * m, part=3), t_box(r, m, 2))
        return bool((reach & target).any())
    if which == "E2":
        sources = _check_sources(m, diagonal_sets(4 * m).L2 if sources is None else sources)
        if not sources:
            return False
        return bool((_reach_mask(config, r.mask(sources)) & target).any())
    return q_counts(config, m, w)[0] >= 4 * m


def all_events(config: OrientedConfig, m: int, sources=None, w_left: Optional[int] = None) -> bool:
    return all(event_indicator(config, m, sources, e, w_left) for e in EVENTS)


def geometry_counterexample(config: OrientedConfig, m: int, sources=None, w_left: Optional[int] = None) -> bool:
    """E1, E2, E3 and E4 all hold while M_S < 4m"""
    if not all_events(config, m, sources, w_left):
        return False
    found = m_s(config, m, sources) < 4 * m
    if found:
        logger.warning("E1-E4 hold with M_S < 4m at m = %d, gamma = %s", m, config.gamma)
    return found


def bond_event_e1(bonds: OrientedBonds, m: int) -> bool:
    """E1 for the bond model: open bonds from L_{4m,1} to L_{16m} inside T_{m,1}"""
    r = bonds.region
    if r.x_min > 0 or r.y_min > 0 or r.x_max < 16 * m - 1 or r.y_max < 16 * m - 1:
        raise ResourceRefusal(f"region {r} does not contain [0, {16 * m - 1}]^2", limit="region")
    allowed = t_box(r, m, 1)
    reach = _diagonal_sweep(_diag_mask(r, 4 * m, part=1), bonds.from_west & allowed, bonds.from_south & allowed)
    return bool((reach & _diag_mask(r, 16 * m)).any())


@dataclass(frozen=True)
class ChainState:
    t: int
    lo: int
    hi: int
    active: FrozenSet[int]

    @classmethod
    def full(cls, t: int, lo: int, hi: int) -> "ChainState":
        return cls(t, lo, hi, frozenset(range(lo, hi + 1)))

    def vector(self) -> np.ndarray:
        out = np.zeros(self.hi - self.lo + 1, dtype=bool)
        for x in self.active:
            out[x - self.lo] = True
        return out


def chain_step(state: ChainState, gamma: float, seed: int) -> ChainState:
    """
    x' is active at t + 1 iff (x', t + 1 - x') is occupied and x' or x' - 1
    is active at t. Sites outside [lo, hi] count as inactive. Occupancy uses
    the sample_region hash, so chain runs and reachable agree exactly.
    """
    xs = np.arange(state.lo, state.hi + 1, dtype=np.int64)
    t1 = state.t + 1
    words = np.column_stack([np.full(len(xs), TAG_SITE), xs, t1 - xs])
    occupied = uniform_array(seed, words) < gamma
    prev = state.vector()
    shifted = np.zeros_like(prev)
    shifted[1:] = prev[:-1]
    nxt = occupied & (prev | shifted)
    return ChainState(t1, state.lo, state.hi, frozenset(int(x) for x in xs[nxt]))


def run_chain(state: ChainState, gamma: float, seed: int, steps: int) -> ChainState:
    for _ in range(steps):
        state = chain_step(state, gamma, seed)
    return state


def domination_window_check(gamma: float, rho: float, w: int, t_burn: int, trials: int,
                            seed: int) -> Tuple[float, bool]:
    """
    Estimate P(sites 0..w-1 all active after t_burn steps from a fully active
    window) and compare with rho^w - 3 sigma, sigma the binomial deviation at
    rho^w. A pass is necessary, not sufficient, for domination of nu_rho.
    """
    if not 1 <= w <= 6:
        raise DomainError(f"window size must lie in 1..6, got {w}")
    if t_burn < w:
        raise DomainError(f"t_burn ({t_burn}) must be at least the window size ({w})")
    hits = 0
    for k in range(trials):
        start = ChainState.full(0, -t_burn - 1, w + 1)
        end = run_chain(start, gamma, mix_words(seed, (k,)), t_burn)
        hits += all(x in end.active for x in range(w))
    estimate = hits / trials
    target = rho ** w
    sigma = math.sqrt(target * (1 - target) / trials)
    return estimate, estimate >= target - 3 * sigma


def decay_experiment(gamma: float, m_list: Sequence[int], trials: int, seed: int,
                     sources_for=None, level: float = 0.95) -> List[DecayPoint]:
    """P(M_S < 4m) per m with Wilson intervals; trial k reuses one seed across gamma"""
    points = []
    for m in m_list:
        region = Region(0, 16 * m - 1, 0, 16 * m - 1)
        sources = None if sources_for is None else sources_for(m)
        fails = 0
        for k in range(trials):
            config = sample_region(gamma, region, mix_words(seed, (m, k)))
            fails += m_s(config, m, sources) < 4 * m
        lo, hi = wilson_ci(fails, trials, level)
        points.append(DecayPoint(m=m, estimate=fails / trials, ci_lo=lo, ci_hi=hi, trials=trials, successes=fails))
    return points
