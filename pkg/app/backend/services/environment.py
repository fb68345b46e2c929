"""
Long-range environment: parameters, lazy bond and site sampling

Every edge and every site owns one uniform drawn from a keyed hash of its
canonical descriptor, so nothing is materialized and the same seed gives
nested open-edge sets when eps, K or p_n grow.

Canonical object id: little-endian signed 64-bit fields
    site: [0][x_1]...[x_d]
    edge: [1][x_1]...[x_d][direction][length]
(base vertex is the lower endpoint, direction in 1..d, length 1 unless
direction == d). The id words are folded through SplitMix64:
    h = splitmix64(seed); h = splitmix64(h ^ w) for each word w
and the uniform is (h >> 11) * 2^-53.
"""
import math
import struct
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from ..errors import DomainError, EncodingError
from ..schemas import Box, ModelParams

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
TAG_SITE = 0
TAG_EDGE = 1
UNIT = 2.0 ** -53

_U = np.uint64


def splitmix64(x: int) -> int:
    z = (x + GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * MIX1) & MASK64
    z = ((z ^ (z >> 27)) * MIX2) & MASK64
    return z ^ (z >> 31)


def mix_words(seed: int, words: Iterable[int]) -> int:
    h = splitmix64(seed & MASK64)
    for w in words:
        h = splitmix64(h ^ (w & MASK64))
    return h


def uniform_words(seed: int, words: Iterable[int]) -> float:
    return (mix_words(seed, words) >> 11) * UNIT


def _splitmix64_array(x: np.ndarray) -> np.ndarray:
    z = x + _U(GOLDEN)
    z = (z ^ (z >> _U(30))) * _U(MIX1)
    z = (z ^ (z >> _U(27))) * _U(MIX2)
    return z ^ (z >> _U(31))


def uniform_array(seed: int, words: np.ndarray) -> np.ndarray:
    """Vectorized uniform_words over the rows of an (n, k) integer array"""
    rows = np.ascontiguousarray(np.atleast_2d(words), dtype=np.int64).view(np.uint64)
    h = np.full(rows.shape[0], splitmix64(seed & MASK64), dtype=np.uint64)
    for j in range(rows.shape[1]):
        h = _splitmix64_array(h ^ rows[:, j])
    return (h >> _U(11)).astype(np.float64) * UNIT


def encode_site(v: Sequence[int]) -> bytes:
    return struct.pack(f"<{len(v) + 1}q", TAG_SITE, *v)


def encode_edge(base: Sequence[int], direction: int, length: int) -> bytes:
    return struct.pack(f"<{len(base) + 3}q", TAG_EDGE, *base, direction, length)


def uniform_at(seed: int, object_id: bytes) -> float:
    """Uniform in [0, 1) for a canonically encoded site or edge"""
    if len(object_id) == 0 or len(object_id) % 8:
        raise EncodingError(f"object id must be a nonempty multiple of 8 bytes, got {len(object_id)}")
    words = struct.unpack(f"<{len(object_id) // 8}q", object_id)
    tag = words[0]
    if tag == TAG_SITE:
        if len(words) < 2:
            raise EncodingError("site id carries no coordinates")
    elif tag == TAG_EDGE:
        if len(words) < 4:
            raise EncodingError("edge id needs coordinates, direction and length")
        if words[-2] < 1 or words[-1] < 1:
            raise EncodingError("edge direction and length must be positive")
    else:
        raise EncodingError(f"unknown tag {tag}")
    return uniform_words(seed, words)


def pn_value(pn, n: int) -> float:
    """p_n before truncation"""
    if n < 1:
        raise DomainError(f"p_n is defined for n >= 1, got {n}")
    return pn.value(n)


def partial_sum(pn, n: int) -> float:
    if n < 1:
        raise DomainError(f"partial sums start at n = 1, got {n}")
    return math.fsum(pn.value(i) for i in range(1, n + 1))


@lru_cache(maxsize=256)
def vertical_thresholds(params: ModelParams) -> np.ndarray:
    """Index n holds p_n^K for n = 0..K (index 0 unused, 0.0)"""
    out = np.zeros(params.K + 1, dtype=np.float64)
    for n in range(1, params.K + 1):
        out[n] = params.pn.value(n)
    out.setflags(write=False)
    return out


class Edge(NamedTuple):
    base: Tuple[int, ...]
    direction: int
    length: int = 1

    @property
    def head(self) -> Tuple[int, ...]:
        head = list(self.base)
        head[self.direction - 1] += self.length
        return tuple(head)

    def words(self) -> Tuple[int, ...]:
        return (TAG_EDGE, *self.base, self.direction, self.length)


@dataclass(frozen=True)
class Environment:
    params: ModelParams
    bond_seed: int
    box: Box

    def __post_init__(self):
        if self.box.d != self.params.d:
            raise DomainError(f"box is {self.box.d}-dimensional, params.d = {self.params.d}")

    def threshold(self, edge: Edge) -> float:
        d = self.params.d
        if len(edge.base) != d:
            raise DomainError(f"edge base {edge.base} is not a {d}-dimensional vertex")
        if not 1 <= edge.direction <= d:
            raise DomainError(f"direction {edge.direction} outside 1..{d}")
        if edge.length < 1:
            raise DomainError(f"edge length must be positive, got {edge.length}")
        if edge.direction < d:
            if edge.length != 1:
                raise DomainError("horizontal edges have length 1")
            return self.params.eps
        if edge.length > self.params.K:
            return 0.0
        return self.params.pn.value(edge.length)

    def edge_open(self, edge: Edge) -> bool:
        t = self.threshold(edge)
        if not (self.box.contains(edge.base) and self.box.contains(edge.head)):
            raise DomainError(f"edge {edge} leaves box {self.box.describe()}")
        if t <= 0.0:
            return False
        return uniform_words(self.bond_seed, edge.words()) < t

    def out_edges(self, v: Sequence[int], box: Optional[Box] = None) -> List[Edge]:
        """Oriented out-edges of v with both endpoints in `box` (default: own box)"""
        box = box or self.box
        v = tuple(v)
        d = self.params.d
        edges = []
        for i, w in enumerate(box.widths):
            if v[i] + 1 <= w:
                edges.append(Edge(v, i + 1, 1))
        top = self.params.K
        if box.height is not None:
            top = min(top, box.height - v[-1])
        edges.extend(Edge(v, d, n) for n in range(1, top + 1))
        return edges

    def open_out_edges(self, v: Sequence[int], box: Optional[Box] = None) -> List[Edge]:
        return [e for e in self.out_edges(v, box) if self.edge_open(e)]

    def open_mask(self, bases: np.ndarray, direction: int, lengths) -> np.ndarray:
        """Vectorized edge_open for edges (bases[j], direction, lengths[j]); no box check"""
        bases = np.asarray(bases, dtype=np.int64).reshape(-1, self.params.d)
        n = bases.shape[0]
        lengths = np.broadcast_to(np.asarray(lengths, dtype=np.int64), (n,))
        d = self.params.d
        if direction < d:
            thresholds = np.full(n, self.params.eps)
        else:
            table = vertical_thresholds(self.params)
            inside = lengths <= self.params.K
            thresholds = np.where(inside, table[np.minimum(lengths, self.params.K)], 0.0)
        words = np.empty((n, d + 3), dtype=np.int64)
        words[:, 0] = TAG_EDGE
        words[:, 1:d + 1] = bases
        words[:, d + 1] = direction
        words[:, d + 2] = lengths
        return uniform_array(self.bond_seed, words) < thresholds


@dataclass(frozen=True)
class SiteField:
    p: float
    site_seed: int
    box: Box

    def site_label(self, v: Sequence[int]) -> int:
        return int(uniform_words(self.site_seed, (TAG_SITE, *v)) < self.p)

    def labels(self, vertices: np.ndarray) -> np.ndarray:
        vertices = np.asarray(vertices, dtype=np.int64).reshape(-1, self.box.d)
        words = np.empty((vertices.shape[0], vertices.shape[1] + 1), dtype=np.int64)
        words[:, 0] = TAG_SITE
        words[:, 1:] = vertices
        return (uniform_array(self.site_seed, words) < self.p).astype(np.uint8)


def edge_open(env: Environment, edge: Edge) -> bool:
    return env.edge_open(edge)


def site_label(sites: SiteField, v: Sequence[int]) -> int:
    return sites.site_label(v)
