"""
Which words are seen from a vertex in a sampled finite environment

seen_words is the layered dynamic program over word-set bitmaps,
sees_word is an independent letter-filtered frontier search and
brute_force_seen enumerates paths. The three agree on every instance.
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import DomainError, ResourceRefusal
from ..schemas import Box
from .. import settings
from .environment import Edge, Environment, SiteField
from .words import Word, WordSet

BRUTE_FORCE_PATH_LIMIT = 10**6

Vertex = Tuple[int, ...]


@dataclass(frozen=True)
class SeenQuery:
    env: Environment
    sites: SiteField
    L: int
    origin: Optional[Vertex] = None
    box: Optional[Box] = None

    def __post_init__(self):
        if self.origin is None:
            object.__setattr__(self, "origin", (0,) * self.env.params.d)
        if self.box is None:
            object.__setattr__(self, "box", self.env.box)
        if self.L < 0:
            raise DomainError(f"word length must be nonnegative, got {self.L}")
        if not _box_within(self.box, self.env.box):
            raise DomainError(f"query box {self.box.describe()} exceeds environment box {self.env.box.describe()}")
        if not self.box.contains(self.origin):
            raise DomainError(f"origin {self.origin} outside box {self.box.describe()}")


def _box_within(inner: Box, outer: Box) -> bool:
    if inner.d != outer.d or any(a > b for a, b in zip(inner.widths, outer.widths)):
        return False
    if outer.height is None:
        return True
    return inner.height is not None and inner.height <= outer.height


def window_vertex_count(q: SeenQuery) -> int:
    """Vertices a path of length L from the origin can visit inside the box"""
    o = q.origin
    count = 1
    for x, w in zip(o[:-1], q.box.widths):
        count *= min(w, x + q.L) - x + 1
    top = o[-1] + q.L * q.env.params.K
    if q.box.height is not None:
        top = min(top, q.box.height)
    return count * (top - o[-1] + 1)


def _check_guards(q: SeenQuery, max_length: Optional[int], budget_bits: Optional[int]) -> None:
    max_length = settings.max_word_length() if max_length is None else max_length
    budget_bits = settings.memory_budget_bits() if budget_bits is None else budget_bits
    if q.L > max_length:
        raise ResourceRefusal(f"word length {q.L} exceeds the configured limit {max_length}", limit="L")
    needed = 2 * window_vertex_count(q) * (1 << q.L)
    if needed > budget_bits:
        raise ResourceRefusal(
            f"2 * vertices * 2^L = {needed} bits exceeds the budget of {budget_bits} bits",
            limit="2 * vertices * 2^L",
        )


def _expand(env: Environment, box: Box, frontier: List[Vertex]) -> Dict[Vertex, List[Vertex]]:
    """Open out-neighbours inside `box` for a batch of vertices"""
    d = env.params.d
    succ: Dict[Vertex, List[Vertex]] = {v: [] for v in frontier}
    if not frontier:
        return succ
    bases = np.asarray(frontier, dtype=np.int64).reshape(-1, d)
    for i, w in enumerate(box.widths):
        fits = bases[:, i] + 1 <= w
        cand = bases[fits]
        if len(cand) == 0:
            continue
        opened = env.open_mask(cand, i + 1, 1)
        for row in cand[opened]:
            v = tuple(int(x) for x in row)
            u = list(v)
            u[i] += 1
            succ[v].append(tuple(u))
    K = env.params.K
    if K > 0:
        reps = np.repeat(bases, K, axis=0)
        lengths = np.tile(np.arange(1, K + 1, dtype=np.int64), len(bases))
        fits = np.ones(len(reps), dtype=bool)
        if box.height is not None:
            fits = reps[:, -1] + lengths <= box.height
        reps, lengths = reps[fits], lengths[fits]
        if len(reps):
            opened = env.open_mask(reps, d, lengths)
            for row, n in zip(reps[opened], lengths[opened]):
                v = tuple(int(x) for x in row)
                succ[v].append(v[:-1] + (v[-1] + int(n),))
    return succ


@dataclass
class _Layers:
    layers: List[List[Vertex]] = field(default_factory=list)
    succ: Dict[Vertex, List[Vertex]] = field(default_factory=dict)
    label: Dict[Vertex, int] = field(default_factory=dict)


def _forward_layers(q: SeenQuery) -> _Layers:
    """Vertices reachable from the origin in exactly l open steps, l = 0..L"""
    out = _Layers(layers=[[q.origin]])
    for _ in range(q.L):
        todo = [v for v in out.layers[-1] if v not in out.succ]
        out.succ.update(_expand(q.env, q.box, todo))
        nxt = {u for v in out.layers[-1] for u in out.succ[v]}
        out.layers.append(sorted(nxt))
        if not nxt:
            break
    labelled = sorted({v for layer in out.layers[1:] for v in layer})
    if labelled:
        bits = q.sites.labels(np.asarray(labelled, dtype=np.int64))
        out.label = {v: int(b) for v, b in zip(labelled, bits)}
    return out


def seen_words(q: SeenQuery, max_length: Optional[int] = None, budget_bits: Optional[int] = None) -> WordSet:
    """
    All length-L words seen from q.origin inside q.box.

    T^(0)_v = {empty word}; T^(r)_v = union over open (v, u) of
    extend(label(u), T^(r-1)_u). Only vertices reachable from the origin in
    exactly L - r steps carry a layer-r set; two layers are held at a time.
    """
    _check_guards(q, max_length, budget_bits)
    fw = _forward_layers(q)
    if len(fw.layers) <= q.L:
        return WordSet.empty(q.L)
    current: Dict[Vertex, int] = {v: 1 for v in fw.layers[q.L]}
    for r in range(1, q.L + 1):
        layer = fw.layers[q.L - r]
        nxt: Dict[Vertex, int] = {}
        for v in layer:
            bitmap = 0
            for u in fw.succ.get(v, ()):
                t = current.get(u, 0)
                if t:
                    bitmap |= t << (fw.label[u] << (r - 1))
            nxt[v] = bitmap
        current = nxt
    return WordSet(q.L, current.get(q.origin, 0))


def sees_word(q: SeenQuery, xi: Word) -> bool:
    """Frontier search keeping only vertices whose letter matches xi at each layer"""
    if len(xi) != q.L:
        raise DomainError(f"word of length {len(xi)} queried against L = {q.L}")
    frontier = {q.origin}
    for letter in xi.bits:
        nxt = set()
        for v in frontier:
            for e in q.env.open_out_edges(v, q.box):
                u = e.head
                if u not in nxt and q.sites.site_label(u) == letter:
                    nxt.add(u)
        if not nxt:
            return False
        frontier = nxt
    return True


def brute_force_seen(q: SeenQuery, path_limit: int = BRUTE_FORCE_PATH_LIMIT) -> WordSet:
    """Enumerate every oriented open path of length L and collect its letters"""
    neighbours: Dict[Vertex, List[Vertex]] = {}
    bitmap = 0
    enumerated = 0
    stack: List[Tuple[Vertex, int, int]] = [(q.origin, 0, 0)]
    while stack:
        v, depth, idx = stack.pop()
        enumerated += 1
        if enumerated > path_limit:
            raise ResourceRefusal(f"more than {path_limit} partial paths enumerated", limit="paths")
        if depth == q.L:
            bitmap |= 1 << idx
            continue
        if v not in neighbours:
            neighbours[v] = [e.head for e in q.env.open_out_edges(v, q.box)]
        for u in neighbours[v]:
            stack.append((u, depth + 1, (idx << 1) | q.sites.site_label(u)))
    return WordSet(q.L, bitmap)


def witness_is_seen(env: Environment, sites: SiteField, path: Sequence[Vertex], xi: Word) -> bool:
    """Check a concrete path: open edges between consecutive vertices and matching letters"""
    if len(path) != len(xi) + 1:
        return False
    for k in range(1, len(path)):
        v, u = path[k - 1], path[k]
        diff = [b - a for a, b in zip(v, u)]
        moved = [i for i, x in enumerate(diff) if x != 0]
        if len(moved) != 1 or diff[moved[0]] < 1:
            return False
        i = moved[0]
        if not env.edge_open(Edge(tuple(v), i + 1, diff[i])):
            return False
        if sites.site_label(u) != xi[k - 1]:
            return False
    return True
