"""Finite simple graphs: representation, generators and boundary/volume primitives.

Graphs are immutable after construction.  Vertices are the integers
``0..n-1``; adjacency is stored CSR-style (``indptr``/``indices``) with sorted
neighbor lists, and every constructor validates symmetry, simplicity and
connectivity up front so downstream code never has to re-check.
"""

from __future__ import annotations

import itertools
import random
import sys
from collections import deque
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    BudgetExceededError,
    ConnectivityError,
    DomainError,
    EdgeListParseError,
    GenerationError,
    SizeCapError,
)

DEFAULT_VERTEX_CAP = 1 << 17


class Graph:
    """Connected simple undirected graph with contiguous integer vertices."""

    __slots__ = (
        "vertex_count",
        "indptr",
        "indices",
        "degrees",
        "max_degree",
        "edge_count",
        "vertex_transitive",
        "original_labels",
        "_cache",
    )

    def __init__(self, neighbor_lists: Sequence[Sequence[int]], *,
                 vertex_transitive: bool = False,
                 original_labels: Sequence[object] | None = None):
        n = len(neighbor_lists)
        if n == 0:
            raise DomainError("graph must have at least one vertex")
        indptr = np.zeros(n + 1, dtype=np.int64)
        flat: list[int] = []
        neighbor_sets = []
        for v, nbrs in enumerate(neighbor_lists):
            s = sorted(nbrs)
            for w in s:
                if w == v:
                    raise DomainError(f"self-loop at vertex {v}")
                if not 0 <= w < n:
                    raise DomainError(f"neighbor {w} of vertex {v} out of range")
            if len(set(s)) != len(s):
                raise DomainError(f"parallel edge at vertex {v}")
            flat.extend(s)
            neighbor_sets.append(frozenset(s))
            indptr[v + 1] = len(flat)
        for v, nbrs in enumerate(neighbor_sets):
            for w in nbrs:
                if v not in neighbor_sets[w]:
                    raise DomainError(f"asymmetric adjacency between {v} and {w}")
        self.vertex_count = n
        self.indptr = indptr
        self.indices = np.asarray(flat, dtype=np.int64)
        self.degrees = np.diff(indptr).astype(np.int64)
        if n > 1 and self.degrees.min() == 0:
            raise ConnectivityError("isolated vertex")
        self.max_degree = int(self.degrees.max()) if n > 0 else 0
        self.edge_count = int(self.degrees.sum()) // 2
        self.vertex_transitive = vertex_transitive
        self.original_labels = list(original_labels) if original_labels is not None else None
        self._cache: dict = {}
        self._check_connected()

    def _check_connected(self):
        seen = np.zeros(self.vertex_count, dtype=bool)
        seen[0] = True
        queue = deque([0])
        count = 1
        while queue:
            v = queue.popleft()
            for w in self.neighbors(v):
                if not seen[w]:
                    seen[w] = True
                    count += 1
                    queue.append(int(w))
        if count != self.vertex_count:
            raise ConnectivityError(
                f"graph not connected: reached {count} of {self.vertex_count} vertices")

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def degree(self, v: int) -> int:
        return int(self.degrees[v])

    def edges(self):
        """Iterate undirected edges as (u, v) with u < v."""
        for u in range(self.vertex_count):
            for w in self.neighbors(u):
                if u < w:
                    yield u, int(w)

    def edge_array(self) -> np.ndarray:
        """All undirected edges as an (E, 2) array, cached."""
        arr = self._cache.get("edge_array")
        if arr is None:
            arr = np.array(list(self.edges()), dtype=np.int64).reshape(-1, 2)
            self._cache["edge_array"] = arr
        return arr

    def has_edge(self, u: int, v: int) -> bool:
        nbrs = self.neighbors(u)
        i = np.searchsorted(nbrs, v)
        return i < len(nbrs) and nbrs[i] == v

    def total_volume(self) -> int:
        return int(self.degrees.sum())

    def __repr__(self):
        return f"Graph(|V|={self.vertex_count}, |E|={self.edge_count}, M={self.max_degree})"


def _graph_from_edges(n: int, edges: Iterable[tuple[int, int]], **kw) -> Graph:
    lists: list[list[int]] = [[] for _ in range(n)]
    for u, v in edges:
        lists[u].append(v)
        lists[v].append(u)
    return Graph(lists, **kw)


def _check_cap(n_vertices: int, vertex_cap: int):
    if n_vertices > vertex_cap:
        raise SizeCapError(f"{n_vertices} vertices exceeds cap {vertex_cap}")


def torus(side_lengths: Sequence[int], *, vertex_cap: int = DEFAULT_VERTEX_CAP) -> Graph:
    """Discrete torus (product of cycles); degree 2*len(side_lengths) everywhere."""
    sides = [int(s) for s in side_lengths]
    if not sides or any(s < 3 for s in sides):
        raise DomainError(f"torus sides must all be >= 3, got {sides}")
    n = 1
    for s in sides:
        n *= s
    _check_cap(n, vertex_cap)
    strides = []
    acc = 1
    for s in reversed(sides):
        strides.append(acc)
        acc *= s
    strides.reverse()

    def vid(coords):
        return sum(c * st for c, st in zip(coords, strides))

    edges = []
    for flat in range(n):
        coords = []
        rem = flat
        for st, s in zip(strides, sides):
            coords.append((rem // st) % s)
            rem %= st
        for axis, s in enumerate(sides):
            up = list(coords)
            up[axis] = (up[axis] + 1) % s
            edges.append((flat, vid(up)))
    # each edge appears once from its lower endpoint along the +1 direction
    dedup = {(min(u, v), max(u, v)) for u, v in edges}
    return _graph_from_edges(n, sorted(dedup), vertex_transitive=True)


def cycle(n: int, *, vertex_cap: int = DEFAULT_VERTEX_CAP) -> Graph:
    """Cycle C_n, the one-dimensional torus."""
    return torus([n], vertex_cap=vertex_cap)


def hypercube(d: int, *, vertex_cap: int = DEFAULT_VERTEX_CAP) -> Graph:
    """Hamming cube {0,1}^d with bit-flip edges."""
    if not 1 <= d <= 20:
        raise DomainError(f"hypercube dimension must be in 1..20, got {d}")
    n = 1 << d
    _check_cap(n, vertex_cap)
    edges = [(v, v ^ (1 << b)) for v in range(n) for b in range(d) if v < v ^ (1 << b)]
    return _graph_from_edges(n, edges, vertex_transitive=True)


def complete(n: int, *, vertex_cap: int = DEFAULT_VERTEX_CAP) -> Graph:
    """Complete graph K_n."""
    if n < 2:
        raise DomainError("complete graph needs n >= 2")
    _check_cap(n, vertex_cap)
    return _graph_from_edges(n, itertools.combinations(range(n), 2), vertex_transitive=True)


def lamplighter_cycle(n: int, *, vertex_cap: int = DEFAULT_VERTEX_CAP) -> Graph:
    """Cayley-style lamplighter graph over a length-n cycle.

    Vertices are (lamp configuration in {0,1}^n, position in Z_n); moves are
    "toggle the lamp at the current position" or "step the position by +-1",
    so the graph is 3-regular and vertex-transitive.  Vertex ids are
    ``mask * n + pos`` with lamp i stored in bit i of ``mask``.
    """
    if n < 3:
        raise DomainError("lamplighter base cycle needs n >= 3")
    total = n * (1 << n)
    _check_cap(total, vertex_cap)

    def vid(mask, pos):
        return mask * n + pos

    edges = set()
    for mask in range(1 << n):
        for pos in range(n):
            me = vid(mask, pos)
            for other in (vid(mask ^ (1 << pos), pos),
                          vid(mask, (pos + 1) % n),
                          vid(mask, (pos - 1) % n)):
                edges.add((min(me, other), max(me, other)))
    return _graph_from_edges(total, sorted(edges), vertex_transitive=True)


def lamplighter_vertex_id(n: int, lamps: str, pos: int) -> int:
    """Vertex id for a lamp string like "010" (lamp i = character i) and position."""
    mask = 0
    for i, ch in enumerate(lamps):
        if ch == "1":
            mask |= 1 << i
    return mask * n + pos


def random_regular(n: int, d: int, seed: int, *, vertex_cap: int = DEFAULT_VERTEX_CAP,
                   max_tries: int = 500) -> Graph:
    """Uniform-ish d-regular simple connected graph via pairing-model resampling."""
    if n * d % 2 != 0:
        raise DomainError(f"n*d must be even, got n={n}, d={d}")
    if not 0 < d < n:
        raise DomainError(f"need 0 < d < n, got n={n}, d={d}")
    _check_cap(n, vertex_cap)
    rng = random.Random(seed)
    for _ in range(max_tries):
        stubs = [v for v in range(n) for _ in range(d)]
        rng.shuffle(stubs)
        pairs = [(stubs[2 * i], stubs[2 * i + 1]) for i in range(len(stubs) // 2)]
        seen = set()
        ok = True
        for u, v in pairs:
            if u == v or (min(u, v), max(u, v)) in seen:
                ok = False
                break
            seen.add((min(u, v), max(u, v)))
        if not ok:
            continue
        try:
            return _graph_from_edges(n, sorted(seen))
        except ConnectivityError:
            continue
    raise GenerationError(
        f"no simple connected {d}-regular graph on {n} vertices found in {max_tries} tries")


def load_edge_list(text: str) -> Graph:
    """Parse "u v" lines ('#' comments, blank lines ok) into a relabeled graph.

    Original ids are kept, sorted, in ``Graph.original_labels``.
    """
    edges: list[tuple[int, int]] = []
    ids: set[int] = set()
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise EdgeListParseError(line_no, f"expected 'u v', got {raw!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise EdgeListParseError(line_no, f"non-integer vertex id in {raw!r}") from None
        if u < 0 or v < 0:
            raise EdgeListParseError(line_no, "vertex ids must be nonnegative")
        if u == v:
            raise EdgeListParseError(line_no, f"self-loop at {u}")
        ids.update((u, v))
        edges.append((u, v))
    if not edges:
        raise DomainError("edge list is empty")
    labels = sorted(ids)
    relabel = {orig: i for i, orig in enumerate(labels)}
    seen = set()
    for line_no, (u, v) in enumerate(edges):
        key = (min(u, v), max(u, v))
        if key in seen:
            raise DomainError(f"duplicate edge {u} {v}")
        seen.add(key)
    final = [(relabel[u], relabel[v]) for u, v in edges]
    return _graph_from_edges(len(labels), final, original_labels=labels)


def to_edge_list(g: Graph) -> str:
    lines = [f"{u} {v}" for u, v in g.edges()]
    return "\n".join(lines) + "\n"


def bfs_distances(g: Graph, x: int) -> np.ndarray:
    """Exact graph distances from x to every vertex (int32)."""
    if not 0 <= x < g.vertex_count:
        raise DomainError(f"vertex {x} out of range")
    dist = np.full(g.vertex_count, -1, dtype=np.int32)
    dist[x] = 0
    queue = deque([x])
    indptr, indices = g.indptr, g.indices
    while queue:
        v = queue.popleft()
        dv = dist[v]
        for w in indices[indptr[v]:indptr[v + 1]]:
            if dist[w] < 0:
                dist[w] = dv + 1
                queue.append(int(w))
    return dist


def distance_matrix(g: Graph) -> np.ndarray:
    """All-pairs BFS distance matrix (V x V int32), cached on the graph."""
    mat = g._cache.get("distance_matrix")
    if mat is None:
        mat = np.vstack([bfs_distances(g, x) for x in range(g.vertex_count)])
        g._cache["distance_matrix"] = mat
    return mat


class VertexSet:
    """Vertex subset with eagerly cached volume and boundary-edge count."""

    __slots__ = ("vertices", "_members", "volume", "boundary_edges")

    def __init__(self, g: Graph, members: Iterable[int]):
        vs = sorted(set(int(v) for v in members))
        for v in vs:
            if not 0 <= v < g.vertex_count:
                raise DomainError(f"vertex {v} out of range")
        member_mask = np.zeros(g.vertex_count, dtype=bool)
        member_mask[vs] = True
        self.vertices = tuple(vs)
        self._members = frozenset(vs)
        self.volume = int(g.degrees[vs].sum()) if vs else 0
        boundary = 0
        for v in vs:
            boundary += int(np.count_nonzero(~member_mask[g.neighbors(v)]))
        self.boundary_edges = boundary

    def __len__(self):
        return len(self.vertices)

    def __contains__(self, v):
        return v in self._members


def boundary_volume_ratio(g: Graph, W: VertexSet | Iterable[int]) -> Fraction:
    """Exact |boundary(W)| / volume(W)."""
    if not isinstance(W, VertexSet):
        W = VertexSet(g, W)
    if len(W) == 0:
        raise DomainError("boundary/volume ratio of the empty set")
    return Fraction(W.boundary_edges, W.volume)


def _subset_stats(g: Graph, members: set[int]) -> tuple[int, int]:
    vol = 0
    boundary = 0
    for v in members:
        vol += g.degree(v)
        for w in g.neighbors(v):
            if int(w) not in members:
                boundary += 1
    return vol, boundary


def isoperimetric_profile_bruteforce(
    g: Graph,
    volume_cap: int,
    *,
    method: str = "connected",
    budget: int = 2_000_000,
) -> dict[int, Fraction | None]:
    """Exact isoperimetric profile: minimal boundary/volume ratio by volume bound.

    Returns ``{n: min ratio over sets of volume <= n}`` for ``n = 1..volume_cap``
    (``None`` where no set fits).  ``method="connected"`` enumerates connected
    subsets only, which is sufficient: a disconnected minimizer splits into
    components and the mediant inequality shows some component does at least
    as well at no more volume.  ``method="exhaustive"`` (vertex_count <= 22)
    checks every nonempty subset and serves as the validation oracle.
    """
    if volume_cap < 1:
        raise DomainError("volume_cap must be >= 1")
    best_by_volume: dict[int, Fraction] = {}

    def record(vol: int, boundary: int):
        if vol <= volume_cap:
            r = Fraction(boundary, vol)
            prev = best_by_volume.get(vol)
            if prev is None or r < prev:
                best_by_volume[vol] = r

    if method == "exhaustive":
        n = g.vertex_count
        if n > 22:
            raise BudgetExceededError("exhaustive profile limited to 22 vertices")
        if (1 << n) > budget:
            raise BudgetExceededError(f"2^{n} subsets exceeds budget {budget}")
        for mask in range(1, 1 << n):
            members = {v for v in range(n) if mask >> v & 1}
            vol, boundary = _subset_stats(g, members)
            record(vol, boundary)
    elif method == "connected":
        examined = 0
        sys_limit = g.vertex_count + 64

        def extend(members: set[int], frontier: list[int], banned: set[int],
                   vol: int, boundary: int):
            nonlocal examined
            examined += 1
            if examined > budget:
                raise BudgetExceededError(
                    f"connected-subset enumeration exceeded budget {budget}")
            record(vol, boundary)
            local_banned = set(banned)
            for i, u in enumerate(frontier):
                if u in local_banned:
                    continue
                du = g.degree(u)
                added_vol = vol + du
                if added_vol > volume_cap:
                    local_banned.add(u)
                    continue
                inside = sum(1 for w in g.neighbors(u) if int(w) in members)
                new_boundary = boundary - inside + (du - inside)
                new_frontier = frontier[i + 1:] + [
                    int(w) for w in g.neighbors(u)
                    if int(w) not in members and int(w) not in local_banned
                    and int(w) not in frontier
                ]
                members.add(u)
                extend(members, new_frontier, local_banned, added_vol, new_boundary)
                members.remove(u)
                local_banned.add(u)

        old_limit = sys.getrecursionlimit()
        sys.setrecursionlimit(max(old_limit, 10_000 + sys_limit))
        try:
            for root in range(g.vertex_count):
                dr = g.degree(root)
                if dr > volume_cap:
                    continue
                extend({root}, [int(w) for w in g.neighbors(root) if int(w) > root],
                       {v for v in range(root)}, dr, dr)
        finally:
            sys.setrecursionlimit(old_limit)
    else:
        raise DomainError(f"unknown method {method!r}")

    profile: dict[int, Fraction | None] = {}
    best: Fraction | None = None
    for n in range(1, volume_cap + 1):
        r = best_by_volume.get(n)
        if r is not None and (best is None or r < best):
            best = r
        profile[n] = best
    return profile
