"""Lazy simple random walk: exact step distributions and the three decay profiles.

The walk stays put with probability 1/2 and otherwise moves to a uniform
neighbor.  Float rows are propagated with scipy sparse kernels (numpy's
pairwise summation keeps the accumulation error near machine precision even
for large vertex counts); an exact ``Fraction`` row engine doubles as the
oracle on small graphs.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.sparse as sp

from .errors import BudgetExceededError, DomainError
from .graphs import Graph, bfs_distances, distance_matrix

MASS_TOL = 1e-12
EXACT_ENGINE_MAX_VERTICES = 64
ALL_PAIRS_TV_MAX_VERTICES = 4096


def kernel_transpose(g: Graph) -> sp.csr_array:
    """Transposed lazy transition kernel: (K @ vec)[z] = sum_w P(w, z) vec[w]."""
    kt = g._cache.get("kernel_transpose")
    if kt is None:
        n = g.vertex_count
        half = 0.5 / g.degrees.astype(np.float64)
        # entry (z, w) = P(w, z): 1/2 on the diagonal, 1/(2 deg w) for w ~ z
        rows = []
        cols = []
        data = []
        for w in range(n):
            nbrs = g.neighbors(w)
            rows.append(nbrs)
            cols.append(np.full(len(nbrs), w, dtype=np.int64))
            data.append(np.full(len(nbrs), half[w]))
        rows.append(np.arange(n))
        cols.append(np.arange(n))
        data.append(np.full(n, 0.5))
        kt = sp.csr_array(
            (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
            shape=(n, n),
        )
        g._cache["kernel_transpose"] = kt
    return kt


@dataclass
class DistributionRow:
    """One row P^m(x, .) of the iterated lazy kernel."""

    graph: Graph
    source: int
    step: int
    vec: np.ndarray

    def validate(self):
        total = float(self.vec.sum())
        if abs(total - 1.0) > MASS_TOL:
            raise DomainError(f"row mass {total} off by more than {MASS_TOL}")
        if float(self.vec.min()) < 0:
            raise DomainError("negative probability in row")
        return self


def point_mass(g: Graph, x: int) -> DistributionRow:
    vec = np.zeros(g.vertex_count)
    vec[x] = 1.0
    return DistributionRow(g, x, 0, vec)


def lazy_step(g: Graph, row: DistributionRow) -> DistributionRow:
    """One lazy-walk step: out(z) = row(z)/2 + sum_{w~z} row(w)/(2 deg w)."""
    vec = kernel_transpose(g) @ row.vec
    return DistributionRow(g, row.source, row.step + 1, vec).validate()


def distribution(g: Graph, x: int, n: int) -> list[DistributionRow]:
    """Rows P^m(x, .) for m = 0..n."""
    if n < 0:
        raise DomainError("n must be >= 0")
    rows = [point_mass(g, x)]
    for _ in range(n):
        rows.append(lazy_step(g, rows[-1]))
    return rows


def tv_distance(p: DistributionRow | np.ndarray, q: DistributionRow | np.ndarray) -> float:
    pv = p.vec if isinstance(p, DistributionRow) else p
    qv = q.vec if isinstance(q, DistributionRow) else q
    return 0.5 * float(np.abs(pv - qv).sum())


def exact_distribution(g: Graph, x: int, n: int) -> list[list[Fraction]]:
    """Exact-rational rows P^m(x, .) for m = 0..n (oracle; small graphs only)."""
    if g.vertex_count > EXACT_ENGINE_MAX_VERTICES:
        raise BudgetExceededError(
            f"exact row engine limited to {EXACT_ENGINE_MAX_VERTICES} vertices")
    row = [Fraction(0)] * g.vertex_count
    row[x] = Fraction(1)
    out = [row]
    for _ in range(n):
        row = exact_lazy_step(g, row)
        out.append(row)
    return out


def exact_lazy_step(g: Graph, row: list[Fraction]) -> list[Fraction]:
    nxt = [p / 2 for p in row]
    for w in range(g.vertex_count):
        if row[w]:
            share = row[w] / (2 * g.degree(w))
            for z in g.neighbors(w):
                nxt[z] += share
    assert sum(nxt) == 1
    return nxt


@dataclass
class ProfileTable:
    """Per-step profile values for m = 0..n; columns are None until computed.

    ``tv_mode`` records whether the TV column maximized over all neighbor
    pairs or only over a hinted orbit-representative pair.
    """

    n: int
    tv: np.ndarray | None = None
    dstar: np.ndarray | None = None
    hstar: np.ndarray | None = None
    tv_mode: str = "all-pairs"
    meta: dict = field(default_factory=dict)

    def merge(self, other: "ProfileTable") -> "ProfileTable":
        if other.n != self.n:
            raise DomainError("profile horizons differ")
        return ProfileTable(
            self.n,
            tv=self.tv if self.tv is not None else other.tv,
            dstar=self.dstar if self.dstar is not None else other.dstar,
            hstar=self.hstar if self.hstar is not None else other.hstar,
            tv_mode=self.tv_mode if self.tv is not None else other.tv_mode,
            meta={**other.meta, **self.meta},
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["m", "tv", "dstar", "hstar"])
        for m in range(self.n + 1):
            writer.writerow([
                m,
                "" if self.tv is None else repr(float(self.tv[m])),
                "" if self.dstar is None else repr(float(self.dstar[m])),
                "" if self.hstar is None else repr(float(self.hstar[m])),
            ])
        return buf.getvalue()


def _entropy_of_rows(mat: np.ndarray) -> np.ndarray:
    mask = mat > 0
    vals = np.zeros_like(mat)
    vals[mask] = mat[mask] * np.log(mat[mask])
    return -vals.sum(axis=1) + 0.0  # "+ 0.0" normalizes -0.0 at point masses


def full_profile(
    g: Graph,
    n: int,
    *,
    transitive_hint: tuple[int, int] | None = None,
    sources: list[int] | None = None,
    want_tv: bool = True,
    want_dstar: bool = True,
    want_hstar: bool = True,
    keep_final_rows: bool = False,
) -> ProfileTable:
    """Compute TV / displacement / entropy profiles in one pass over m = 0..n.

    Without a hint the TV column maximizes over every neighbor pair, which
    needs all-source rows (dense (V, V) iterate); with ``transitive_hint=(x, y)``
    the caller asserts vertex-transitivity with an edge-orbit representative
    pair and only those two source rows are propagated.  ``sources`` restricts
    the supremum in D*/H* (callers use a single source on transitive graphs).
    With ``keep_final_rows`` the propagated row matrix at m = n is stashed as
    ``meta["final_rows"] = {"sources": [...], "matrix": R}``.
    """
    if n < 1:
        raise DomainError("profile horizon must be >= 1")
    if transitive_hint is not None:
        x0, y0 = transitive_hint
        if not g.has_edge(x0, y0):
            raise DomainError(f"hint pair {transitive_hint} is not an edge")
        if not g.vertex_transitive:
            raise DomainError("transitive hint on a graph not marked vertex-transitive")
        tv_sources = [x0, y0]
    else:
        tv_sources = None
        if want_tv and g.vertex_count > ALL_PAIRS_TV_MAX_VERTICES:
            raise BudgetExceededError(
                f"all-pairs TV needs |V| <= {ALL_PAIRS_TV_MAX_VERTICES}; pass a hint")

    if sources is None:
        prof_sources = None  # all vertices
    else:
        prof_sources = sorted(set(sources))

    # Decide which source rows must be propagated.
    if want_tv and tv_sources is None:
        row_sources = list(range(g.vertex_count))
    else:
        needed = set(tv_sources or [])
        if want_dstar or want_hstar:
            needed.update(prof_sources if prof_sources is not None
                          else range(g.vertex_count))
        row_sources = sorted(needed)
    src_index = {x: i for i, x in enumerate(row_sources)}
    if len(row_sources) * g.vertex_count > 32_000_000:
        raise BudgetExceededError(
            "profile needs too many dense rows; restrict sources or pass a hint")

    kt = kernel_transpose(g)
    R = np.zeros((len(row_sources), g.vertex_count))
    for i, x in enumerate(row_sources):
        R[i, x] = 1.0

    if want_dstar:
        if prof_sources is None:
            dist_rows = distance_matrix(g)[row_sources].astype(np.float64)
            disp_rows = list(range(len(row_sources)))
        else:
            dist_rows = np.vstack([bfs_distances(g, x) for x in prof_sources]).astype(np.float64)
            disp_rows = [src_index[x] for x in prof_sources]
    tv = np.zeros(n + 1) if want_tv else None
    dstar = np.zeros(n + 1) if want_dstar else None
    hstar = np.zeros(n + 1) if want_hstar else None
    entropy_rows = ([src_index[x] for x in prof_sources]
                    if prof_sources is not None else list(range(len(row_sources))))

    if want_tv:
        if tv_sources is not None:
            pair_u = np.array([src_index[tv_sources[0]]])
            pair_v = np.array([src_index[tv_sources[1]]])
        else:
            e = g.edge_array()
            pair_u = e[:, 0]
            pair_v = e[:, 1]

    run_disp = None
    run_ent = None
    for m in range(n + 1):
        if m > 0:
            R = (kt @ R.T).T
        if want_tv:
            diffs = np.abs(R[pair_u] - R[pair_v]).sum(axis=1)
            tv[m] = 0.5 * float(diffs.max())
        if want_dstar:
            exp_d = (R[disp_rows] * dist_rows).sum(axis=1)
            run_disp = exp_d if run_disp is None else np.maximum(run_disp, exp_d)
            dstar[m] = float(run_disp.max())
        if want_hstar:
            ent = _entropy_of_rows(R[entropy_rows])
            run_ent = ent if run_ent is None else np.maximum(run_ent, ent)
            hstar[m] = float(run_ent.max())
    meta = {"graph_vertices": g.vertex_count, "max_degree": g.max_degree}
    if keep_final_rows:
        meta["final_rows"] = {"sources": list(row_sources), "matrix": R.copy()}
    return ProfileTable(
        n, tv=tv, dstar=dstar, hstar=hstar,
        tv_mode="hinted" if (want_tv and tv_sources is not None) else "all-pairs",
        meta=meta,
    )


def tv_profile(g: Graph, n: int, transitive_hint: tuple[int, int] | None = None) -> ProfileTable:
    """Worst-case TV distance between n-step laws of adjacent starts, per step."""
    return full_profile(g, n, transitive_hint=transitive_hint,
                        want_dstar=False, want_hstar=False)


def displacement_profile(g: Graph, n: int, sources: list[int] | None = None) -> ProfileTable:
    """Supremal running-max expected displacement of the walk."""
    return full_profile(g, n, sources=sources, want_tv=False, want_hstar=False)


def entropy_profile(g: Graph, n: int, sources: list[int] | None = None) -> ProfileTable:
    """Supremal running-max Shannon entropy (natural log) of the walk laws."""
    return full_profile(g, n, sources=sources, want_tv=False, want_dstar=False)


def row_matrix(g: Graph, n: int) -> np.ndarray:
    """Dense matrix P^n with rows indexed by source vertex."""
    kt = kernel_transpose(g)
    R = np.eye(g.vertex_count)
    for _ in range(n):
        R = (kt @ R.T).T
    return R


def sample_path(g: Graph, x: int, n: int, seed) -> list[int]:
    """Lazy-walk trajectory X_0..X_n, deterministic given the seed."""
    if n < 0:
        raise DomainError("n must be >= 0")
    rng = np.random.default_rng(seed)
    path = [x]
    v = x
    stays = rng.random(n)
    picks = rng.random(n)
    for i in range(n):
        if stays[i] >= 0.5:
            nbrs = g.neighbors(v)
            v = int(nbrs[int(picks[i] * len(nbrs))])
        path.append(v)
    return path


def entropy(vec: np.ndarray) -> float:
    mask = vec > 0
    return -float((vec[mask] * np.log(vec[mask])).sum())
