"""Simultaneous coupling of conditioned endpoint laws and the induced partition.

Every vertex x carries the n-step law conditioned on its "good event" (the
endpoint is within lambda * D*_n of x and has information at most
lambda * (H*_n + log(n+1))).  One shared stream of proposals (Z_k uniform on
V, U_k uniform on [0, c*]) couples all of them at once: chain x accepts the
first k with U_k <= nu_x(Z_k).  Cells of the partition are the groups of
vertices that accepted at the same proposal index; two chains agree in this
sense with probability exactly sum(min) / sum(max) of their densities, which
realizes the pairwise near-optimal coupling guarantee with equality (sharing
only the accepted *vertex* would sometimes do strictly better through
accidental later collisions, destroying exactness of the formula).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import DegeneracyError, DomainError, NumericError
from .graphs import Graph, VertexSet, distance_matrix
from .report import AuditCheck
from .tails import endpoint_tail_rate
from .walks import ProfileTable, full_profile

CALIBRATION_C_CAP = 1e6


@dataclass
class GoodEventLaw:
    """Endpoint law of one vertex conditioned on its displacement/information caps."""

    x: int
    n: int
    lam: float
    support: np.ndarray
    masses: np.ndarray
    bad_mass: float
    d_cap: float
    log_n_cap: float

    def dense(self, vertex_count: int) -> np.ndarray:
        vec = np.zeros(vertex_count)
        vec[self.support] = self.masses
        return vec


@dataclass
class LawFamily:
    """All conditioned laws of a graph at one (n, lambda), in matrix form."""

    graph: Graph
    n: int
    lam: float
    matrix: np.ndarray          # (V, V); row x = nu_x
    bad_mass: np.ndarray        # (V,)
    d_cap: float
    log_n_cap: float

    @property
    def envelope(self) -> float:
        return float(self.matrix.max())

    def law(self, x: int) -> GoodEventLaw:
        support = np.flatnonzero(self.matrix[x])
        return GoodEventLaw(x, self.n, self.lam, support, self.matrix[x, support],
                            float(self.bad_mass[x]), self.d_cap, self.log_n_cap)


def good_event_law(g: Graph, x: int, n: int, lam: float, profile: ProfileTable,
                   row: np.ndarray) -> GoodEventLaw:
    """Condition the n-step law from x on its good event and renormalize."""
    family_row, bad = _condition_row(g, x, n, lam, profile, row)
    support = np.flatnonzero(family_row)
    return GoodEventLaw(
        x, n, lam, support, family_row[support], bad,
        d_cap=lam * float(profile.dstar[n]),
        log_n_cap=lam * (float(profile.hstar[n]) + math.log(n + 1)),
    )


def _condition_row(g: Graph, x: int, n: int, lam: float, profile: ProfileTable,
                   row: np.ndarray):
    d_cap = lam * float(profile.dstar[n])
    log_cap = lam * (float(profile.hstar[n]) + math.log(n + 1))
    dist = distance_matrix(g)[x]
    good = (dist <= d_cap) & (dist <= n) & (row > 0)
    idx = np.flatnonzero(good)
    keep = idx[-np.log(row[idx]) <= log_cap]
    good = np.zeros_like(good)
    good[keep] = True
    mass = float(row[good].sum())
    if mass <= 0:
        raise DegeneracyError(f"good event at x={x} has zero mass (lambda={lam})")
    out = np.where(good, row, 0.0) / mass
    return out, 1.0 - mass


def law_family(g: Graph, n: int, lam: float, profile: ProfileTable,
               rows: np.ndarray) -> LawFamily:
    matrix = np.zeros_like(rows)
    bad = np.zeros(g.vertex_count)
    for x in range(g.vertex_count):
        matrix[x], bad[x] = _condition_row(g, x, n, lam, profile, rows[x])
    return LawFamily(
        g, n, lam, matrix, bad,
        d_cap=lam * float(profile.dstar[n]),
        log_n_cap=lam * (float(profile.hstar[n]) + math.log(n + 1)),
    )


def coupling_pairwise_exact(p, q):
    """Disagreement probability 1 - sum(min)/sum(max) of the shared-proposal coupling.

    Exact ``Fraction`` when given rational densities; float for float arrays.
    Always equals 2 TV / (1 + TV) for probability vectors.
    """
    if isinstance(p, np.ndarray) or isinstance(q, np.ndarray):
        smin = float(np.minimum(p, q).sum())
        smax = float(np.maximum(p, q).sum())
        return 1.0 - smin / smax
    p = [Fraction(v) for v in p]
    q = [Fraction(v) for v in q]
    smin = sum((a if a < b else b for a, b in zip(p, q)), Fraction(0))
    smax = sum((a if a > b else b for a, b in zip(p, q)), Fraction(0))
    return 1 - Fraction(smin, smax)


def pairwise_disagreement_mc(p, q, n_seeds: int, seed) -> float:
    """Empirical frequency of the two chains accepting at different proposals.

    Vectorized across seeds: batches of shared proposals are drawn until every
    seed has both chains accepted.  Matches ``coupling_pairwise_exact(p, q)``
    in expectation.
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise DomainError("densities live on different spaces")
    V = p.shape[0]
    c_star = float(max(p.max(), q.max()))
    rng = np.random.default_rng(seed)
    kp = np.full(n_seeds, -1, dtype=np.int64)  # acceptance index of chain p
    kq = np.full(n_seeds, -1, dtype=np.int64)
    unresolved = np.arange(n_seeds)
    offset = 0
    batch = 32
    while unresolved.size:
        z = rng.integers(0, V, size=(unresolved.size, batch))
        u = rng.random((unresolved.size, batch)) * c_star
        acc_p = u <= p[z]
        acc_q = u <= q[z]
        first_p = np.where(acc_p.any(axis=1), acc_p.argmax(axis=1), -1)
        first_q = np.where(acc_q.any(axis=1), acc_q.argmax(axis=1), -1)
        need_p = kp[unresolved] < 0
        got_p = need_p & (first_p >= 0)
        kp[unresolved[got_p]] = offset + first_p[got_p]
        need_q = kq[unresolved] < 0
        got_q = need_q & (first_q >= 0)
        kq[unresolved[got_q]] = offset + first_q[got_q]
        unresolved = unresolved[(kp[unresolved] < 0) | (kq[unresolved] < 0)]
        offset += batch
    return float((kp != kq).mean())


@dataclass
class CouplingSample:
    """One joint draw of every conditioned endpoint, plus the induced partition."""

    seed: object
    endpoints: np.ndarray      # vertex accepted by each source
    accept_index: np.ndarray   # proposal index at which each source accepted
    cells: list[np.ndarray]    # partition of V by shared acceptance index
    sigmas: list[int]          # common endpoint vertex of each cell
    family: LawFamily = field(repr=False)

    def cell_of(self, x: int) -> np.ndarray:
        idx = self._cell_index()
        return self.cells[idx[x]]

    def _cell_index(self) -> np.ndarray:
        idx = getattr(self, "_cell_index_cache", None)
        if idx is None:
            idx = np.empty(len(self.endpoints), dtype=np.int64)
            for i, cell in enumerate(self.cells):
                idx[cell] = i
            object.__setattr__(self, "_cell_index_cache", idx)
        return idx


def simultaneous_coupling(family: LawFamily, seed, *,
                          max_proposals: int = 2_000_000) -> CouplingSample:
    """Couple every law through one shared proposal stream (deterministic in seed)."""
    g = family.graph
    V = g.vertex_count
    c_star = family.envelope
    rng = np.random.default_rng(seed)
    accept_index = np.full(V, -1, dtype=np.int64)
    endpoints = np.full(V, -1, dtype=np.int64)
    remaining = np.arange(V)
    k = 0
    while remaining.size:
        if k >= max_proposals:
            raise NumericError(f"coupling did not finish within {max_proposals} proposals")
        z = int(rng.integers(0, V))
        u = rng.random() * c_star
        hit = family.matrix[remaining, z] >= u
        if np.any(hit):
            taken = remaining[hit]
            accept_index[taken] = k
            endpoints[taken] = z
            remaining = remaining[~hit]
        k += 1
    order = {}
    for x in range(V):
        order.setdefault(int(accept_index[x]), []).append(x)
    cells = []
    sigmas = []
    for kk in sorted(order):
        members = np.array(order[kk], dtype=np.int64)
        cells.append(members)
        sigmas.append(int(endpoints[members[0]]))
    return CouplingSample(seed, endpoints, accept_index, cells, sigmas, family)


def verify_sample_bounds(sample: CouplingSample) -> list[str]:
    """Hard per-sample constraints: cell diameter and cell size caps."""
    family = sample.family
    g = family.graph
    dm = distance_matrix(g)
    diam_cap = min(2 * family.n, 2 * family.d_cap)
    violations = []
    for members, sigma in zip(sample.cells, sample.sigmas):
        sub = dm[np.ix_(members, members)]
        diam = int(sub.max()) if members.size > 1 else 0
        if diam > diam_cap:
            violations.append(f"cell at sigma={sigma}: diameter {diam} > {diam_cap}")
        if math.log(members.size) > family.log_n_cap:
            violations.append(
                f"cell at sigma={sigma}: size {members.size} exceeds exp({family.log_n_cap})")
    return violations


def tv_conditioning_audit(p, q, A, B) -> AuditCheck:
    """Exact check of ||p|_A - q|_B|| <= ||p - q|| + p(A^c) + q(B^c)."""
    p = [Fraction(v) for v in p]
    q = [Fraction(v) for v in q]
    if len(p) != len(q):
        raise DomainError("distributions live on different spaces")
    A, B = set(A), set(B)
    pa = sum((p[i] for i in A), Fraction(0))
    qb = sum((q[i] for i in B), Fraction(0))
    if pa == 0 or qb == 0:
        raise DomainError("conditioning event has zero mass")
    p_cond = [p[i] / pa if i in A else Fraction(0) for i in range(len(p))]
    q_cond = [q[i] / qb if i in B else Fraction(0) for i in range(len(q))]
    tv = lambda u, v: sum((abs(a - b) for a, b in zip(u, v)), Fraction(0)) / 2  # noqa: E731
    lhs = tv(p_cond, q_cond)
    rhs = tv(p, q) + (1 - pa) + (1 - qb)
    return AuditCheck(
        statement="tv_conditioning",
        params={"p_mass_A": float(pa), "q_mass_B": float(qb)},
        lhs=lhs, rhs=rhs, passed=lhs <= rhs,
    )


def tvtilde_exact(family: LawFamily) -> tuple[float, np.ndarray]:
    """Max over edges of the exact pairwise disagreement, plus per-edge values."""
    edges = family.graph.edge_array()
    mat = family.matrix
    smin = np.minimum(mat[edges[:, 0]], mat[edges[:, 1]]).sum(axis=1)
    smax = np.maximum(mat[edges[:, 0]], mat[edges[:, 1]]).sum(axis=1)
    per_edge = 1.0 - smin / smax
    return float(per_edge.max()), per_edge


def tvtilde_empirical(family: LawFamily, n_seeds: int, root_seed: int = 0) -> float:
    """Max over edges of the observed disagreement frequency across seeds."""
    edges = family.graph.edge_array()
    disagree = np.zeros(len(edges), dtype=np.int64)
    for i in range(n_seeds):
        sample = simultaneous_coupling(family, seed=(root_seed, i))
        k = sample.accept_index
        disagree += k[edges[:, 0]] != k[edges[:, 1]]
    return float(disagree.max() / n_seeds)


def audit_tvtilde(family: LawFamily, tv_n: float) -> AuditCheck:
    """T~V <= 2 TV_n + 2 max_x P(bad event), with the exact left-hand side."""
    value, _ = tvtilde_exact(family)
    bound = 2 * tv_n + 2 * float(family.bad_mass.max())
    return AuditCheck(
        statement="tvtilde_vs_tv",
        params={"n": family.n, "lambda": family.lam, "tv_n": tv_n,
                "max_bad_mass": float(family.bad_mass.max())},
        lhs=value, rhs=bound, passed=value <= bound + 1e-12,
    )


def mtp_average(g: Graph, sample: CouplingSample, F=None) -> Fraction:
    """Degree-weighted average boundary/volume ratio of cells clipped to F.

    (1/deg F) * sum over x in F of deg(x) * |d([x] cap F)| / deg([x] cap F);
    summing deg(x) over a clipped cell cancels its volume, so each cell
    contributes exactly its clipped boundary count.  The expectation of this
    average over the coupling is at most T~V + |dF|/deg(F).
    """
    if F is None:
        members_f = set(range(g.vertex_count))
    else:
        members_f = set(int(v) for v in (F.vertices if isinstance(F, VertexSet) else F))
    if not members_f:
        raise DomainError("F must be nonempty")
    deg_f = sum(g.degree(v) for v in members_f)
    total = 0
    for cell in sample.cells:
        clipped = [int(v) for v in cell if int(v) in members_f]
        if clipped:
            total += VertexSet(g, clipped).boundary_edges
    return Fraction(total, deg_f)


def mtp_ensemble(g: Graph, family: LawFamily, *, n_seeds: int, root_seed: int,
                 F=None) -> AuditCheck:
    """Monte-Carlo check that the mean MTP average stays below T~V (+3 SE)."""
    values = []
    for i in range(n_seeds):
        sample = simultaneous_coupling(family, seed=(root_seed, i))
        violations = verify_sample_bounds(sample)
        if violations:
            raise NumericError("; ".join(violations))
        values.append(float(mtp_average(g, sample, F=F)))
    values = np.array(values)
    tvt, _ = tvtilde_exact(family)
    mean = float(values.mean())
    se = float(values.std(ddof=1) / math.sqrt(n_seeds)) if n_seeds > 1 else 0.0
    boundary_term = 0.0
    if F is not None:
        vs = F if isinstance(F, VertexSet) else VertexSet(g, F)
        boundary_term = vs.boundary_edges / vs.volume
    rhs = tvt + boundary_term + 3 * se
    return AuditCheck(
        statement="mtp_ensemble_mean",
        params={"n": family.n, "lambda": family.lam, "seeds": n_seeds,
                "tvtilde": tvt, "stderr": se},
        lhs=mean, rhs=rhs, passed=mean <= rhs,
        witness={"per_seed_mean": mean, "per_seed_std": float(values.std(ddof=1))},
    )


@dataclass
class PartitionStats:
    """Per-cell geometry of one coupling sample plus the family-level summary."""

    cells: list[dict]          # vertices, sigma, diameter, size, volume, boundary, ratio
    tvtilde: float
    mtp_average: Fraction
    best_cell: dict            # cell of minimal boundary/volume ratio

    def to_json(self) -> dict:
        def enc(c):
            return {**c, "ratio": {"num": c["ratio"].numerator,
                                   "den": c["ratio"].denominator}}
        return {
            "cells": [enc(c) for c in self.cells],
            "tvtilde": self.tvtilde,
            "mtp_average": {"num": self.mtp_average.numerator,
                            "den": self.mtp_average.denominator},
            "best_cell": enc(self.best_cell),
        }


def partition_stats(g: Graph, sample: CouplingSample, F=None) -> PartitionStats:
    """Summarize a coupling sample: cell geometry, exact T~V, MTP average."""
    dm = distance_matrix(g)
    cells = []
    for members, sigma in zip(sample.cells, sample.sigmas):
        vs = VertexSet(g, members.tolist())
        cells.append({
            "vertices": [int(v) for v in members],
            "sigma": sigma,
            "diameter": int(dm[np.ix_(members, members)].max()) if members.size > 1 else 0,
            "size": int(members.size),
            "volume": vs.volume,
            "boundary": vs.boundary_edges,
            "ratio": Fraction(vs.boundary_edges, vs.volume),
        })
    total_volume = sum(c["volume"] for c in cells)
    if total_volume != g.total_volume():
        raise NumericError("cells do not partition the vertex set")
    tvt, _ = tvtilde_exact(sample.family)
    best = min(cells, key=lambda c: (c["ratio"], c["vertices"][0]))
    return PartitionStats(cells, tvt, mtp_average(g, sample, F=F), best)


def vacuity_lambda(g: Graph, n: int, profile: ProfileTable) -> float:
    """Smallest lambda making both good-event constraints vacuous (finite stand-in
    for lambda = infinity when TV_n = 0 or the calibration explodes)."""
    dstar = float(profile.dstar[n])
    hstar = float(profile.hstar[n])
    lam_d = n / dstar if dstar > 0 else 1.0
    info_cap = n * math.log(2 * g.max_degree) + 1.0
    lam_h = info_cap / (hstar + math.log(n + 1)) if hstar + math.log(n + 1) > 0 else 1.0
    return max(1.0, lam_d, lam_h)


@dataclass
class Certificate:
    """Outcome of the partition search for one (graph, n) configuration."""

    n: int
    lam: float
    tv_n: float
    calibration_c: float | None  # None when lambda was fixed directly
    passed: bool
    cell: dict | None
    bounds: dict
    seeds_tried: int
    vacuous: bool
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "lambda": self.lam,
            "tv_n": self.tv_n,
            "calibration_c": self.calibration_c,
            "cell": self.cell,
            "bounds": self.bounds,
            "pass": self.passed,
            "seeds_tried": self.seeds_tried,
            "vacuous": self.vacuous,
            "notes": self.notes,
        }


def partition_certificate(g: Graph, n: int, *, lam: float | None = None,
                          calibration_c: float | None = None,
                          n_seeds: int = 50, root_seed: int = 0, F=None,
                          profile: ProfileTable | None = None,
                          fit_lambdas=(1, 2, 4)) -> Certificate:
    """Search the coupling partition for a cell of ratio <= 4 TV_n.

    lambda = max(1, C log(1/TV_n)) with C defaulting to 3 / (fitted tail rate),
    both clamped at the vacuity threshold where the good-event constraints stop
    binding.  Cell diameter <= min(2n, 2 lambda D*_n) and log(size) <=
    lambda (H*_n + log(n+1)) are hard per-sample assertions; the certificate
    passes once some seed produces a qualifying cell.  With an explicit F the
    search scores cells clipped to F (the mass-transport average controls the
    clipped ratios once |dF|/deg(F) <= 2 TV_n; F = None means all of V).
    """
    if profile is None or "final_rows" not in profile.meta:
        profile = full_profile(g, n, keep_final_rows=True)
    stash = profile.meta["final_rows"]
    if stash["sources"] != list(range(g.vertex_count)):
        raise DomainError("certificate needs final rows for every source")
    rows = stash["matrix"]
    tv_n = float(profile.tv[n])
    notes = []
    lam_vac = vacuity_lambda(g, n, profile)
    if lam is not None:
        notes.append(f"lambda = {lam:.6g} fixed by caller")
    else:
        if calibration_c is None:
            c_hat = endpoint_tail_rate(g, n, fit_lambdas, profile=profile, rows=rows)
            calibration_c = 3.0 / c_hat if c_hat > 0 and math.isfinite(c_hat) \
                else CALIBRATION_C_CAP
            calibration_c = min(calibration_c, CALIBRATION_C_CAP)
            notes.append(f"calibration C = 3 / c_hat with fitted c_hat = {c_hat:.6g}")
        if tv_n > 0:
            lam = max(1.0, calibration_c * math.log(1.0 / tv_n))
        else:
            lam = math.inf
            notes.append("TV_n = 0; conditioning disabled via the vacuity lambda")
        if lam > lam_vac:
            lam = lam_vac
            notes.append(f"lambda clamped at vacuity threshold {lam_vac:.6g}")
    ratio_bound = 4 * tv_n
    if ratio_bound >= 1.0:
        notes.append("bound 4 TV_n >= 1 is vacuous; any cell qualifies")
    family = law_family(g, n, lam, profile, rows)
    diam_cap = min(2 * n, 2 * family.d_cap)

    f_members = None
    if F is not None:
        f_members = set(int(v) for v in (F.vertices if isinstance(F, VertexSet) else F))
        if not f_members:
            raise DomainError("F must be nonempty")

    best = None  # ((ratio float, min vertex), cell dict)
    seeds_tried = 0
    found = None
    dm = distance_matrix(g)
    for i in range(n_seeds):
        seeds_tried += 1
        sample = simultaneous_coupling(family, seed=(root_seed, i))
        violations = verify_sample_bounds(sample)
        if violations:
            raise NumericError("; ".join(violations))
        for cell, sigma in zip(sample.cells, sample.sigmas):
            if f_members is not None:
                cell = np.array([v for v in cell if int(v) in f_members], dtype=np.int64)
                if cell.size == 0:
                    continue
            vs = VertexSet(g, cell.tolist())
            ratio = Fraction(vs.boundary_edges, vs.volume)
            diam = int(dm[np.ix_(cell, cell)].max()) if cell.size > 1 else 0
            entry = {
                "vertices": [int(v) for v in cell],
                "sigma": sigma,
                "diameter": diam,
                "size": int(cell.size),
                "volume": vs.volume,
                "boundary": vs.boundary_edges,
                "ratio": {"num": ratio.numerator, "den": ratio.denominator},
                "seed_index": i,
            }
            key = (float(ratio), int(cell.min()))
            if best is None or key < best[0]:
                best = (key, entry)
            if float(ratio) <= ratio_bound and found is None:
                found = entry
        if found is not None:
            break
    bounds = {
        "ratio_bound": ratio_bound,
        "diam_bound": diam_cap,
        "log_size_bound": family.log_n_cap,
        "size_bound": math.exp(family.log_n_cap) if family.log_n_cap < 700 else None,
        "max_bad_mass": float(family.bad_mass.max()),
    }
    return Certificate(
        n=n, lam=lam, tv_n=tv_n, calibration_c=calibration_c,
        passed=found is not None,
        cell=found if found is not None else (best[1] if best else None),
        bounds=bounds, seeds_tried=seeds_tried,
        vacuous=ratio_bound >= 1.0, notes=notes,
    )
