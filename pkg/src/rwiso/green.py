"""Massive Green kernel, walk information, and their comparison audits.

``G_t(u, v)`` is the probability that the lazy walk from u reaches v before an
independent geometric killing time with per-step survival ``q = 1 - 1/t``
(so the kernel solves h(v) = 1, h(u) = q * (P h)(u) for u != v, and
``G_t(u, v) = E_u[q^(hitting time of v)]``).  ``-log G_t`` then satisfies the
triangle inequality by supermultiplicativity, though it need not be symmetric
on irregular graphs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericError
from .graphs import Graph, bfs_distances
from .report import AuditCheck
from .walks import kernel_transpose, row_matrix

DIRECT_SOLVE_MAX_VERTICES = 200


@dataclass
class GreenKernel:
    """All-pairs massive Green kernel values for one survival parameter."""

    graph: Graph
    t: float
    q: float
    values: np.ndarray  # (V, V), entry [u, v] = G_t(u, v)

    def value(self, u: int, v: int) -> float:
        return float(self.values[u, v])

    def metric_rows(self, *, symmetrized: bool = False) -> np.ndarray:
        """-log G_t as source-indexed rows; requires t > 1 so values are positive."""
        if self.t <= 1:
            raise DomainError("the -log kernel metric needs t > 1")
        d = -np.log(self.values)
        np.fill_diagonal(d, 0.0)
        if symmetrized:
            d = np.maximum(d, d.T)
        return d


def green_kernel(g: Graph, t: float, *, method: str = "auto",
                 tol: float = 1e-12, max_iter: int = 200_000,
                 damping: float = 1.0) -> GreenKernel:
    """Solve the killed-walk hitting kernel for every target.

    ``method="direct"`` inverts (I - qP) once and uses the first-passage
    factorization G_t(u, v) = R(u, v) / R(v, v) where R = sum_m q^m P^m;
    ``method="fixed-point"`` iterates the defining equations per target to
    residual ``tol``.  ``auto`` picks direct for <= 200 vertices.
    """
    if t < 1:
        raise DomainError(f"killing parameter t must be >= 1, got {t}")
    q = 1.0 - 1.0 / t
    n = g.vertex_count
    if q == 0.0:
        return GreenKernel(g, t, q, np.eye(n))
    if method == "auto":
        method = "direct" if n <= DIRECT_SOLVE_MAX_VERTICES else "fixed-point"
    if method == "direct":
        P = kernel_transpose(g).T.toarray()
        R = np.linalg.solve(np.eye(n) - q * P, np.eye(n))
        values = R / np.diag(R)[None, :]
        np.fill_diagonal(values, 1.0)
    elif method == "fixed-point":
        values = np.empty((n, n))
        for v in range(n):
            values[:, v] = _fixed_point_column(g, q, v, tol, max_iter, damping)
    else:
        raise DomainError(f"unknown method {method!r}")
    return GreenKernel(g, float(t), q, values)


def _fixed_point_column(g: Graph, q: float, v: int, tol: float,
                        max_iter: int, damping: float) -> np.ndarray:
    # (P h)(u) = sum_z P(u, z) h(z); the stored kernel is transposed, so flip it
    k = kernel_transpose(g).T.tocsr()
    h = np.zeros(g.vertex_count)
    h[v] = 1.0
    for _ in range(max_iter):
        new = q * (k @ h)
        new[v] = 1.0
        if damping != 1.0:
            new = (1 - damping) * h + damping * new
        resid = float(np.abs(new - h).max())
        h = new
        if resid <= tol:
            return h
    raise NumericError(f"green fixed point for target {v} stalled at residual {resid}")


def information(g: Graph, x: int, y: int, m: int, *, rows: np.ndarray | None = None) -> float:
    """-log P^m(x, y); +inf when y is unreachable in m lazy steps."""
    if rows is None:
        rows = row_matrix(g, m)
    if bfs_distances(g, x)[y] > m:
        return math.inf
    return -math.log(float(rows[x, y]))


def audit_info_green(g: Graph, x: int, n: int, t: float, *,
                     kernel: GreenKernel | None = None,
                     rows: np.ndarray | None = None,
                     tol: float = 1e-9) -> list[AuditCheck]:
    """Check both comparison inequalities between G_t and the n-step law at x.

    The expectation E_x[G_t(X_0, X_n) / P^n(X_0, X_n)] collapses to the sum of
    G_t(x, .) over the support of P^n(x, .), which must be <= t + 1; pointwise
    the ratio must be >= (1 - 1/t)^n on every pair.
    """
    if n < 0:
        raise DomainError("n must be >= 0")
    kernel = kernel or green_kernel(g, t)
    rows = rows if rows is not None else row_matrix(g, n)
    support = bfs_distances(g, x) <= n  # exact support of the lazy n-step law
    expectation = float(kernel.values[x, support].sum())
    checks = [AuditCheck(
        statement="info_green_expectation",
        params={"x": x, "n": n, "t": t},
        lhs=expectation,
        rhs=t + 1,
        passed=expectation <= t + 1 + tol,
    )]
    qn = kernel.q ** n
    ratio_floor = math.inf
    for y in np.flatnonzero(support):
        ratio = kernel.values[x, y] / float(rows[x, y])
        ratio_floor = min(ratio_floor, ratio)
    checks.append(AuditCheck(
        statement="info_green_pointwise",
        params={"x": x, "n": n, "t": t},
        lhs=ratio_floor,
        rhs=qn,
        passed=ratio_floor >= qn - tol,
        direction=">=",
    ))
    return checks


def audit_tail_info_vs_green(g: Graph, x: int, m: int, n: int, mu: float, *,
                             kernel: GreenKernel | None = None,
                             rows: np.ndarray | None = None) -> AuditCheck:
    """Exact tail P_x(-log P^m >= -log G_n + mu) against the (n+1) e^-mu bound.

    The Green parameter is the horizon n itself.  The event is evaluated in
    ratio form G_n(x, y) / P^m(x, y) >= e^mu, which also covers the t = 1
    degenerate kernel.
    """
    if not 0 <= m <= n:
        raise DomainError("need 0 <= m <= n")
    if mu <= 0:
        raise DomainError("mu must be positive")
    kernel = kernel or green_kernel(g, n)
    rows = rows if rows is not None else row_matrix(g, m)
    support = bfs_distances(g, x) <= m
    emu = math.exp(mu)
    prob = 0.0
    for y in np.flatnonzero(support):
        p = float(rows[x, y])
        if kernel.values[x, y] >= emu * p:
            prob += p
    bound = (n + 1) * math.exp(-mu)
    return AuditCheck(
        statement="info_vs_green_tail",
        params={"x": x, "m": m, "n": n, "mu": mu},
        lhs=prob,
        rhs=bound,
        passed=prob <= bound + 1e-12,
    )


def supermultiplicativity_violation(kernel: GreenKernel) -> float:
    """Largest violation of G(u,v) >= G(u,w) G(w,v) over all triples (0 if none)."""
    G = kernel.values
    worst = 0.0
    for w in range(kernel.graph.vertex_count):
        prod = np.outer(G[:, w], G[w, :])
        worst = max(worst, float((prod - G).max()))
    return worst
