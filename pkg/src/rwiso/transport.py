"""Exact-rational optimal transport between finitely supported measures.

The main solver is a transportation simplex over ``Fraction`` arithmetic with
Bland's anti-cycling rule; every result carries dual potentials that certify
optimality through exact complementary slackness.  A northwest-corner
enumeration over row/column permutations doubles as a brute-force oracle for
small supports (every extreme point of the transportation polytope arises
from the northwest-corner rule under some pair of permutations).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import BudgetExceededError, DomainError, NumericError

MAX_PIVOTS = 100_000
BRUTEFORCE_MAX_SUPPORT = 6


@dataclass
class TransportResult:
    """Optimal plan plus the dual certificate for one transportation instance."""

    cost: Fraction
    flows: dict[tuple[int, int], Fraction]  # positive flows only, by (i, j) index
    row_potentials: list[Fraction]
    col_potentials: list[Fraction]

    def verify(self, supply, demand, cost_matrix) -> None:
        """Exact feasibility + complementary slackness; raises on any failure."""
        m, n = len(supply), len(demand)
        row_sums = [Fraction(0)] * m
        col_sums = [Fraction(0)] * n
        total = Fraction(0)
        for (i, j), f in self.flows.items():
            if f < 0:
                raise NumericError(f"negative flow at {(i, j)}")
            row_sums[i] += f
            col_sums[j] += f
            total += f * cost_matrix[i][j]
        if row_sums != list(supply) or col_sums != list(demand):
            raise NumericError("plan marginals do not match the measures")
        if total != self.cost:
            raise NumericError("stored cost does not match the plan")
        u, v = self.row_potentials, self.col_potentials
        dual_value = sum(u[i] * supply[i] for i in range(m)) \
            + sum(v[j] * demand[j] for j in range(n))
        if dual_value != self.cost:
            raise NumericError("dual value does not match primal cost")
        for i in range(m):
            for j in range(n):
                slack = cost_matrix[i][j] - u[i] - v[j]
                if slack < 0:
                    raise NumericError(f"infeasible dual at {(i, j)}")
                if slack != 0 and self.flows.get((i, j), Fraction(0)) != 0:
                    raise NumericError(f"complementary slackness fails at {(i, j)}")


def _northwest_cells(supply, demand):
    """Staircase of m+n-1 basis cells (some possibly zero-flow)."""
    m, n = len(supply), len(demand)
    rem_a = list(supply)
    rem_b = list(demand)
    i = j = 0
    cells = []
    while i < m and j < n:
        q = min(rem_a[i], rem_b[j])
        cells.append((i, j, q))
        rem_a[i] -= q
        rem_b[j] -= q
        if rem_a[i] == 0 and (i + 1 < m or rem_b[j] > 0):
            i += 1
        else:
            j += 1
    return cells


def solve_transport(supply, demand, cost_matrix, *, verify: bool = True) -> TransportResult:
    """Minimize sum f_ij c_ij over nonnegative f with the given marginals.

    All arithmetic is exact: supplies/demands are positive ``Fraction``s with
    equal totals and costs are ``Fraction``-compatible numbers.
    """
    supply = [Fraction(s) for s in supply]
    demand = [Fraction(d) for d in demand]
    if any(s <= 0 for s in supply) or any(d <= 0 for d in demand):
        raise DomainError("supplies and demands must be positive")
    if sum(supply) != sum(demand):
        raise DomainError("total supply and demand differ")
    m, n = len(supply), len(demand)
    cost = [[Fraction(cost_matrix[i][j]) for j in range(n)] for i in range(m)]

    basis: set[tuple[int, int]] = set()
    flow: dict[tuple[int, int], Fraction] = {}
    for i, j, q in _northwest_cells(supply, demand):
        basis.add((i, j))
        flow[(i, j)] = q
    assert len(basis) == m + n - 1

    for _ in range(MAX_PIVOTS):
        u, v = _tree_potentials(m, n, basis, cost)
        entering = None
        for i in range(m):
            ui = u[i]
            for j in range(n):
                if (i, j) not in basis and cost[i][j] - ui - v[j] < 0:
                    entering = (i, j)
                    break
            if entering:
                break
        if entering is None:
            break
        cycle = _basis_cycle(m, n, basis, entering)
        # alternate signs around the cycle; the entering cell gains flow
        decreasing = cycle[1::2]
        theta = min(flow[c] for c in decreasing)
        leaving = min(c for c in decreasing if flow[c] == theta)
        flow[entering] = Fraction(0)
        sign = 1
        for c in cycle:
            flow[c] = flow[c] + theta if sign > 0 else flow[c] - theta
            sign = -sign
        basis.add(entering)
        basis.remove(leaving)
        del_flow = flow.pop(leaving)
        assert del_flow == 0
    else:
        raise NumericError(f"transportation simplex exceeded {MAX_PIVOTS} pivots")

    u, v = _tree_potentials(m, n, basis, cost)
    positive = {c: f for c, f in flow.items() if f != 0}
    total = sum(f * cost[i][j] for (i, j), f in positive.items())
    result = TransportResult(Fraction(total), positive, u, v)
    if verify:
        result.verify(supply, demand, cost)
    return result


def _tree_potentials(m, n, basis, cost):
    """Solve u_i + v_j = c_ij on the basis tree (u_0 = 0)."""
    adj: dict[tuple[str, int], list[tuple[tuple[str, int], tuple[int, int]]]] = {}
    for (i, j) in basis:
        adj.setdefault(("r", i), []).append((("c", j), (i, j)))
        adj.setdefault(("c", j), []).append((("r", i), (i, j)))
    u: list = [None] * m
    v: list = [None] * n
    u[0] = Fraction(0)
    stack = [("r", 0)]
    seen = {("r", 0)}
    while stack:
        node = stack.pop()
        for other, (i, j) in adj.get(node, ()):
            if other in seen:
                continue
            seen.add(other)
            if other[0] == "c":
                v[other[1]] = cost[i][j] - u[i]
            else:
                u[other[1]] = cost[i][j] - v[j]
            stack.append(other)
    if any(x is None for x in u) or any(x is None for x in v):
        raise NumericError("basis does not span the bipartite node set")
    return u, v


def _basis_cycle(m, n, basis, entering):
    """Unique cycle created by adding `entering`, as a signed cell sequence.

    Returns cells starting with `entering`; alternate +,-,+,- along the list.
    """
    ie, je = entering
    adj: dict[tuple[str, int], list[tuple[tuple[str, int], tuple[int, int]]]] = {}
    for (i, j) in basis:
        adj.setdefault(("r", i), []).append((("c", j), (i, j)))
        adj.setdefault(("c", j), []).append((("r", i), (i, j)))
    start, goal = ("r", ie), ("c", je)
    parent: dict = {start: None}
    stack = [start]
    while stack:
        node = stack.pop()
        if node == goal:
            break
        for other, cell in adj.get(node, ()):
            if other not in parent:
                parent[other] = (node, cell)
                stack.append(other)
    if goal not in parent:
        raise NumericError("basis tree disconnected; cannot pivot")
    path_cells = []
    node = goal
    while parent[node] is not None:
        node, cell = parent[node]
        path_cells.append(cell)
    # entering closes the cycle; walking it backwards keeps adjacency
    return [entering] + path_cells


def transport_bruteforce_cost(supply, demand, cost_matrix, *,
                              budget: int = 200_000) -> Fraction:
    """Minimal cost by exhaustive basis enumeration (small supports only).

    Every vertex of the transportation polytope is the flow of some spanning
    tree of the complete bipartite support graph, so enumerating all
    (m+n-1)-cell acyclic subsets and solving each tree exactly visits every
    extreme point.  Entirely independent of the simplex pivoting path.
    """
    m, n = len(supply), len(demand)
    if m > BRUTEFORCE_MAX_SUPPORT or n > BRUTEFORCE_MAX_SUPPORT:
        raise BudgetExceededError(
            f"brute-force oracle limited to supports of size {BRUTEFORCE_MAX_SUPPORT}")
    if math.comb(m * n, m + n - 1) > budget:
        raise BudgetExceededError(
            f"{math.comb(m * n, m + n - 1)} candidate bases exceed budget {budget}")
    supply = [Fraction(s) for s in supply]
    demand = [Fraction(d) for d in demand]
    if sum(supply) != sum(demand):
        raise DomainError("total supply and demand differ")
    scale = 1
    for x in itertools.chain(supply, demand):
        scale = scale * x.denominator // math.gcd(scale, x.denominator)
    a = [int(x * scale) for x in supply]
    b = [int(x * scale) for x in demand]
    cells = [(i, j) for i in range(m) for j in range(n)]
    node_count = m + n
    best = None
    for combo in itertools.combinations(cells, m + n - 1):
        parent = list(range(node_count))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        acyclic = True
        for i, j in combo:
            ri, cj = find(i), find(m + j)
            if ri == cj:
                acyclic = False
                break
            parent[ri] = cj
        if not acyclic:
            continue
        # m+n-1 acyclic edges on m+n nodes: a spanning tree; peel leaf flows
        adj: list[list[tuple[int, int, int]]] = [[] for _ in range(node_count)]
        for k, (i, j) in enumerate(combo):
            adj[i].append((m + j, k, 1))
            adj[m + j].append((i, k, 1))
        rem = a + b
        degree = [len(x) for x in adj]
        removed = [False] * (m + n - 1)
        leaves = [x for x in range(node_count) if degree[x] == 1]
        total = 0
        feasible = True
        while leaves:
            x = leaves.pop()
            edge = next(((o, k) for o, k, _ in adj[x] if not removed[k]), None)
            if edge is None:
                continue
            other, k = edge
            f = rem[x]
            if f < 0:
                feasible = False
                break
            i, j = combo[k]
            total += f * cost_matrix[i][j]
            rem[x] = 0
            rem[other] -= f
            removed[k] = True
            degree[x] -= 1
            degree[other] -= 1
            if degree[other] == 1:
                leaves.append(other)
        if feasible and (best is None or total < best):
            best = total
    return Fraction(best, scale)
