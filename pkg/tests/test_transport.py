from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rwiso import curvature, graphs, transport
from rwiso.errors import DomainError


def random_instance(rng, max_support=4, max_cost=9):
    m = int(rng.integers(1, max_support + 1))
    n = int(rng.integers(1, max_support + 1))
    a = [Fraction(int(x), 1) for x in rng.integers(1, 20, size=m)]
    b_raw = rng.integers(1, 20, size=n - 1) if n > 1 else []
    total_a = sum(a)
    # make totals match by construction
    b = [Fraction(int(x), 1) for x in b_raw]
    remainder = total_a - sum(b, Fraction(0))
    while remainder <= 0:
        a = [x + 1 for x in a]
        remainder = sum(a) - sum(b, Fraction(0))
    b.append(remainder)
    cost = rng.integers(0, max_cost + 1, size=(m, n)).tolist()
    return a, b, cost


class TestSolver:
    def test_single_cell(self):
        res = transport.solve_transport([Fraction(1)], [Fraction(1)], [[5]])
        assert res.cost == 5
        assert res.flows == {(0, 0): Fraction(1)}

    def test_two_by_two_hand(self):
        # cheapest matching is the diagonal
        res = transport.solve_transport(
            [Fraction(1, 2), Fraction(1, 2)],
            [Fraction(1, 2), Fraction(1, 2)],
            [[0, 1], [1, 0]])
        assert res.cost == 0

    def test_antidiagonal_forced(self):
        # parametrize flows by f00 = s: cost = 1 + 2s, minimized at s = 0
        res = transport.solve_transport(
            [Fraction(3, 4), Fraction(1, 4)],
            [Fraction(1, 4), Fraction(3, 4)],
            [[2, 1], [1, 2]])
        assert res.cost == 1
        assert res.flows == {(0, 1): Fraction(3, 4), (1, 0): Fraction(1, 4)}

    def test_matches_bruteforce_random(self):
        rng = np.random.default_rng(42)
        for _ in range(200):
            a, b, cost = random_instance(rng)
            res = transport.solve_transport(a, b, cost)
            oracle = transport.transport_bruteforce_cost(a, b, cost)
            assert res.cost == oracle

    def test_five_by_four(self):
        rng = np.random.default_rng(99)
        a = [Fraction(int(x)) for x in rng.integers(1, 12, size=5)]
        b = [Fraction(int(x)) for x in rng.integers(1, 12, size=4)]
        b[-1] += sum(a) - sum(b)
        assert b[-1] > 0
        cost = rng.integers(0, 8, size=(5, 4)).tolist()
        res = transport.solve_transport(a, b, cost)
        assert res.cost == transport.transport_bruteforce_cost(a, b, cost)

    def test_fractional_masses(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            m = int(rng.integers(1, 5))
            n = int(rng.integers(1, 5))
            a = [Fraction(int(x), 24) for x in rng.integers(1, 9, size=m)]
            b = [Fraction(int(x), 24) for x in rng.integers(1, 9, size=n)]
            total = sum(a, Fraction(0))
            b = [x * total / sum(b, Fraction(0)) for x in b]
            cost = rng.integers(0, 7, size=(m, n)).tolist()
            res = transport.solve_transport(a, b, cost)
            assert res.cost == transport.transport_bruteforce_cost(a, b, cost)

    def test_infeasible_rejected(self):
        with pytest.raises(DomainError):
            transport.solve_transport([Fraction(1)], [Fraction(2)], [[1]])

    def test_verification_runs_on_every_solve(self):
        # verify=True is the default and raises on any certificate defect
        rng = np.random.default_rng(3)
        a, b, cost = random_instance(rng)
        res = transport.solve_transport(a, b, cost)
        res.verify(a, b, [[Fraction(c) for c in row] for row in cost])


class TestW1:
    def test_identical_measures(self):
        g = graphs.cycle(4)
        mu = curvature.one_step_measure(g, 0)
        value, plan = curvature.w1(g, mu, mu)
        assert value == 0
        assert all(u == v for u, v, _ in plan.entries)

    def test_point_masses_give_distance(self):
        g = graphs.torus([4, 4])
        mu = curvature.FiniteMeasure([1], [Fraction(1)])
        nu = curvature.FiniteMeasure([10], [Fraction(1)])
        value, _ = curvature.w1(g, mu, nu)
        assert value == int(graphs.bfs_distances(g, 1)[10])

    def test_c4_neighbor_rows(self):
        g = graphs.cycle(4)
        value, plan = curvature.w1(g, curvature.one_step_measure(g, 0),
                                   curvature.one_step_measure(g, 1))
        assert value == Fraction(1, 2)

    def test_symmetry(self):
        g = graphs.random_regular(10, 3, seed=5)
        rng = np.random.default_rng(11)
        for _ in range(20):
            xs = rng.choice(10, size=3, replace=False)
            mu = curvature.one_step_measure(g, int(xs[0]))
            nu = curvature.one_step_measure(g, int(xs[1]))
            assert curvature.w1(g, mu, nu)[0] == curvature.w1(g, nu, mu)[0]

    def test_triangle_inequality(self):
        g = graphs.random_regular(10, 3, seed=6)
        rng = np.random.default_rng(12)
        for _ in range(20):
            xs = rng.choice(10, size=3, replace=False)
            ms = [curvature.one_step_measure(g, int(x)) for x in xs]
            ab = curvature.w1(g, ms[0], ms[1])[0]
            bc = curvature.w1(g, ms[1], ms[2])[0]
            ac = curvature.w1(g, ms[0], ms[2])[0]
            assert ac <= ab + bc

    def test_tv_lower_bounds_w1(self):
        g = graphs.random_regular(12, 3, seed=8)
        rng = np.random.default_rng(13)
        for _ in range(20):
            x, y = rng.choice(12, size=2, replace=False)
            assert curvature.tv_leq_w1(g, curvature.one_step_measure(g, int(x)),
                                       curvature.one_step_measure(g, int(y)))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(min_value=0, max_value=5), st.integers(min_value=0, max_value=5))
    def test_w1_point_mass_property(self, x, y):
        g = graphs.cycle(6)
        mu = curvature.FiniteMeasure([x], [Fraction(1)])
        nu = curvature.FiniteMeasure([y], [Fraction(1)])
        value, _ = curvature.w1(g, mu, nu)
        assert value == int(graphs.bfs_distances(g, x)[y])


class TestRicci:
    def test_k2_edge(self):
        g = graphs.complete(2)
        assert curvature.ricci_edge(g, 0, 1) == 1

    def test_c4_edge(self):
        g = graphs.cycle(4)
        assert curvature.ricci_edge(g, 0, 1) == Fraction(1, 2)

    def test_c12_edge_flat(self):
        g = graphs.cycle(12)
        assert curvature.ricci_edge(g, 0, 1) == 0

    def test_non_edge_rejected(self):
        g = graphs.cycle(6)
        with pytest.raises(DomainError):
            curvature.ricci_edge(g, 0, 3)

    def test_hypercube_report(self):
        g = graphs.hypercube(3)
        rep = curvature.curvature_report(g)
        values = {r for _, _, r in rep.edges}
        assert len(values) == 1  # edge-transitive
        assert rep.nonnegative
        assert rep.min_curvature >= 0

    def test_torus_8x8_nonneg(self):
        g = graphs.torus([8, 8])
        rep = curvature.curvature_report(g)
        assert rep.nonnegative

    def test_random_cubic_reports_negative(self):
        g = graphs.random_regular(50, 3, seed=1)
        rep = curvature.curvature_report(g)
        assert rep.min_curvature < 0  # report only; expanders curve negative

    def test_report_json_shape(self):
        g = graphs.cycle(4)
        data = curvature.curvature_report(g).to_json()
        assert {"edges", "summary", "histogram"} <= set(data)
        assert data["summary"]["nonneg"] is True
        assert all({"u", "v", "ric_num", "ric_den"} == set(e) for e in data["edges"])


class TestMsBound:
    def test_k2(self):
        g = graphs.complete(2)
        checks = curvature.audit_tv_decay_bound(g, 10)
        assert all(c.passed for c in checks)

    def test_c12(self):
        g = graphs.cycle(12)
        checks = curvature.audit_tv_decay_bound(g, 50)
        assert all(c.passed for c in checks)

    def test_torus_16x16_n100(self):
        g = graphs.torus([16, 16])
        checks = curvature.audit_tv_decay_bound(g, 100)
        assert all(c.passed for c in checks)

    def test_skip_on_negative_curvature(self):
        g = graphs.random_regular(20, 3, seed=1)
        checks = curvature.audit_tv_decay_bound(g, 5)
        assert checks[0].statement == "tv_decay_bound_skipped"
        assert checks[0].passed is None


class TestIsoperimetryShape:
    def test_trivial_point(self):
        g = graphs.cycle(6)
        chk = curvature.audit_curvature_isoperimetry(g, [(g.total_volume(), 0.0)])
        assert chk.witness["realized_c"] == 0

    def test_c6_exact_point(self):
        g = graphs.cycle(6)
        prof = graphs.isoperimetric_profile_bruteforce(g, 6)
        chk = curvature.audit_curvature_isoperimetry(g, [(6, float(prof[6]))])
        assert chk.witness["realized_c"] > 0
