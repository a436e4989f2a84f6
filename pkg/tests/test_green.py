import math

import numpy as np
import pytest

from rwiso import graphs, green, walks
from rwiso.errors import DomainError


def k2_closed_form(t):
    # h = q*(h/2 + 1/2)  =>  h = (q/2) / (1 - q/2)
    q = 1 - 1 / t
    return (q / 2) / (1 - q / 2)


class TestKernel:
    def test_diagonal_is_one(self):
        g = graphs.cycle(6)
        k = green.green_kernel(g, 3.0)
        assert np.allclose(np.diag(k.values), 1.0)

    def test_k2_closed_form(self):
        g = graphs.complete(2)
        for t in (2.0, 4.0, 8.0):
            k = green.green_kernel(g, t)
            assert abs(k.value(0, 1) - k2_closed_form(t)) < 1e-12

    def test_monotone_in_t(self):
        g = graphs.torus([3, 3])
        k1 = green.green_kernel(g, 2.0)
        k2 = green.green_kernel(g, 5.0)
        assert np.all(k1.values <= k2.values + 1e-12)

    def test_t1_degenerate(self):
        g = graphs.cycle(4)
        k = green.green_kernel(g, 1.0)
        assert np.array_equal(k.values, np.eye(4))

    def test_fixed_point_matches_direct(self):
        for g in (graphs.complete(2), graphs.cycle(8), graphs.random_regular(20, 3, seed=1)):
            kd = green.green_kernel(g, 4.0, method="direct")
            kf = green.green_kernel(g, 4.0, method="fixed-point")
            assert np.abs(kd.values - kf.values).max() < 1e-9

    def test_bad_t_rejected(self):
        g = graphs.cycle(4)
        with pytest.raises(DomainError):
            green.green_kernel(g, 0.5)

    def test_supermultiplicative(self):
        for g in (graphs.cycle(6), graphs.hypercube(3), graphs.random_regular(12, 3, seed=2)):
            for t in (2.0, 4.0, 8.0):
                k = green.green_kernel(g, t)
                assert green.supermultiplicativity_violation(k) <= 1e-10

    def test_dominates_qn_pn(self):
        g = graphs.cycle(6)
        t = 4.0
        k = green.green_kernel(g, t)
        q = 1 - 1 / t
        R = np.eye(6)
        kt = walks.kernel_transpose(g)
        for n in range(1, 51):
            R = (kt @ R.T).T
            assert np.all(k.values >= q**n * R - 1e-12)

    def test_metric_rows(self):
        g = graphs.cycle(5)
        k = green.green_kernel(g, 4.0)
        d = k.metric_rows()
        assert np.all(np.diag(d) == 0)
        assert np.all(d >= 0)
        # triangle inequality via supermultiplicativity
        for x in range(5):
            for y in range(5):
                for z in range(5):
                    assert d[x, z] <= d[x, y] + d[y, z] + 1e-10

    def test_symmetrized_flag(self):
        g = graphs.load_edge_list("0 1\n1 2\n2 0\n2 3")  # irregular
        k = green.green_kernel(g, 3.0)
        d = k.metric_rows(symmetrized=True)
        assert np.allclose(d, d.T)


class TestInformation:
    def test_same_vertex_m0(self):
        g = graphs.cycle(4)
        assert green.information(g, 1, 1, 0) == 0

    def test_k2_one_step(self):
        g = graphs.complete(2)
        assert abs(green.information(g, 0, 1, 1) - math.log(2)) < 1e-14

    def test_unreachable_is_inf(self):
        g = graphs.cycle(4)
        assert green.information(g, 0, 2, 1) == math.inf


class TestInfoGreenAudit:
    def test_k2_n1_t2_expectation(self):
        g = graphs.complete(2)
        checks = green.audit_info_green(g, 0, 1, 2.0)
        exp_check = checks[0]
        assert abs(exp_check.lhs - 4 / 3) < 1e-12
        assert exp_check.rhs == 3
        assert exp_check.passed

    def test_n0_trivial(self):
        g = graphs.cycle(6)
        checks = green.audit_info_green(g, 2, 0, 5.0)
        assert abs(checks[0].lhs - 1.0) < 1e-12
        assert checks[0].passed

    def test_pointwise_c4(self):
        g = graphs.cycle(4)
        for n in range(11):
            checks = green.audit_info_green(g, 0, n, 5.0)
            assert all(c.passed for c in checks)

    def test_exhaustive_small(self):
        for gname, g in (("K2", graphs.complete(2)), ("C6", graphs.cycle(6))):
            for t in (2.0, 4.0, 8.0):
                kernel = green.green_kernel(g, t)
                for x in range(g.vertex_count):
                    for n in range(11):
                        checks = green.audit_info_green(g, x, n, t, kernel=kernel)
                        assert all(c.passed for c in checks), (gname, t, x, n)


class TestTailAudit:
    def test_huge_mu_probability_zero(self):
        g = graphs.cycle(6)
        chk = green.audit_tail_info_vs_green(g, 0, 3, 5, mu=80.0)
        assert chk.lhs == 0.0
        assert chk.passed

    def test_k2_m1_n1(self):
        g = graphs.complete(2)
        chk = green.audit_tail_info_vs_green(g, 0, 1, 1, mu=math.log(3))
        assert abs(chk.rhs - 2 / 3) < 1e-12
        assert chk.lhs <= chk.rhs
        assert chk.passed

    def test_c6_grid(self):
        g = graphs.cycle(6)
        for n in (8,):
            kernel = green.green_kernel(g, n)
            for m in range(n + 1):
                rows = walks.row_matrix(g, m)
                for mu in (1.0, 2.0, 4.0):
                    chk = green.audit_tail_info_vs_green(
                        g, 0, m, n, mu=mu, kernel=kernel, rows=rows)
                    assert chk.passed, (m, mu)

    def test_report_shape(self):
        g = graphs.complete(2)
        chk = green.audit_tail_info_vs_green(g, 0, 1, 2, mu=1.0)
        d = chk.to_json("inequality")
        assert set(d) >= {"inequality", "lhs", "rhs", "margin", "pass"}
