import math

import numpy as np

from rwiso import graphs, walks


def dense_kernel(g):
    """Independent oracle: dense lazy transition matrix, rows = from-vertex."""
    n = g.vertex_count
    P = np.zeros((n, n))
    for v in range(n):
        P[v, v] = 0.5
        for w in g.neighbors(v):
            P[v, w] = 0.5 / g.degree(v)
    return P


class TestLazyStep:
    def test_k2_one_step(self):
        g = graphs.complete(2)
        row = walks.lazy_step(g, walks.point_mass(g, 0))
        assert np.allclose(row.vec, [0.5, 0.5])

    def test_c4_one_step(self):
        g = graphs.cycle(4)
        row = walks.lazy_step(g, walks.point_mass(g, 0))
        expected = np.zeros(4)
        expected[0] = 0.5
        for w in g.neighbors(0):
            expected[w] = 0.25
        assert np.allclose(row.vec, expected)
        assert row.vec[[v for v in range(4) if v not in (0, *g.neighbors(0))][0]] == 0

    def test_stationary_fixed_point(self):
        g = graphs.random_regular(10, 3, seed=4)
        pi = g.degrees / g.degrees.sum()
        row = walks.DistributionRow(g, 0, 0, pi.astype(float))
        out = walks.lazy_step(g, row)
        assert np.allclose(out.vec, pi, atol=1e-14)

    def test_mass_conserved(self):
        g = graphs.torus([4, 4])
        row = walks.point_mass(g, 3)
        for _ in range(30):
            row = walks.lazy_step(g, row)
            assert abs(row.vec.sum() - 1.0) <= walks.MASS_TOL


class TestDistribution:
    def test_k2_matrix_power(self):
        g = graphs.complete(2)
        rows = walks.distribution(g, 0, 2)
        assert np.allclose(rows[0].vec, [1, 0])
        assert np.allclose(rows[1].vec, [0.5, 0.5])
        assert np.allclose(rows[2].vec, [0.5, 0.5])

    def test_matches_dense_matrix_power_oracle(self):
        g = graphs.random_regular(12, 3, seed=9)
        P = dense_kernel(g)
        rows = walks.distribution(g, 5, 8)
        for m in (0, 1, 4, 8):
            oracle = np.linalg.matrix_power(P, m)[5]
            assert np.allclose(rows[m].vec, oracle, atol=1e-13)

    def test_exact_engine_matches_floats(self):
        g = graphs.lamplighter_cycle(3)
        exact = walks.exact_distribution(g, 0, 6)
        rows = walks.distribution(g, 0, 6)
        for m in range(7):
            approx = np.array([float(p) for p in exact[m]])
            assert np.allclose(rows[m].vec, approx, atol=1e-13)
            assert sum(exact[m]) == 1

    def test_reversibility_sampled(self):
        g = graphs.random_regular(14, 3, seed=11)
        R = walks.row_matrix(g, 6)
        rng = np.random.default_rng(2)
        for _ in range(50):
            x, y = rng.integers(0, 14, size=2)
            assert abs(g.degree(x) * R[x, y] - g.degree(y) * R[y, x]) < 1e-10


class TestTV:
    def test_identical_rows(self):
        g = graphs.cycle(4)
        r = walks.distribution(g, 0, 1)[1]
        assert walks.tv_distance(r, r) == 0

    def test_point_masses(self):
        g = graphs.cycle(4)
        assert walks.tv_distance(walks.point_mass(g, 0), walks.point_mass(g, 2)) == 1

    def test_c4_neighbors_one_step(self):
        g = graphs.cycle(4)
        p = walks.distribution(g, 0, 1)[1]
        q = walks.distribution(g, 1, 1)[1]
        assert abs(walks.tv_distance(p, q) - 0.5) < 1e-15

    def test_k2_profile_zero(self):
        g = graphs.complete(2)
        prof = walks.tv_profile(g, 5)
        assert prof.tv[0] == 1
        assert np.all(prof.tv[1:] == 0)

    def test_monotone_on_torus(self):
        g = graphs.torus([16, 16])
        prof = walks.tv_profile(g, 50)
        assert np.all(np.diff(prof.tv) <= 1e-12)

    def test_hint_matches_all_pairs_on_small_tori(self):
        for sides in ([5], [4, 4], [3, 5]):
            g = graphs.torus(sides)
            full = walks.tv_profile(g, 12)
            hint = walks.tv_profile(g, 12, transitive_hint=(0, int(g.neighbors(0)[0])))
            assert np.allclose(full.tv, hint.tv, atol=1e-12)
            assert hint.tv_mode == "hinted"


class TestDisplacementEntropy:
    def test_k2_dstar(self):
        g = graphs.complete(2)
        prof = walks.displacement_profile(g, 1)
        assert prof.dstar[0] == 0
        assert abs(prof.dstar[1] - 0.5) < 1e-15

    def test_c4_dstar1(self):
        g = graphs.cycle(4)
        prof = walks.displacement_profile(g, 1)
        assert abs(prof.dstar[1] - 0.5) < 1e-15

    def test_k2_entropy(self):
        g = graphs.complete(2)
        prof = walks.entropy_profile(g, 1)
        assert prof.hstar[0] == 0
        assert abs(prof.hstar[1] - math.log(2)) < 1e-14

    def test_complete_graph_entropy(self):
        # K_{M+1}: one step from x gives mass 1/2 at x and 1/(2M) at M others
        M = 4
        g = graphs.complete(M + 1)
        prof = walks.entropy_profile(g, 1)
        expected = 0.5 * math.log(2) + 0.5 * math.log(2 * M)
        assert abs(prof.hstar[1] - expected) < 1e-14

    def test_trivial_upper_bounds(self):
        g = graphs.lamplighter_cycle(3)
        n = 12
        prof = walks.full_profile(g, n)
        assert prof.dstar[n] <= n
        assert prof.hstar[n] <= n * math.log(2 * g.max_degree) + 1e-12
        assert np.all(np.diff(prof.dstar) >= -1e-15)
        assert np.all(np.diff(prof.hstar) >= -1e-15)

    def test_single_source_equals_all_sources_on_transitive(self):
        g = graphs.torus([3, 4])
        full = walks.full_profile(g, 8, want_tv=False)
        one = walks.full_profile(g, 8, sources=[7], want_tv=False)
        assert np.allclose(full.dstar, one.dstar, atol=1e-12)
        assert np.allclose(full.hstar, one.hstar, atol=1e-12)


class TestSamplePath:
    def test_n0(self):
        g = graphs.cycle(4)
        assert walks.sample_path(g, 2, 0, seed=1) == [2]

    def test_deterministic(self):
        g = graphs.torus([4, 4])
        assert walks.sample_path(g, 0, 50, seed=42) == walks.sample_path(g, 0, 50, seed=42)

    def test_stay_fraction(self):
        g = graphs.complete(2)
        n = 100_000
        path = walks.sample_path(g, 0, n, seed=7)
        stays = sum(1 for a, b in zip(path, path[1:]) if a == b)
        sigma = math.sqrt(n * 0.25)
        assert abs(stays - n / 2) <= 3 * sigma

    def test_endpoint_histogram_vs_exact(self):
        g = graphs.cycle(6)
        n, samples = 8, 100_000
        counts = np.zeros(6)
        rng = np.random.default_rng(123)
        # one shared stream of sub-seeds, one path per sample
        seeds = rng.integers(0, 2**63, size=samples)
        for s in seeds:
            counts[walks.sample_path(g, 0, n, seed=int(s))[-1]] += 1
        emp = counts / samples
        exact = walks.distribution(g, 0, n)[n].vec
        assert 0.5 * np.abs(emp - exact).sum() <= 0.02


class TestProfileCsv:
    def test_csv_shape(self):
        g = graphs.complete(2)
        prof = walks.full_profile(g, 5)
        text = prof.to_csv()
        lines = text.strip().splitlines()
        assert lines[0] == "m,tv,dstar,hstar"
        assert len(lines) == 7

    def test_final_rows_meta(self):
        g = graphs.cycle(6)
        prof = walks.full_profile(g, 4, keep_final_rows=True)
        R = walks.row_matrix(g, 4)
        stash = prof.meta["final_rows"]
        assert stash["sources"] == list(range(6))
        assert np.allclose(stash["matrix"], R)
