import math

import numpy as np
import pytest

from sdpclust import (
    Graph,
    InvalidParameterError,
    EdgeListParseError,
    add_neighborhood_cliques,
    extend_labels_to_trees,
    load_edge_list,
    params_from_snr,
    save_edge_list,
    sbm_generate,
    two_core,
)

from conftest import random_graph


def check_simple(g):
    assert np.all(g.edges[:, 0] < g.edges[:, 1])
    assert len(set(map(tuple, g.edges.tolist()))) == g.n_edges
    assert g.degrees.sum() == 2 * g.n_edges


class TestParams:
    def test_zero_snr_forces_equality(self):
        p = params_from_snr(100, 3.0, 0.0)
        assert p.c_in == p.c_out == 3.0

    def test_inversion_c3(self):
        p = params_from_snr(100, 3.0, 1.2)
        assert p.c_in == pytest.approx(3.0 + 1.2 * math.sqrt(3.0))
        assert p.c_out == pytest.approx(3.0 - 1.2 * math.sqrt(3.0))
        # round-trip
        assert p.snr == pytest.approx(1.2)
        assert p.mean_degree == pytest.approx(3.0)

    def test_inversion_at_threshold(self):
        p = params_from_snr(100, 5.0, 1.0)
        assert p.c_in == pytest.approx(5.0 + math.sqrt(5.0))
        assert p.c_out == pytest.approx(5.0 - math.sqrt(5.0))

    def test_negative_cout_rejected(self):
        with pytest.raises(InvalidParameterError, match="c_out"):
            params_from_snr(100, 3.0, 2.0)

    def test_probability_bound(self):
        with pytest.raises(InvalidParameterError, match="c_in"):
            params_from_snr(4, 3.0, 1.2)  # c_in/n > 1


class TestSbmGenerate:
    def test_zero_probabilities(self):
        from sdpclust import SbmParams

        g, part = sbm_generate(SbmParams(n=4, c_in=0.0, c_out=0.0), seed=0)
        assert g.n_edges == 0
        assert part.labels.sum() == 0

    def test_certain_intra_edges(self):
        from sdpclust import SbmParams

        g, _ = sbm_generate(SbmParams(n=4, c_in=4.0, c_out=0.0), seed=0)
        assert sorted(map(tuple, g.edges.tolist())) == [(0, 1), (2, 3)]

    def test_seed_reproducible(self):
        p = params_from_snr(2000, 3.0, 1.2)
        g1, _ = sbm_generate(p, seed=42)
        g2, _ = sbm_generate(p, seed=42)
        assert np.array_equal(g1.edges, g2.edges)
        g3, _ = sbm_generate(p, seed=43)
        assert not np.array_equal(g1.edges, g3.edges)

    def test_mean_edge_count(self):
        # E[edges] = n*c/2 up to O(1); check within 3 binomial sigmas over seeds
        n, c = 10_000, 3.0
        p = params_from_snr(n, c, 1.2)
        counts = [sbm_generate(p, seed=s)[0].n_edges for s in range(100)]
        half = n // 2
        n_in = 2 * (half * (half - 1) // 2)
        n_out = half * half
        mean = n_in * p.c_in / n + n_out * p.c_out / n
        var = (
            n_in * (p.c_in / n) * (1 - p.c_in / n)
            + n_out * (p.c_out / n) * (1 - p.c_out / n)
        )
        sigma = math.sqrt(var / len(counts))
        assert abs(np.mean(counts) - mean) < 3 * sigma

    def test_empirical_densities(self):
        # intra/inter densities over 100 seeds within 4 standard errors
        n = 400
        p = params_from_snr(n, 4.0, 1.0)
        half = n // 2
        intra = inter = 0
        for s in range(100):
            g, part = sbm_generate(p, seed=s)
            same = part.labels[g.edges[:, 0]] == part.labels[g.edges[:, 1]]
            intra += int(same.sum())
            inter += int((~same).sum())
        pairs_intra = 100 * 2 * (half * (half - 1) // 2)
        pairs_inter = 100 * half * half
        for count, pairs, prob in (
            (intra, pairs_intra, p.c_in / n),
            (inter, pairs_inter, p.c_out / n),
        ):
            se = math.sqrt(prob * (1 - prob) / pairs)
            assert abs(count / pairs - prob) < 4 * se

    def test_simple_graph_invariant(self):
        g, _ = sbm_generate(params_from_snr(1000, 5.0, 1.0), seed=7)
        check_simple(g)

    def test_odd_n_rejected(self):
        with pytest.raises(InvalidParameterError):
            params_from_snr(101, 3.0, 0.5)


class TestTwoCore:
    def test_path_graph_empty_core(self):
        g = Graph(n=3, edges=[(0, 1), (1, 2)])
        core, forest = two_core(g)
        assert core.n == 0 and core.n_edges == 0
        assert not forest.in_core.any()

    def test_triangle_with_pendant(self):
        g = Graph(n=4, edges=[(0, 1), (1, 2), (0, 2), (0, 3)])
        core, forest = two_core(g)
        assert core.n == 3 and core.n_edges == 3
        assert not forest.in_core[3]
        assert forest.attachment[3] == 0

    def test_pendant_chain_attachment(self):
        # 3 -- 4 -- 5 hanging off triangle vertex 2: all attach to 2
        g = Graph(n=6, edges=[(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (4, 5)])
        core, forest = two_core(g)
        assert core.n == 3
        assert list(forest.attachment[3:]) == [2, 2, 2]

    def test_sbm_core_size(self):
        # mean core size over seeds close to the reference instance
        ns, ms = [], []
        for s in range(5):
            g, _ = sbm_generate(params_from_snr(10_000, 3.0, 1.2), seed=s)
            core, _ = two_core(g)
            ns.append(core.n)
            ms.append(core.n_edges)
        assert abs(np.mean(ns) - 7755) / 7755 < 0.03
        assert abs(np.mean(ms) - 13348) / 13348 < 0.03

    def test_idempotent(self):
        g, _ = sbm_generate(params_from_snr(2000, 3.0, 1.2), seed=3)
        core, _ = two_core(g)
        core2, forest2 = two_core(core)
        assert core2.n == core.n
        assert np.array_equal(core2.edges, core.edges)
        assert forest2.in_core.all()

    def test_min_degree_two(self):
        g, _ = sbm_generate(params_from_snr(4000, 3.0, 1.0), seed=1)
        core, _ = two_core(g)
        assert core.degrees.min() >= 2


class TestCliques:
    def test_p_zero_is_identity(self):
        g, _ = sbm_generate(params_from_snr(1000, 3.0, 1.0), seed=0)
        g2 = add_neighborhood_cliques(g, 0.0, seed=0)
        assert np.array_equal(g.edges, g2.edges)

    def test_star_p_one(self):
        g = Graph(n=4, edges=[(0, 1), (0, 2), (0, 3)])
        g2 = add_neighborhood_cliques(g, 1.0, seed=0)
        assert g2.n == 4
        assert g2.n_edges == 6  # triangle {1,2,3} added

    def test_never_removes_edges(self):
        g, _ = sbm_generate(params_from_snr(2000, 4.0, 1.0), seed=5)
        g2 = add_neighborhood_cliques(g, 0.05, seed=9)
        old = set(map(tuple, g.edges.tolist()))
        new = set(map(tuple, g2.edges.tolist()))
        assert old <= new
        assert g2.n == g.n
        check_simple(g2)

    def test_perturbed_core_is_its_own_core(self):
        g, _ = sbm_generate(params_from_snr(4000, 3.0, 1.2), seed=2)
        core, _ = two_core(g)
        pert = add_neighborhood_cliques(core, 0.01, seed=3)
        core2, _ = two_core(pert)
        assert core2.n == pert.n
        assert np.array_equal(core2.edges, pert.edges)

    def test_reference_scale_edge_additions(self):
        # p=1e-4 on the reference-size core adds ~0-20 edges
        g, _ = sbm_generate(params_from_snr(10_000, 3.0, 1.2), seed=2)
        core, _ = two_core(g)
        pert = add_neighborhood_cliques(core, 1e-4, seed=11)
        added = pert.n_edges - core.n_edges
        assert 0 <= added <= 40

    def test_bad_probability(self):
        g = Graph(n=2, edges=[(0, 1)])
        with pytest.raises(InvalidParameterError):
            add_neighborhood_cliques(g, 1.5, seed=0)


class TestExtendLabels:
    def test_no_pruning_unchanged(self, triangle):
        _, forest = two_core(triangle)
        labels = np.array([1, 1, -1], dtype=np.int8)
        assert np.array_equal(extend_labels_to_trees(labels, forest), labels)

    def test_pendant_inherits(self):
        g = Graph(n=4, edges=[(0, 1), (1, 2), (0, 2), (2, 3)])
        core, forest = two_core(g)
        core_labels = np.empty(3, dtype=np.int8)
        # core vertex order: original ids 0,1,2 -> dense 0,1,2
        core_labels[forest.core_index[0]] = 1
        core_labels[forest.core_index[1]] = 1
        core_labels[forest.core_index[2]] = -1
        full = extend_labels_to_trees(core_labels, forest)
        assert full[3] == -1

    def test_extension_of_core_truth_stays_high(self):
        from sdpclust import overlap

        # tree vertices match their attachment's planted label with
        # probability c_in/(c_in+c_out) ~ 0.85, so extending the exact core
        # labels keeps the full-graph overlap well above the noise floor
        # (but below 1: the extension is objective-optimal, not overlap-optimal)
        for s in range(5):
            g, part = sbm_generate(params_from_snr(4000, 3.0, 1.2), seed=s)
            core, forest = two_core(g)
            core_truth = part.labels[forest.core_vertices]
            full = extend_labels_to_trees(core_truth, forest)
            assert np.array_equal(full[forest.core_vertices], core_truth)
            assert overlap(full, part.labels) > 0.8

    def test_length_mismatch(self, triangle):
        _, forest = two_core(triangle)
        with pytest.raises(InvalidParameterError):
            extend_labels_to_trees(np.array([1, -1], dtype=np.int8), forest)


class TestEdgeListIO:
    def test_round_trip_triangle(self, tmp_path, triangle):
        path = tmp_path / "tri.txt"
        save_edge_list(path, triangle)
        g, labels = load_edge_list(path)
        assert labels is None
        assert np.array_equal(g.edges, triangle.edges)

    def test_round_trip_with_labels(self, tmp_path):
        g, part = sbm_generate(params_from_snr(500, 3.0, 1.0), seed=4)
        path = tmp_path / "g.txt"
        save_edge_list(path, g, part)
        g2, part2 = load_edge_list(path)
        assert np.array_equal(g2.edges, g.edges)
        assert np.array_equal(part2.labels, part.labels)

    def test_resave_byte_identical(self, tmp_path):
        g, part = sbm_generate(params_from_snr(10_000, 3.0, 1.2), seed=0)
        p1, p2 = tmp_path / "a.txt", tmp_path / "b.txt"
        save_edge_list(p1, g, part)
        g2, part2 = load_edge_list(p1)
        save_edge_list(p2, g2, part2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_self_loop_rejected(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("# n=6 m=1\n5 5\n")
        with pytest.raises(EdgeListParseError, match="line 2"):
            load_edge_list(path)

    def test_duplicate_rejected(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("# n=3 m=2\n0 1\n0 1\n")
        with pytest.raises(EdgeListParseError, match="line 3"):
            load_edge_list(path)

    def test_out_of_range_rejected(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("# n=3 m=1\n0 7\n")
        with pytest.raises(EdgeListParseError):
            load_edge_list(path)


def test_csr_symmetry():
    rng = np.random.default_rng(0)
    g = random_graph(30, 0.2, rng)
    for i in range(g.n):
        for j in g.neighbors(i):
            assert i in g.neighbors(j)
    check_simple(g)
