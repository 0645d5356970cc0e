import numpy as np
import pytest

import tvprop as tp
from tvprop.errors import (
    DimensionMismatch,
    DuplicateEdge,
    FileFormatError,
    InvalidSpec,
    NodeOutOfRange,
    NonPositiveWeight,
    SelfLoop,
)

from conftest import dense_incidence, random_connected_graph


def chain3(w12=1.0, w23=1.0):
    return tp.build_graph(3, [(0, 1, w12), (1, 2, w23)])


class TestBuildGraph:
    def test_chain_of_three(self):
        g = chain3(0.5, 2.5)
        assert g.node_count == 3 and g.edge_count == 2
        assert list(g.edge_u) == [0, 1] and list(g.edge_v) == [1, 2]
        assert list(g.weights) == [0.5, 2.5]

    def test_single_isolated_node(self):
        g = tp.build_graph(1, [])
        assert g.node_count == 1 and g.edge_count == 0

    def test_self_loop_rejected(self):
        with pytest.raises(SelfLoop):
            tp.build_graph(2, [(0, 0, 1.0)])

    def test_bad_weights_rejected(self):
        for w in (0.0, -1.0, float("nan"), float("inf")):
            with pytest.raises(NonPositiveWeight):
                tp.build_graph(2, [(0, 1, w)])

    def test_duplicate_edge_rejected(self):
        with pytest.raises(DuplicateEdge):
            tp.build_graph(3, [(0, 1, 1.0), (1, 0, 2.0)])

    def test_node_out_of_range(self):
        with pytest.raises(NodeOutOfRange):
            tp.build_graph(2, [(0, 2, 1.0)])

    def test_non_integer_id(self):
        with pytest.raises(InvalidSpec):
            tp.build_graph(3, [(0.5, 1, 1.0)])

    def test_bad_node_count(self):
        with pytest.raises(InvalidSpec):
            tp.build_graph(0, [])

    def test_canonical_edge_order(self):
        g = tp.build_graph(4, [(3, 2, 1.0), (1, 0, 2.0), (3, 1, 3.0)])
        assert [(u, v) for u, v in zip(g.edge_u, g.edge_v)] == [(0, 1), (1, 3), (2, 3)]
        assert list(g.weights) == [2.0, 3.0, 1.0]


class TestNeighborhoodsAndDegrees:
    def test_chain_neighborhoods(self):
        g = chain3()
        assert tp.neighborhood(g, 1) == {0, 2}
        assert tp.neighborhood(g, 0) == {1}

    def test_isolated_node_empty_neighborhood(self):
        g = tp.build_graph(3, [(0, 1, 1.0)])
        assert tp.neighborhood(g, 2) == set()
        assert tp.degree(g, 2) == 0.0

    def test_node_out_of_range(self):
        g = chain3()
        with pytest.raises(NodeOutOfRange):
            tp.neighborhood(g, 3)
        with pytest.raises(NodeOutOfRange):
            tp.degree(g, -1)

    def test_unit_chain_degrees(self):
        g = chain3()
        assert tp.degree(g, 1) == 2.0
        assert tp.max_degree(g) == 2.0

    def test_weighted_chain_cluster_end_degree(self):
        # node 4 ends the first cluster: one intra (2) one inter (1) edge
        g, _, _, _ = tp.chain_instance(tp.ChainSpec(n=20))
        assert tp.degree(g, 4) == 3.0
        assert tp.max_degree(g) == 4.0

    def test_single_node_max_degree(self):
        assert tp.max_degree(tp.build_graph(1, [])) == 0.0

    def test_degree_matches_dense_weight_row_sum(self):
        for seed in range(5):
            g = random_connected_graph(seed, n=30, p=0.2)
            w = np.zeros((30, 30))
            w[g.edge_u, g.edge_v] = g.weights
            w += w.T
            assert np.allclose([tp.degree(g, i) for i in range(30)], w.sum(axis=1))


class TestOrientation:
    def test_chain_incidence_matrix(self):
        g = chain3(2.0, 1.0)
        d = dense_incidence(tp.orient(g))
        assert np.array_equal(d, [[2.0, -2.0, 0.0], [0.0, 1.0, -1.0]])

    def test_head_is_smaller_id(self):
        g = tp.build_graph(2, [(0, 1, 1.5)])
        og = tp.orient(g)
        assert og.head[0] == 0 and og.tail[0] == 1
        g = tp.build_graph(6, [(5, 2, 1.0)])
        og = tp.orient(g)
        assert og.head[0] == 2 and og.tail[0] == 5

    def test_oriented_neighborhoods_chain(self):
        og = tp.orient(chain3())
        assert tp.oriented_neighborhoods(og, 1) == ({2}, {0})
        assert tp.oriented_neighborhoods(og, 0) == ({1}, set())

    def test_oriented_neighborhoods_isolated(self):
        og = tp.orient(tp.build_graph(3, [(0, 1, 1.0)]))
        assert tp.oriented_neighborhoods(og, 2) == (set(), set())

    def test_oriented_neighborhoods_partition_full_neighborhood(self):
        g = random_connected_graph(3, n=20, p=0.25)
        og = tp.orient(g)
        for i in range(20):
            plus, minus = tp.oriented_neighborhoods(og, i)
            assert plus.isdisjoint(minus)
            assert plus | minus == tp.neighborhood(g, i)


class TestIncidenceOperator:
    def test_constant_signal_maps_to_zero(self):
        g = chain3()
        assert np.array_equal(tp.apply_incidence(g, np.ones(3)), np.zeros(2))

    def test_hand_evaluated_rows(self):
        g = chain3(2.0, 1.0)
        assert np.array_equal(tp.apply_incidence(g, [1.0, 0.0, 0.0]), [2.0, 0.0])

    def test_zero_signal(self):
        g = chain3()
        assert np.array_equal(tp.apply_incidence(g, np.zeros(3)), np.zeros(2))

    def test_transpose_hand_evaluated(self):
        g = chain3()
        assert np.array_equal(tp.apply_incidence_transpose(g, [1.0, 0.0]), [1.0, -1.0, 0.0])
        assert np.array_equal(tp.apply_incidence_transpose(g, [0.0, 0.0]), np.zeros(3))

    def test_dimension_mismatch(self):
        g = chain3()
        with pytest.raises(DimensionMismatch):
            tp.apply_incidence(g, np.ones(4))
        with pytest.raises(DimensionMismatch):
            tp.apply_incidence_transpose(g, np.ones(3))

    def test_adjointness_against_dense_oracle(self):
        rng = np.random.default_rng(0)
        for seed in range(10):
            g = random_connected_graph(seed, n=int(rng.integers(3, 11)), p=0.5)
            og = tp.orient(g)
            d = dense_incidence(og)
            x = rng.normal(size=g.node_count)
            y = rng.normal(size=g.edge_count)
            lhs = float(tp.apply_incidence(og, x) @ y)
            rhs = float(x @ tp.apply_incidence_transpose(og, y))
            assert abs(lhs - rhs) <= 1e-12 * (np.linalg.norm(x) * np.linalg.norm(y) + 1)
            assert np.allclose(tp.apply_incidence(og, x), d @ x)
            assert np.allclose(tp.apply_incidence_transpose(og, y), d.T @ y)

    def test_dense_rows_have_two_opposite_nonzeros(self):
        g = random_connected_graph(7, n=25, p=0.2)
        d = dense_incidence(tp.orient(g))
        for row in d:
            nz = row[row != 0.0]
            assert nz.size == 2
            assert nz[0] == -nz[1]

    def test_constants_in_kernel(self):
        g = random_connected_graph(2, n=30, p=0.15)
        x = np.full(30, 3.7)
        assert np.array_equal(
            tp.apply_incidence_transpose(g, tp.apply_incidence(g, x)), np.zeros(30))

    def test_operator_wrapper(self):
        g = chain3()
        op = tp.incidence(g)
        x = np.array([1.0, 2.0, 4.0])
        assert np.array_equal(op.forward(x), tp.apply_incidence(g, x))
        assert np.array_equal(op.adjoint(op.forward(x)),
                              tp.apply_incidence_transpose(g, op.forward(x)))

    def test_nondeterministic_mode_close(self):
        g = random_connected_graph(5, n=40, p=0.3)
        rng = np.random.default_rng(1)
        y = rng.normal(size=g.edge_count)
        a = tp.apply_incidence_transpose(g, y, deterministic=True)
        b = tp.apply_incidence_transpose(g, y, deterministic=False)
        assert np.allclose(a, b, rtol=1e-12, atol=1e-12)


class TestComponents:
    def test_chain_single_component(self):
        g, _, _, _ = tp.chain_instance(tp.ChainSpec(n=10, cluster_size=5))
        comps = tp.connected_components(g)
        assert len(comps) == 1 and comps[0].size == 10

    def test_two_disjoint_edges(self):
        g = tp.build_graph(4, [(0, 1, 1.0), (2, 3, 1.0)])
        comps = tp.connected_components(g)
        assert [set(c) for c in comps] == [{0, 1}, {2, 3}]

    def test_empty_edge_graph_singletons(self):
        g = tp.build_graph(3, [])
        comps = tp.connected_components(g)
        assert [list(c) for c in comps] == [[0], [1], [2]]

    def test_induced_subgraph(self):
        g = tp.build_graph(5, [(0, 1, 1.0), (1, 2, 2.0), (3, 4, 3.0)])
        sub, original = tp.induced_subgraph(g, [3, 4])
        assert list(original) == [3, 4]
        assert sub.node_count == 2 and sub.edge_count == 1
        assert sub.weights[0] == 3.0


class TestEdgeListFormat:
    def test_roundtrip(self, tmp_path):
        g = random_connected_graph(9, n=12, p=0.4)
        path = tmp_path / "edges.tsv"
        tp.save_edge_list(path, g)
        g2, original = tp.load_edge_list(path)
        assert list(original) == list(range(12))
        assert np.array_equal(g.edge_u, g2.edge_u)
        assert np.array_equal(g.edge_v, g2.edge_v)
        assert np.array_equal(g.weights, g2.weights)

    def test_comments_and_blank_lines(self, tmp_path):
        path = tmp_path / "e.tsv"
        path.write_text("# header\n\n0\t1\t1.5\n# mid comment\n1\t2\t2.0\n")
        g, _ = tp.load_edge_list(path)
        assert g.edge_count == 2 and g.node_count == 3

    @pytest.mark.parametrize("line,msg", [
        ("0 1 1.0", "3 tab-separated"),
        ("0\t1", "3 tab-separated"),
        ("0\tx\t1.0", "invalid literal"),
        ("0\t1\tnan", "positive finite"),
        ("0\t1\t-2.0", "positive finite"),
        ("0\t0\t1.0", "self-loop"),
        ("-1\t1\t1.0", "negative node id"),
    ])
    def test_format_violations_carry_line_numbers(self, tmp_path, line, msg):
        path = tmp_path / "bad.tsv"
        path.write_text("# ok\n0\t1\t1.0\n" + line + "\n")
        with pytest.raises(FileFormatError) as err:
            tp.load_edge_list(path)
        assert err.value.line == 3
        assert msg in str(err.value)

    def test_duplicate_edge_detected_after_parse(self, tmp_path):
        path = tmp_path / "dup.tsv"
        path.write_text("0\t1\t1.0\n1\t0\t2.0\n")
        with pytest.raises(DuplicateEdge):
            tp.load_edge_list(path)

    def test_sparse_ids_are_densified(self, tmp_path):
        path = tmp_path / "sparse.tsv"
        path.write_text("10\t20\t1.0\n20\t37\t2.0\n")
        g, original = tp.load_edge_list(path)
        assert g.node_count == 3
        assert list(original) == [10, 20, 37]
        assert [(u, v) for u, v in zip(g.edge_u, g.edge_v)] == [(0, 1), (1, 2)]

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "empty.tsv"
        path.write_text("# nothing\n")
        with pytest.raises(FileFormatError):
            tp.load_edge_list(path)
