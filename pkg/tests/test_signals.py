import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import tvprop as tp
from tvprop.errors import (
    CoefficientCountMismatch,
    DimensionMismatch,
    EmptySamplingSet,
    FileFormatError,
    InvalidSpec,
    PartitionMismatch,
    ZeroReference,
)

from conftest import random_connected_graph, two_clique_bridge


def chain3(w12=2.0, w23=1.0):
    return tp.build_graph(3, [(0, 1, w12), (1, 2, w23)])


class TestTotalVariation:
    def test_constant_signal_is_zero(self):
        g = chain3()
        assert tp.tv(g, np.full(3, 4.2)) == 0.0

    def test_hand_sum(self):
        assert tp.tv(chain3(), [0.0, 1.0, 1.0]) == 2.0

    def test_equals_incidence_l1_norm(self):
        rng = np.random.default_rng(0)
        for seed in range(10):
            g = random_connected_graph(seed, n=15, p=0.3)
            x = rng.normal(size=15)
            direct = tp.tv(g, x)
            via_d = float(np.abs(tp.apply_incidence(g, x)).sum())
            assert abs(direct - via_d) <= 1e-12 * max(direct, 1.0)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            tp.tv(chain3(), np.ones(4))

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-1e3, 1e3), min_size=6, max_size=6),
           st.floats(-100.0, 100.0))
    def test_seminorm_scaling(self, values, alpha):
        g = random_connected_graph(1, n=6, p=0.6)
        x = np.asarray(values)
        lhs = tp.tv(g, alpha * x)
        rhs = abs(alpha) * tp.tv(g, x)
        assert abs(lhs - rhs) <= 1e-10 * max(rhs, 1.0)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-1e3, 1e3), min_size=6, max_size=6),
           st.lists(st.floats(-1e3, 1e3), min_size=6, max_size=6))
    def test_seminorm_triangle(self, xs, ys):
        g = random_connected_graph(1, n=6, p=0.6)
        x, y = np.asarray(xs), np.asarray(ys)
        assert tp.tv(g, x + y) <= tp.tv(g, x) + tp.tv(g, y) + 1e-10 * (
            tp.tv(g, x) + tp.tv(g, y) + 1.0)


class TestPartitionAndBoundary:
    def test_single_cluster_empty_boundary(self):
        g = chain3()
        f = tp.make_partition(np.zeros(3, dtype=int))
        assert tp.boundary(g, f).size == 0

    def test_chain_boundary_every_fifth_edge(self):
        g, f, _, _ = tp.chain_instance(tp.ChainSpec(n=25))
        b = tp.boundary(g, f)
        assert list(b) == [4, 9, 14, 19]
        assert b.size == 25 // 5 - 1
        assert np.all(g.weights[b] == 1.0)

    def test_two_clique_boundary_is_bridge(self):
        g, f = two_clique_bridge(4)
        b = tp.boundary(g, f)
        assert b.size == 1
        assert (g.edge_u[b[0]], g.edge_v[b[0]]) == (3, 4)

    def test_partition_mismatch(self):
        g = chain3()
        f = tp.make_partition(np.zeros(4, dtype=int))
        with pytest.raises(PartitionMismatch):
            tp.boundary(g, f)

    def test_partition_validation(self):
        with pytest.raises(InvalidSpec):
            tp.make_partition([0, 2, 2])  # cluster 1 empty
        with pytest.raises(InvalidSpec):
            tp.make_partition([-1, 0])
        f = tp.make_partition([0, 1, 0, 1])
        assert f.cluster_count == 2
        assert list(f.cluster(1)) == [1, 3]


class TestClusteredSignals:
    def test_equal_coefficients_give_constant(self):
        f = tp.make_partition([0, 0, 1, 1])
        x = tp.clustered_signal(f, [2.0, 2.0])
        assert np.array_equal(x, np.full(4, 2.0))

    def test_alternating_staircase(self):
        _, f, truth, _ = tp.chain_instance(tp.ChainSpec(n=10))
        assert np.array_equal(truth, [1] * 5 + [5] * 5)
        assert np.array_equal(tp.clustered_signal(f, [1.0, 5.0]), truth)

    def test_two_cluster_tv_is_boundary_weight_sum(self):
        g, f = two_clique_bridge(3, w_bridge=0.7)
        x = tp.clustered_signal(f, [0.0, 1.0])
        b = tp.boundary(g, f)
        assert np.isclose(tp.tv(g, x), g.weights[b].sum())

    def test_coefficient_count_mismatch(self):
        f = tp.make_partition([0, 1])
        with pytest.raises(CoefficientCountMismatch):
            tp.clustered_signal(f, [1.0])


class TestClusteredTvBound:
    def test_antisymmetric_coefficients_tight(self):
        g, f = two_clique_bridge(4)
        exact, bound = tp.tv_clustered_bound(g, f, [1.0, -1.0])
        assert np.isclose(exact, bound)

    def test_experiment_coefficients(self):
        g, f, _, _ = tp.chain_instance(tp.ChainSpec(n=20))
        wsum = g.weights[tp.boundary(g, f)].sum()
        exact, bound = tp.tv_clustered_bound(g, f, [1.0, 5.0, 1.0, 5.0])
        assert np.isclose(exact, 4.0 * wsum)
        assert np.isclose(bound, 10.0 * wsum)

    def test_constant_coefficients(self):
        g, f = two_clique_bridge(3)
        exact, bound = tp.tv_clustered_bound(g, f, [3.0, 3.0])
        assert exact == 0.0 and exact <= bound

    def test_exact_never_exceeds_bound(self):
        rng = np.random.default_rng(4)
        g, f, _, _ = tp.chain_instance(tp.ChainSpec(n=30))
        for _ in range(20):
            coeffs = rng.uniform(-5, 5, size=f.cluster_count)
            exact, bound = tp.tv_clustered_bound(g, f, coeffs)
            assert exact <= bound + 1e-12
            assert np.isclose(exact, tp.tv(g, tp.clustered_signal(f, coeffs)))

    def test_tv_depends_only_on_boundary_edges(self):
        g, f = two_clique_bridge(4, w_clique=2.0, w_bridge=0.5)
        x = tp.clustered_signal(f, [1.0, -2.0])
        b = tp.boundary(g, f)
        only_boundary = tp.build_graph(
            g.node_count, (g.edge_u[b], g.edge_v[b], g.weights[b]))
        assert np.isclose(tp.tv(g, x), tp.tv(only_boundary, x))


class TestNmse:
    def test_zero_error(self):
        x = np.array([1.0, 2.0])
        assert tp.nmse(x, x) == 0.0

    def test_zero_estimate(self):
        x = np.array([1.0, 2.0])
        assert tp.nmse(np.zeros(2), x) == 1.0

    def test_half(self):
        assert tp.nmse(np.array([1.0, 0.0]), np.array([1.0, 1.0])) == 0.5

    def test_zero_reference(self):
        with pytest.raises(ZeroReference):
            tp.nmse(np.ones(2), np.zeros(2))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            tp.nmse(np.ones(2), np.ones(3))


class TestSamplingSet:
    def test_validation(self):
        with pytest.raises(EmptySamplingSet):
            tp.make_sampling_set([], [])
        with pytest.raises(InvalidSpec):
            tp.make_sampling_set([1, 1], [0.0, 1.0])
        with pytest.raises(InvalidSpec):
            tp.make_sampling_set([0], [float("nan")])
        m = tp.make_sampling_set([3, 1], [0.5, 0.25])
        assert list(m.nodes) == [1, 3]
        assert list(m.labels) == [0.25, 0.5]


class TestCsvFormats:
    def test_labels_roundtrip(self, tmp_path):
        path = tmp_path / "labels.csv"
        values = np.array([0.1, -2.25, 7.0])
        tp.save_labels_csv(path, values)
        ids, loaded = tp.load_labels_csv(path)
        assert list(ids) == [0, 1, 2]
        assert np.array_equal(loaded, values)

    def test_partition_roundtrip(self, tmp_path):
        path = tmp_path / "partition.csv"
        f = tp.make_partition([0, 0, 1, 2])
        tp.save_partition_csv(path, f)
        ids, clusters = tp.load_partition_csv(path)
        assert np.array_equal(clusters, f.cluster_of)

    def test_samples_roundtrip(self, tmp_path):
        path = tmp_path / "samples.csv"
        m = tp.make_sampling_set([2, 5], [1.0, -1.0])
        tp.save_samples_csv(path, m)
        m2 = tp.load_samples_csv(path)
        assert np.array_equal(m.nodes, m2.nodes)
        assert np.array_equal(m.labels, m2.labels)

    def test_header_required(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("id,value\n0,1.0\n")
        with pytest.raises(FileFormatError) as err:
            tp.load_labels_csv(path)
        assert err.value.line == 1

    def test_bad_row_carries_line_number(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("node_id,value\n0,1.0\nx,2.0\n")
        with pytest.raises(FileFormatError) as err:
            tp.load_labels_csv(path)
        assert err.value.line == 3

    def test_non_finite_label_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("node_id,label\n0,inf\n")
        with pytest.raises(FileFormatError):
            tp.load_samples_csv(path)
