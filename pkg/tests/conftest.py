"""Shared test fixtures: dense oracles and instance builders.

Dense matrices and LP solves live here only — the package itself stays
matrix-free.  Oracles are independent of the implementation paths they
check.
"""

import numpy as np
import pytest
from scipy.optimize import linprog

import tvprop as tp


def dense_incidence(og):
    """Dense materialization of the oriented incidence matrix (test oracle)."""
    g = og.base
    d = np.zeros((g.edge_count, g.node_count))
    rows = np.arange(g.edge_count)
    d[rows, og.head] = g.weights
    d[rows, og.tail] = -g.weights
    return d


def tv_min_oracle(g, m):
    """Exact TV minimizer under clamping, via linear programming (HiGHS)."""
    n, e = g.node_count, g.edge_count
    d = dense_incidence(tp.orient(g))
    c = np.concatenate([np.zeros(n), np.ones(e)])
    a_ub = np.block([[d, -np.eye(e)], [-d, -np.eye(e)]])
    b_ub = np.zeros(2 * e)
    a_eq = np.zeros((m.nodes.size, n + e))
    a_eq[np.arange(m.nodes.size), m.nodes] = 1.0
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=m.labels,
                  bounds=[(None, None)] * n + [(0, None)] * e, method="highs")
    assert res.status == 0, res.message
    return res.x[:n], res.fun


def tv_min_is_unique(g, m, tol=1e-7):
    """Brute-force uniqueness check: no coordinate can move at the optimal TV."""
    n, e = g.node_count, g.edge_count
    d = dense_incidence(tp.orient(g))
    _, opt = tv_min_oracle(g, m)
    a_ub = np.block([[d, -np.eye(e)], [-d, -np.eye(e)],
                     [np.zeros((1, n)), np.ones((1, e))]])
    b_ub = np.concatenate([np.zeros(2 * e), [opt + 1e-9]])
    a_eq = np.zeros((m.nodes.size, n + e))
    a_eq[np.arange(m.nodes.size), m.nodes] = 1.0
    bounds = [(None, None)] * n + [(0, None)] * e
    sampled = set(int(i) for i in m.nodes)
    for i in range(n):
        if i in sampled:
            continue
        lo = hi = None
        for sign in (1.0, -1.0):
            c = np.zeros(n + e)
            c[i] = sign
            res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=m.labels,
                          bounds=bounds, method="highs")
            assert res.status == 0
            if sign > 0:
                lo = res.x[i]
            else:
                hi = res.x[i]
        if hi - lo > tol:
            return False
    return True


def random_connected_graph(seed, n, p=0.2, w_lo=0.5, w_hi=2.5):
    """Erdos-Renyi graph with uniform weights, retried until connected."""
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    for _ in range(200):
        keep = rng.random(iu.size) < p
        if not keep.any():
            continue
        w = rng.uniform(w_lo, w_hi, size=int(keep.sum()))
        g = tp.build_graph(n, (iu[keep], ju[keep], w))
        if tp.is_connected(g):
            return g
    raise AssertionError("could not build a connected random graph")


def two_clique_bridge(k=4, w_clique=2.0, w_bridge=1.0):
    """Two k-cliques joined by a single weak bridge (a minimal two-cluster case)."""
    edges = []
    for base in (0, k):
        for i in range(k):
            for j in range(i + 1, k):
                edges.append((base + i, base + j, w_clique))
    edges.append((k - 1, k, w_bridge))
    g = tp.build_graph(2 * k, edges)
    f = tp.make_partition(np.where(np.arange(2 * k) < k, 0, 1))
    return g, f


def random_resolved_instance(seed):
    """Random two-cluster graph whose sampling set resolves the partition.

    Dense random clusters joined by 1-2 weak bridges; for every bridge
    endpoint either the endpoint itself is sampled (self-witness) or a
    within-cluster neighbor is connected with weight > twice the bridge
    weight and sampled.  Returns (graph, partition, coeffs, sample_nodes).
    """
    rng = np.random.default_rng(seed)
    n1 = int(rng.integers(4, 13))
    n2 = int(rng.integers(4, 13))
    n = n1 + n2
    c1, c2 = np.arange(n1), np.arange(n1, n)
    edges = {}

    def add(i, j, w):
        key = (min(i, j), max(i, j))
        edges[key] = max(edges.get(key, 0.0), w)

    def fill_cluster(nodes):
        perm = rng.permutation(nodes)
        for a, b in zip(perm[:-1], perm[1:]):
            add(int(a), int(b), float(rng.uniform(1.6, 2.6)))
        for i in range(len(nodes)):
            for j in range(i + 1, len(nodes)):
                if rng.random() < 0.5:
                    add(int(nodes[i]), int(nodes[j]), float(rng.uniform(1.6, 2.6)))

    fill_cluster(c1)
    fill_cluster(c2)
    sample_nodes = set()
    for _ in range(int(rng.integers(1, 3))):
        i = int(rng.choice(c1))
        j = int(rng.choice(c2))
        wb = float(rng.uniform(0.5, 0.8))
        add(i, j, wb)
        for side, cluster in ((i, c1), (j, c2)):
            if rng.random() < 0.3 or len(cluster) < 2:
                sample_nodes.add(side)
            else:
                others = [v for v in cluster if v != side]
                wit = int(rng.choice(others))
                add(side, wit, 2.0 * wb * float(rng.uniform(1.05, 1.4)))
                sample_nodes.add(wit)

    eu = [k[0] for k in edges]
    ev = [k[1] for k in edges]
    ew = list(edges.values())
    g = tp.build_graph(n, (eu, ev, ew))
    f = tp.make_partition(np.where(np.arange(n) < n1, 0, 1))
    lo, hi = sorted(rng.uniform(0.0, 5.0, size=2))
    if hi - lo <= 1.0:
        hi = lo + 1.0 + hi
    coeffs = np.array([lo, hi])
    nodes = np.asarray(sorted(sample_nodes), dtype=np.int64)
    return g, f, coeffs, nodes


def regression_instances():
    """Small named solve instances reused by determinism/invariant suites."""
    out = []

    g, f, truth, m = tp.chain_instance(tp.ChainSpec(n=100))
    out.append(("chain100", g, m, truth))

    g, f, truth, m = tp.chain_instance(tp.ChainSpec(n=60, w_inter=1.5, placement="center"))
    out.append(("chain60-center", g, m, truth))

    g, f = two_clique_bridge(4)
    truth = tp.clustered_signal(f, np.array([0.0, 1.0]))
    m = tp.make_sampling_set([0, 7], truth[[0, 7]])
    out.append(("two-clique", g, m, truth))

    g, f, truth, sampler = tp.planted_partition_instance(
        tp.PlantedPartitionSpec(n=30, clusters=4, p_in=0.75, p_out=0.02, seed=3))
    out.append(("planted30", g, sampler(9, 1003), truth))

    pixels, trimap, _ = tp.synthetic_two_tone(width=12, height=12, seed=5)
    g, m = tp.image_grid_graph(tp.make_image_grid_spec(pixels, trimap))
    out.append(("grid12", g, m, None))

    g = random_connected_graph(seed=11, n=40, p=0.15)
    rng = np.random.default_rng(12)
    nodes = rng.choice(40, size=6, replace=False)
    m = tp.make_sampling_set(nodes, rng.uniform(-2, 2, size=6))
    out.append(("random40", g, m, None))

    return out


@pytest.fixture(scope="session")
def regression_set():
    return regression_instances()


@pytest.fixture(scope="session")
def chain10():
    return tp.chain_instance(tp.ChainSpec(n=10))
