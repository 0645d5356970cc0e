"""Weighted undirected graphs, edge orientation, and the sparse incidence operator.

Node ids are dense integers ``0..N-1``.  Edges are unordered pairs with a
strictly positive weight; the edge list is canonicalized at build time
(sorted by ``(min(i,j), max(i,j))``) so that edge-indexed vectors are stable
across runs.  The incidence operator is applied matrix-free; a dense matrix
is never materialized here.
"""

from __future__ import annotations

import dataclasses

import numpy as np
import scipy.sparse
import scipy.sparse.csgraph

from .errors import (
    DimensionMismatch,
    DuplicateEdge,
    FileFormatError,
    InvalidSpec,
    NodeOutOfRange,
    NonPositiveWeight,
    SelfLoop,
)


@dataclasses.dataclass(frozen=True)
class DataGraph:
    """Immutable weighted undirected simple graph.

    ``edge_u``/``edge_v`` hold the smaller/larger endpoint of every edge in
    canonical order; ``adj_*`` is a CSR adjacency over nodes whose entries
    are ordered by edge index, and ``degrees`` holds weighted node degrees.
    """

    node_count: int
    edge_u: np.ndarray
    edge_v: np.ndarray
    weights: np.ndarray
    degrees: np.ndarray
    adj_indptr: np.ndarray
    adj_nodes: np.ndarray
    adj_edges: np.ndarray

    @property
    def edge_count(self) -> int:
        return int(self.edge_u.shape[0])


@dataclasses.dataclass(frozen=True)
class OrientedGraph:
    """A DataGraph plus one orientation (head, tail) per edge."""

    base: DataGraph
    head: np.ndarray
    tail: np.ndarray


@dataclasses.dataclass(frozen=True)
class IncidenceOperator:
    """Matrix-free application of the oriented incidence map and its transpose."""

    oriented: OrientedGraph

    def forward(self, x):
        return apply_incidence(self, x)

    def adjoint(self, y, deterministic=True):
        return apply_incidence_transpose(self, y, deterministic=deterministic)


def _freeze(*arrays):
    for a in arrays:
        a.flags.writeable = False


def build_graph(node_count, edges) -> DataGraph:
    """Validate and canonicalize an edge list into a DataGraph.

    Parameters
    ----------
    node_count : int
        Number of nodes N (>= 1).
    edges : sequence of (i, j, w) triples, or a tuple of three parallel
        arrays (i-array, j-array, w-array).

    Raises
    ------
    SelfLoop, NonPositiveWeight, DuplicateEdge, NodeOutOfRange, InvalidSpec
    """
    node_count = int(node_count)
    if node_count < 1:
        raise InvalidSpec(f"node_count must be >= 1, got {node_count}")

    if isinstance(edges, tuple) and len(edges) == 3:
        ii = np.asarray(edges[0], dtype=np.int64)
        jj = np.asarray(edges[1], dtype=np.int64)
        ww = np.asarray(edges[2], dtype=np.float64)
        if not (ii.shape == jj.shape == ww.shape):
            raise InvalidSpec("edge arrays must have equal length")
    else:
        rows = list(edges)
        ii = np.empty(len(rows), dtype=np.int64)
        jj = np.empty(len(rows), dtype=np.int64)
        ww = np.empty(len(rows), dtype=np.float64)
        for k, (i, j, w) in enumerate(rows):
            if int(i) != i or int(j) != j:
                raise InvalidSpec(f"non-integer node id in edge {k}: ({i}, {j})")
            ii[k], jj[k], ww[k] = int(i), int(j), float(w)

    if ii.size:
        bad = (ii < 0) | (ii >= node_count) | (jj < 0) | (jj >= node_count)
        if bad.any():
            k = int(np.flatnonzero(bad)[0])
            raise NodeOutOfRange(
                f"edge ({ii[k]}, {jj[k]}) references a node outside [0, {node_count})"
            )
        loops = ii == jj
        if loops.any():
            k = int(np.flatnonzero(loops)[0])
            raise SelfLoop(f"self-loop at node {ii[k]}")
        bad_w = ~(ww > 0.0) | ~np.isfinite(ww)
        if bad_w.any():
            k = int(np.flatnonzero(bad_w)[0])
            raise NonPositiveWeight(
                f"edge ({ii[k]}, {jj[k]}) has non-positive weight {ww[k]}"
            )

    u = np.minimum(ii, jj)
    v = np.maximum(ii, jj)
    order = np.lexsort((v, u))
    u, v, w = u[order], v[order], ww[order]
    if u.size > 1:
        dup = (u[1:] == u[:-1]) & (v[1:] == v[:-1])
        if dup.any():
            k = int(np.flatnonzero(dup)[0])
            raise DuplicateEdge(f"edge ({u[k]}, {v[k]}) appears more than once")

    edge_ids = np.arange(u.size, dtype=np.int64)
    ends = np.concatenate([u, v])
    other = np.concatenate([v, u])
    eids = np.concatenate([edge_ids, edge_ids])
    # stable sort by node keeps adjacency entries in edge-index order per node
    perm = np.argsort(ends, kind="stable")
    adj_nodes = other[perm]
    adj_edges = eids[perm]
    adj_indptr = np.zeros(node_count + 1, dtype=np.int64)
    np.cumsum(np.bincount(ends, minlength=node_count), out=adj_indptr[1:])
    degrees = np.bincount(ends, weights=np.concatenate([w, w]), minlength=node_count)

    _freeze(u, v, w, degrees, adj_indptr, adj_nodes, adj_edges)
    return DataGraph(node_count, u, v, w, degrees, adj_indptr, adj_nodes, adj_edges)


def _check_node(g: DataGraph, i):
    if not 0 <= i < g.node_count:
        raise NodeOutOfRange(f"node {i} outside [0, {g.node_count})")


def neighborhood(g: DataGraph, i) -> set:
    """Set of nodes adjacent to node i."""
    _check_node(g, i)
    lo, hi = g.adj_indptr[i], g.adj_indptr[i + 1]
    return set(int(n) for n in g.adj_nodes[lo:hi])


def degree(g: DataGraph, i) -> float:
    """Weighted degree (strength) of node i: the sum of incident edge weights."""
    _check_node(g, i)
    return float(g.degrees[i])


def max_degree(g: DataGraph) -> float:
    """Maximum weighted degree over all nodes."""
    return float(g.degrees.max())


def orient(g: DataGraph) -> OrientedGraph:
    """Orient every edge with the smaller node id as head, larger as tail.

    Any fixed orientation works (only signs of edge-space vectors change);
    this one is deterministic and matches the canonical edge order.
    """
    return OrientedGraph(base=g, head=g.edge_u, tail=g.edge_v)


def flip_orientation(og: OrientedGraph) -> OrientedGraph:
    """Reverse every edge orientation (diagnostic helper)."""
    return OrientedGraph(base=og.base, head=og.tail, tail=og.head)


def incidence(og) -> IncidenceOperator:
    """Wrap a DataGraph or OrientedGraph in an IncidenceOperator."""
    if isinstance(og, DataGraph):
        og = orient(og)
    return IncidenceOperator(oriented=og)


def oriented_neighborhoods(og: OrientedGraph, i):
    """Split the neighborhood of i into (head-side, tail-side) neighbor sets.

    Returns ``(n_plus, n_minus)`` where ``n_plus`` are neighbors along edges
    oriented with head i and ``n_minus`` those with tail i.  The two sets are
    disjoint and their union is ``neighborhood(g, i)``.
    """
    g = og.base
    _check_node(g, i)
    lo, hi = g.adj_indptr[i], g.adj_indptr[i + 1]
    n_plus, n_minus = set(), set()
    for pos in range(lo, hi):
        e = g.adj_edges[pos]
        other = int(g.adj_nodes[pos])
        if og.head[e] == i:
            n_plus.add(other)
        else:
            n_minus.add(other)
    return n_plus, n_minus


def _unwrap(op):
    if isinstance(op, IncidenceOperator):
        return op.oriented
    if isinstance(op, OrientedGraph):
        return op
    if isinstance(op, DataGraph):
        return orient(op)
    raise TypeError(f"expected IncidenceOperator/OrientedGraph/DataGraph, got {type(op)!r}")


def apply_incidence(op, x) -> np.ndarray:
    """Apply the oriented incidence map: out[e] = W_e * (x[head_e] - x[tail_e])."""
    og = _unwrap(op)
    g = og.base
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (g.node_count,):
        raise DimensionMismatch(
            f"node signal has shape {x.shape}, expected ({g.node_count},)"
        )
    return g.weights * (x[og.head] - x[og.tail])


def apply_incidence_transpose(op, y, deterministic=True) -> np.ndarray:
    """Apply the transpose: out[i] = sum_{head_e=i} W_e y[e] - sum_{tail_e=i} W_e y[e].

    With ``deterministic=True`` the two sums accumulate in edge-index order,
    making the result bit-reproducible; otherwise the reduction may
    reassociate (same value up to floating-point rounding).
    """
    og = _unwrap(op)
    g = og.base
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (g.edge_count,):
        raise DimensionMismatch(
            f"edge signal has shape {y.shape}, expected ({g.edge_count},)"
        )
    wy = g.weights * y
    if deterministic:
        plus = np.zeros(g.node_count)
        minus = np.zeros(g.node_count)
        np.add.at(plus, og.head, wy)
        np.add.at(minus, og.tail, wy)
    else:
        plus = np.bincount(og.head, weights=wy, minlength=g.node_count)
        minus = np.bincount(og.tail, weights=wy, minlength=g.node_count)
    return plus - minus


def connected_components(g: DataGraph):
    """Partition the nodes into maximal connected components.

    Returns a list of sorted node-id arrays, ordered by smallest member.
    """
    if g.edge_count == 0:
        return [np.array([i], dtype=np.int64) for i in range(g.node_count)]
    ones = np.ones(g.edge_count, dtype=np.int8)
    adj = scipy.sparse.csr_matrix(
        (ones, (g.edge_u, g.edge_v)), shape=(g.node_count, g.node_count)
    )
    n_comp, labels = scipy.sparse.csgraph.connected_components(adj, directed=False)
    comps = [[] for _ in range(n_comp)]
    for i, c in enumerate(labels):
        comps[c].append(i)
    comps = [np.asarray(c, dtype=np.int64) for c in comps]
    comps.sort(key=lambda c: int(c[0]))
    return comps


def is_connected(g: DataGraph) -> bool:
    return len(connected_components(g)) == 1


def induced_subgraph(g: DataGraph, nodes):
    """Extract the subgraph induced by ``nodes``.

    Returns ``(subgraph, original_ids)`` where ``original_ids[k]`` is the id
    in ``g`` of the subgraph's node ``k``.  Useful for splitting a
    disconnected graph into per-component problems.
    """
    original = np.unique(np.asarray(nodes, dtype=np.int64))
    if original.size and (original[0] < 0 or original[-1] >= g.node_count):
        raise NodeOutOfRange("subgraph node id outside graph")
    remap = -np.ones(g.node_count, dtype=np.int64)
    remap[original] = np.arange(original.size)
    keep = (remap[g.edge_u] >= 0) & (remap[g.edge_v] >= 0)
    sub = build_graph(
        max(original.size, 1),
        (remap[g.edge_u[keep]], remap[g.edge_v[keep]], g.weights[keep]),
    )
    return sub, original


def load_edge_list(path):
    """Read a tab-separated edge list: ``i<TAB>j<TAB>w`` per line.

    Lines starting with ``#`` and blank lines are skipped.  Node ids must be
    non-negative integers; if the set of ids used is not exactly ``0..K-1``
    they are densified by rank.  Returns ``(graph, original_ids)`` with
    ``original_ids[k]`` the file's id for dense node ``k``.

    Format violations raise FileFormatError with the offending line number;
    structural violations (duplicate edges) surface from build_graph.
    """
    ii, jj, ww = [], [], []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise FileFormatError(
                    f"expected 3 tab-separated fields, got {len(parts)}",
                    path=path, line=lineno,
                )
            try:
                i = int(parts[0])
                j = int(parts[1])
                w = float(parts[2])
            except ValueError as exc:
                raise FileFormatError(str(exc), path=path, line=lineno) from None
            if i < 0 or j < 0:
                raise FileFormatError(f"negative node id in ({i}, {j})", path=path, line=lineno)
            if i == j:
                raise FileFormatError(f"self-loop at node {i}", path=path, line=lineno)
            if not np.isfinite(w) or w <= 0.0:
                raise FileFormatError(f"weight must be a positive finite float, got {parts[2]!r}",
                                      path=path, line=lineno)
            ii.append(i)
            jj.append(j)
            ww.append(w)
    if not ii:
        raise FileFormatError("edge list contains no edges", path=path)
    ii = np.asarray(ii, dtype=np.int64)
    jj = np.asarray(jj, dtype=np.int64)
    ww = np.asarray(ww, dtype=np.float64)
    used = np.unique(np.concatenate([ii, jj]))
    if used[-1] == used.size - 1:
        original = np.arange(used[-1] + 1, dtype=np.int64)
        node_count = int(used[-1] + 1)
    else:
        original = used
        node_count = int(used.size)
        remap = {int(o): k for k, o in enumerate(used)}
        ii = np.asarray([remap[int(i)] for i in ii], dtype=np.int64)
        jj = np.asarray([remap[int(j)] for j in jj], dtype=np.int64)
    return build_graph(node_count, (ii, jj, ww)), original


def save_edge_list(path, g: DataGraph, original_ids=None):
    """Write a graph in the tab-separated edge-list format (canonical order)."""
    ids = original_ids if original_ids is not None else np.arange(g.node_count)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# i\tj\tw\n")
        for u, v, w in zip(g.edge_u, g.edge_v, g.weights):
            fh.write(f"{int(ids[u])}\t{int(ids[v])}\t{float(w)!r}\n")
