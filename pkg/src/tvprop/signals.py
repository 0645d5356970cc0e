"""Node/edge signals, partitions, total variation, and evaluation metrics.

Graph signals are plain float64 arrays indexed by node id; edge signals are
float64 arrays indexed by canonical edge order.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .errors import (
    CoefficientCountMismatch,
    DimensionMismatch,
    EmptySamplingSet,
    FileFormatError,
    InvalidSpec,
    NodeOutOfRange,
    PartitionMismatch,
    ZeroReference,
)
from .graph import DataGraph


@dataclasses.dataclass(frozen=True)
class Partition:
    """Disjoint cover of the nodes by clusters 0..cluster_count-1."""

    cluster_of: np.ndarray
    cluster_count: int

    def cluster(self, l) -> np.ndarray:
        return np.flatnonzero(self.cluster_of == l)


@dataclasses.dataclass(frozen=True)
class SamplingSet:
    """Nodes with given initial labels."""

    nodes: np.ndarray
    labels: np.ndarray

    @property
    def size(self) -> int:
        return int(self.nodes.shape[0])


def make_partition(cluster_of) -> Partition:
    """Build a Partition from a per-node cluster-id array.

    Cluster ids must be exactly 0..K-1 with every cluster nonempty.
    """
    cluster_of = np.asarray(cluster_of, dtype=np.int64)
    if cluster_of.ndim != 1 or cluster_of.size == 0:
        raise InvalidSpec("cluster_of must be a nonempty 1-d array")
    k = int(cluster_of.max()) + 1
    if cluster_of.min() < 0:
        raise InvalidSpec("negative cluster id")
    counts = np.bincount(cluster_of, minlength=k)
    if (counts == 0).any():
        missing = int(np.flatnonzero(counts == 0)[0])
        raise InvalidSpec(f"cluster {missing} is empty; ids must be dense 0..K-1")
    out = cluster_of.copy()
    out.flags.writeable = False
    return Partition(cluster_of=out, cluster_count=k)


def make_sampling_set(nodes, labels) -> SamplingSet:
    """Build a SamplingSet; node ids must be distinct, labels finite."""
    nodes = np.asarray(nodes, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.float64)
    if nodes.ndim != 1 or nodes.shape != labels.shape:
        raise DimensionMismatch("nodes and labels must be 1-d arrays of equal length")
    if nodes.size == 0:
        raise EmptySamplingSet("sampling set is empty")
    if np.unique(nodes).size != nodes.size:
        raise InvalidSpec("sampling set contains repeated node ids")
    if not np.isfinite(labels).all():
        raise InvalidSpec("sampling labels must be finite")
    order = np.argsort(nodes)
    nodes, labels = nodes[order].copy(), labels[order].copy()
    nodes.flags.writeable = False
    labels.flags.writeable = False
    return SamplingSet(nodes=nodes, labels=labels)


def check_samples(g: DataGraph, m: SamplingSet):
    if m.nodes[0] < 0 or m.nodes[-1] >= g.node_count:
        raise NodeOutOfRange("sampling set references a node outside the graph")


def _check_partition(g: DataGraph, f: Partition):
    if f.cluster_of.shape != (g.node_count,):
        raise PartitionMismatch(
            f"partition covers {f.cluster_of.shape[0]} nodes, graph has {g.node_count}"
        )


def as_node_signal(g: DataGraph, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (g.node_count,):
        raise DimensionMismatch(f"signal shape {x.shape} != ({g.node_count},)")
    return x


def tv(g: DataGraph, x) -> float:
    """Total variation: sum over edges of W_ij * |x[j] - x[i]|."""
    x = as_node_signal(g, x)
    return float(np.sum(g.weights * np.abs(x[g.edge_v] - x[g.edge_u])))


def boundary(g: DataGraph, f: Partition) -> np.ndarray:
    """Edge ids whose endpoints lie in different clusters of the partition."""
    _check_partition(g, f)
    return np.flatnonzero(f.cluster_of[g.edge_u] != f.cluster_of[g.edge_v])


def clustered_signal(f: Partition, coeffs) -> np.ndarray:
    """Piecewise-constant signal taking coeffs[l] on cluster l."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if coeffs.shape != (f.cluster_count,):
        raise CoefficientCountMismatch(
            f"got {coeffs.shape[0]} coefficients for {f.cluster_count} clusters"
        )
    return coeffs[f.cluster_of]


def tv_clustered_bound(g: DataGraph, f: Partition, coeffs):
    """Exact TV of a clustered signal and its coefficient-magnitude bound.

    Returns ``(exact_tv, bound)`` with
    ``exact_tv = sum_{boundary} W_ij |a_ci - a_cj|`` and
    ``bound = 2 max_l |a_l| * sum_{boundary} W_ij``; ``exact_tv <= bound``
    always, with equality when adjacent clusters carry +c/-c coefficients.
    """
    _check_partition(g, f)
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if coeffs.shape != (f.cluster_count,):
        raise CoefficientCountMismatch(
            f"got {coeffs.shape[0]} coefficients for {f.cluster_count} clusters"
        )
    b = boundary(g, f)
    w = g.weights[b]
    diffs = coeffs[f.cluster_of[g.edge_u[b]]] - coeffs[f.cluster_of[g.edge_v[b]]]
    exact = float(np.sum(w * np.abs(diffs)))
    bound = float(2.0 * np.max(np.abs(coeffs)) * np.sum(w)) if b.size else 0.0
    return exact, bound


def nmse(x_hat, x_true) -> float:
    """Normalized mean squared error ||x_hat - x_true||^2 / ||x_true||^2."""
    x_hat = np.asarray(x_hat, dtype=np.float64)
    x_true = np.asarray(x_true, dtype=np.float64)
    if x_hat.shape != x_true.shape:
        raise DimensionMismatch(f"shapes differ: {x_hat.shape} vs {x_true.shape}")
    denom = float(np.dot(x_true, x_true))
    if denom == 0.0:
        raise ZeroReference("reference signal has zero energy")
    diff = x_hat - x_true
    return float(np.dot(diff, diff)) / denom


# -- CSV file formats ---------------------------------------------------------
#
# labels:    node_id,value
# partition: node_id,cluster_id
# samples:   node_id,label


def _write_csv(path, header, ids, values, fmt):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for i, v in zip(ids, values):
            fh.write(f"{int(i)},{fmt(v)}\n")


def _read_csv(path, header):
    ids, values = [], []
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline().strip()
        if first != header:
            raise FileFormatError(f"expected header {header!r}, got {first!r}", path=path, line=1)
        for lineno, raw in enumerate(fh, start=2):
            line = raw.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise FileFormatError(f"expected 2 fields, got {len(parts)}", path=path, line=lineno)
            try:
                ids.append(int(parts[0]))
                values.append(parts[1])
            except ValueError as exc:
                raise FileFormatError(str(exc), path=path, line=lineno) from None
    return np.asarray(ids, dtype=np.int64), values


def _parse_floats(path, raw):
    try:
        vals = np.asarray([float(v) for v in raw], dtype=np.float64)
    except ValueError as exc:
        raise FileFormatError(str(exc), path=path) from None
    if not np.isfinite(vals).all():
        raise FileFormatError("non-finite value", path=path)
    return vals


def save_labels_csv(path, values, ids=None):
    values = np.asarray(values, dtype=np.float64)
    if ids is None:
        ids = np.arange(values.size)
    _write_csv(path, "node_id,value", ids, values, lambda v: repr(float(v)))


def load_labels_csv(path):
    """Read a labels CSV; returns (node_ids, values)."""
    ids, raw = _read_csv(path, "node_id,value")
    return ids, _parse_floats(path, raw)


def save_partition_csv(path, f: Partition):
    _write_csv(path, "node_id,cluster_id",
               np.arange(f.cluster_of.size), f.cluster_of, lambda v: str(int(v)))


def load_partition_csv(path):
    """Read a partition CSV; returns (node_ids, cluster_ids)."""
    ids, raw = _read_csv(path, "node_id,cluster_id")
    try:
        clusters = np.asarray([int(v) for v in raw], dtype=np.int64)
    except ValueError as exc:
        raise FileFormatError(str(exc), path=path) from None
    return ids, clusters


def save_samples_csv(path, m: SamplingSet):
    _write_csv(path, "node_id,label", m.nodes, m.labels, lambda v: repr(float(v)))


def load_samples_csv(path) -> SamplingSet:
    ids, raw = _read_csv(path, "node_id,label")
    return make_sampling_set(ids, _parse_floats(path, raw))
