"""Recovery conditions: when does TV minimization return the true labels?

Provides the witness-based resolve check for a (partition, sampling-set)
pair, the kernel/nullspace ratio machinery behind it, and empirical
verifiers for exact recovery and the TV approximation bound.
"""

from __future__ import annotations

import dataclasses
import itertools

import numpy as np

from .errors import (
    DegenerateEdgeSet,
    DimensionMismatch,
    InvalidSpec,
    NotResolved,
)
from .graph import DataGraph, apply_incidence, orient
from .signals import (
    Partition,
    SamplingSet,
    as_node_signal,
    boundary,
    clustered_signal,
    make_sampling_set,
    tv,
)
from .solver import SolverConfig, slp_solve


@dataclasses.dataclass(frozen=True)
class EdgeWitness:
    """Sampled witnesses (m, n) for the two endpoints of a boundary edge.

    A witness is either a sampled neighbor whose connecting weight is at
    least twice the boundary weight, or the endpoint itself when sampled
    (flagged as a self-witness; it pins the same kernel coordinate to zero).
    """

    edge: int
    i: int
    j: int
    m: int
    n: int
    m_self: bool
    n_self: bool


@dataclasses.dataclass(frozen=True)
class ResolveViolation:
    edge: int
    i: int
    j: int
    weight: float
    missing: tuple


@dataclasses.dataclass(frozen=True)
class ResolveReport:
    resolved: bool
    witnesses: list
    violations: list


@dataclasses.dataclass(frozen=True)
class NnspEstimate:
    """Best found kernel direction for the off-set/on-set variation ratio.

    ``best_ratio < 2`` certifies failure of the nullspace condition for the
    edge set (the witness is checkable); a ratio >= 2 is evidence only.
    """

    edge_ids: np.ndarray
    best_ratio: float
    witness: np.ndarray
    certified_violation: bool


def resolves(g: DataGraph, f: Partition, m: SamplingSet) -> ResolveReport:
    """Check the boundary-witness condition for a partition and sampling set.

    Every boundary edge {i, j} with weight w needs sampled nodes adjacent to
    i and to j through edges of weight >= 2w (or the endpoints themselves
    sampled).  Returns per-edge witnesses, or the violations found.
    """
    sampled = np.zeros(g.node_count, dtype=bool)
    sampled[m.nodes] = True

    def side_witness(node, need):
        best, best_w = -1, -np.inf
        lo, hi = g.adj_indptr[node], g.adj_indptr[node + 1]
        for pos in range(lo, hi):
            nb = int(g.adj_nodes[pos])
            wn = float(g.weights[g.adj_edges[pos]])
            if sampled[nb] and wn >= need and (wn > best_w or (wn == best_w and nb < best)):
                best, best_w = nb, wn
        if best >= 0:
            return best, False
        if sampled[node]:
            return int(node), True
        return None, False

    witnesses, violations = [], []
    for e in boundary(g, f):
        i, j, w = int(g.edge_u[e]), int(g.edge_v[e]), float(g.weights[e])
        need = 2.0 * w
        wi, wi_self = side_witness(i, need)
        wj, wj_self = side_witness(j, need)
        if wi is None or wj is None:
            missing = tuple(side for side, found in ((i, wi), (j, wj)) if found is None)
            violations.append(ResolveViolation(edge=int(e), i=i, j=j, weight=w, missing=missing))
        else:
            witnesses.append(EdgeWitness(edge=int(e), i=i, j=j, m=wi, n=wj,
                                         m_self=wi_self, n_self=wj_self))
    return ResolveReport(resolved=not violations, witnesses=witnesses, violations=violations)


def kernel_contains(m: SamplingSet, u) -> bool:
    """True iff the signal vanishes on every sampled node."""
    u = np.asarray(u, dtype=np.float64)
    if u.ndim != 1 or (m.nodes.size and m.nodes[-1] >= u.size):
        raise DimensionMismatch("signal too short for the sampling set")
    return bool((u[m.nodes] == 0.0).all())


def _edge_id_array(g: DataGraph, edge_ids):
    s = np.unique(np.asarray(edge_ids, dtype=np.int64))
    if s.size and (s[0] < 0 or s[-1] >= g.edge_count):
        raise InvalidSpec("edge id outside the graph")
    return s


def _check_activatable(g: DataGraph, m: SamplingSet, s):
    if s.size == 0:
        raise DegenerateEdgeSet("empty target edge set")
    sampled = np.zeros(g.node_count, dtype=bool)
    sampled[m.nodes] = True
    if (sampled[g.edge_u[s]] & sampled[g.edge_v[s]]).all():
        raise DegenerateEdgeSet(
            "every target edge has both endpoints sampled; "
            "no kernel direction can activate the edge set"
        )


def nnsp_ratio_estimate(g: DataGraph, m: SamplingSet, edge_ids,
                        restarts=50, steps=400, seed=0) -> NnspEstimate:
    """Search for kernel directions with small off-set/on-set variation ratio.

    Minimizes r(u) = ||(Du)_off||_1 / ||(Du)_on||_1 over signals vanishing on
    the sampling set, by projected subgradient descent with the iterate
    rescaled to unit on-set variation each step.  Starts from single-node
    bumps at unsampled endpoints of the target edges plus seeded random
    directions.  One-sided: the returned ratio upper-bounds the true minimum.
    """
    s = _edge_id_array(g, edge_ids)
    _check_activatable(g, m, s)
    og = orient(g)
    on_mask = np.zeros(g.edge_count, dtype=bool)
    on_mask[s] = True
    off_mask = ~on_mask

    def on_off(u):
        du = np.abs(apply_incidence(og, u))
        return float(du[on_mask].sum()), float(du[off_mask].sum())

    def project(u):
        u = u.copy()
        u[m.nodes] = 0.0
        return u

    sampled = np.zeros(g.node_count, dtype=bool)
    sampled[m.nodes] = True
    bump_nodes = np.unique(np.concatenate([g.edge_u[s], g.edge_v[s]]))
    bump_nodes = bump_nodes[~sampled[bump_nodes]]

    rng = np.random.default_rng(seed)
    starts = []
    for v in bump_nodes:
        e_v = np.zeros(g.node_count)
        e_v[v] = 1.0
        starts.append(e_v)
    for _ in range(restarts):
        starts.append(project(rng.standard_normal(g.node_count)))

    head, tail, w = og.head, og.tail, g.weights
    best_ratio, best_u = np.inf, None

    def consider(u):
        nonlocal best_ratio, best_u
        on, off = on_off(u)
        if on > 1e-12 * max(1.0, off):
            ratio = off / on
            if ratio < best_ratio:
                best_ratio, best_u = ratio, u.copy()

    for u0 in starts:
        u = project(u0)
        on, _ = on_off(u)
        if on <= 0.0:
            consider(u)
            continue
        u = u / on
        consider(u)
        for t in range(steps):
            du = apply_incidence(og, u)
            sgn = np.sign(du)
            on, off = on_off(u)
            if on <= 0.0:
                break
            ratio = off / on
            # subgradient of (off - ratio * on) at unit on-norm
            coeff = w * np.where(off_mask, sgn, -ratio * sgn)
            grad = np.zeros(g.node_count)
            np.add.at(grad, head, coeff)
            np.subtract.at(grad, tail, coeff)
            grad[m.nodes] = 0.0
            gn = float(np.linalg.norm(grad))
            if gn == 0.0:
                break
            u = project(u - (0.5 / np.sqrt(t + 1.0)) * grad / gn)
            on, _ = on_off(u)
            if on <= 1e-14:
                break
            u = u / on
            consider(u)

    if best_u is None:
        raise DegenerateEdgeSet("no kernel direction activating the edge set was found")
    # recompute from the witness so the reported ratio reproduces from raw data
    on, off = on_off(best_u)
    ratio = off / on
    best_u.flags.writeable = False
    return NnspEstimate(edge_ids=s, best_ratio=ratio, witness=best_u,
                        certified_violation=ratio < 2.0)


def nnsp_ratio_exact(g: DataGraph, m: SamplingSet, edge_ids, max_patterns=4096):
    """Exact minimum variation ratio by sign-pattern enumeration (small graphs).

    For each sign pattern of the on-set edge differences, solves the linear
    program minimizing the off-set variation subject to unit signed on-set
    variation, over signals vanishing on the sampling set.  Exact but
    exponential in the edge-set size; intended as a desk-scale oracle.
    Returns ``(ratio, witness)``.
    """
    from scipy.optimize import linprog

    s = _edge_id_array(g, edge_ids)
    _check_activatable(g, m, s)
    if 2 ** (max(s.size - 1, 0)) > max_patterns:
        raise InvalidSpec(f"edge set too large for exact enumeration ({s.size} edges)")

    og = orient(g)
    sampled = np.zeros(g.node_count, dtype=bool)
    sampled[m.nodes] = True
    free = np.flatnonzero(~sampled)
    if free.size == 0:
        raise DegenerateEdgeSet("all nodes are sampled; the kernel is trivial")

    dense = np.zeros((g.edge_count, g.node_count))
    dense[np.arange(g.edge_count), og.head] = g.weights
    dense[np.arange(g.edge_count), og.tail] = -g.weights
    d_free = dense[:, free]
    off = np.setdiff1d(np.arange(g.edge_count), s)
    d_on, d_off = d_free[s], d_free[off]

    n_z, n_t = free.size, off.size
    c = np.concatenate([np.zeros(n_z), np.ones(n_t)])
    a_ub = np.block([[d_off, -np.eye(n_t)], [-d_off, -np.eye(n_t)]])
    b_ub = np.zeros(2 * n_t)
    bounds = [(None, None)] * n_z + [(0, None)] * n_t

    best_val, best_u = np.inf, None
    # patterns s and -s are equivalent (u -> -u); pin the first sign
    for tail_signs in itertools.product((1.0, -1.0), repeat=max(s.size - 1, 0)):
        signs = np.array((1.0,) + tail_signs)
        a_eq = np.concatenate([signs @ d_on, np.zeros(n_t)])[None, :]
        res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=[1.0],
                      bounds=bounds, method="highs")
        if res.status == 0 and res.fun < best_val:
            best_val = res.fun
            best_u = np.zeros(g.node_count)
            best_u[free] = res.x[:n_z]
    if best_u is None:
        raise DegenerateEdgeSet("no kernel direction can activate the edge set")
    du = np.abs(dense @ best_u)
    ratio = float(du[off].sum() / du[s].sum())
    return ratio, best_u


def verify_exact_recovery(g: DataGraph, f: Partition, coeffs, m, iters, tol):
    """Run the solver on a resolved clustered instance and compare to truth.

    Requires the sampling set to resolve the partition (NotResolved
    otherwise).  Returns ``(recovered, max_abs_error)``.
    """
    nodes = m.nodes if isinstance(m, SamplingSet) else np.asarray(m, dtype=np.int64)
    truth = clustered_signal(f, coeffs)
    samples = make_sampling_set(nodes, truth[nodes])
    rep = resolves(g, f, samples)
    if not rep.resolved:
        raise NotResolved(
            f"sampling set does not resolve the partition "
            f"({len(rep.violations)} boundary edge(s) lack witnesses)"
        )
    cfg = SolverConfig(max_iterations=iters, history_stride=iters)
    report = slp_solve(g, samples, cfg, truth=truth)
    max_err = float(np.max(np.abs(report.labels - truth)))
    return max_err <= tol, max_err


def min_clustered_tv(g: DataGraph, f: Partition, x, restarts=8, seed=0, max_rounds=200):
    """Minimize tv(x - clustered(a)) over per-cluster coefficients a.

    The objective is convex piecewise-linear in a; coordinate descent with
    exact weighted-median line searches plus multi-start.  Returns
    ``(value, coeffs)``.
    """
    x = as_node_signal(g, x)
    b = boundary(g, f)
    intra = np.setdiff1d(np.arange(g.edge_count), b)
    const = float(np.sum(g.weights[intra]
                         * np.abs(x[g.edge_u[intra]] - x[g.edge_v[intra]])))
    k = f.cluster_count
    if b.size == 0:
        return const, np.zeros(k)

    p = f.cluster_of[g.edge_u[b]]
    q = f.cluster_of[g.edge_v[b]]
    d = x[g.edge_u[b]] - x[g.edge_v[b]]
    w = g.weights[b]

    incident = [[] for _ in range(k)]
    for idx in range(b.size):
        incident[p[idx]].append(idx)
        incident[q[idx]].append(idx)

    def objective(a):
        return const + float(np.sum(w * np.abs(d - (a[p] - a[q]))))

    def weighted_median(targets, weights):
        order = np.argsort(targets)
        t, ww = targets[order], weights[order]
        csum = np.cumsum(ww)
        return float(t[np.searchsorted(csum, 0.5 * csum[-1])])

    def descend(a):
        a = a.copy()
        for _ in range(max_rounds):
            moved = 0.0
            for l in range(k):
                idxs = incident[l]
                if not idxs:
                    continue
                targets = np.empty(len(idxs))
                weights = np.empty(len(idxs))
                for pos, idx in enumerate(idxs):
                    if p[idx] == l:
                        targets[pos] = d[idx] + a[q[idx]]
                    else:
                        targets[pos] = a[p[idx]] - d[idx]
                    weights[pos] = w[idx]
                new = weighted_median(targets, weights)
                moved = max(moved, abs(new - a[l]))
                a[l] = new
            if moved <= 1e-14:
                break
        return a

    rng = np.random.default_rng(seed)
    cluster_means = np.array([
        float(x[f.cluster_of == l].mean()) for l in range(k)
    ])
    starts = [np.zeros(k), cluster_means]
    scale = max(float(np.max(np.abs(x))), 1.0)
    for _ in range(restarts):
        starts.append(rng.uniform(-scale, scale, size=k))

    best_val, best_a = np.inf, None
    for a0 in starts:
        a = descend(a0)
        val = objective(a)
        if val < best_val:
            best_val, best_a = val, a
    return best_val, best_a


def min_clustered_tv_exact(g: DataGraph, f: Partition, x, max_trees=200_000):
    """Exact minimum of tv(x - clustered(a)) by breakpoint enumeration.

    Some optimal coefficient vector makes a spanning set of boundary-edge
    residuals vanish; enumerating spanning trees of the cluster quotient
    multigraph (one assignment per tree, roots at zero) therefore covers an
    optimum.  Desk-scale oracle for cross-checking min_clustered_tv.
    """
    x = as_node_signal(g, x)
    b = boundary(g, f)
    intra = np.setdiff1d(np.arange(g.edge_count), b)
    const = float(np.sum(g.weights[intra]
                         * np.abs(x[g.edge_u[intra]] - x[g.edge_v[intra]])))
    k = f.cluster_count
    if b.size == 0:
        return const, np.zeros(k)

    p = f.cluster_of[g.edge_u[b]]
    q = f.cluster_of[g.edge_v[b]]
    d = x[g.edge_u[b]] - x[g.edge_v[b]]
    w = g.weights[b]

    # connected components of the quotient multigraph
    parent = list(range(k))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for idx in range(b.size):
        ra, rb = find(p[idx]), find(q[idx])
        if ra != rb:
            parent[ra] = rb
    comp_of = np.array([find(l) for l in range(k)])

    def eval_a(a):
        return const + float(np.sum(w * np.abs(d - (a[p] - a[q]))))

    best_total = np.inf
    best_a = np.zeros(k)
    comps = [np.flatnonzero(comp_of == c) for c in np.unique(comp_of)]
    per_comp_choices = []
    for nodes_c in comps:
        in_comp = np.isin(p, nodes_c)
        eidx = np.flatnonzero(in_comp)
        nv = nodes_c.size
        if nv == 1:
            per_comp_choices.append([np.zeros(0, dtype=np.int64)])
            continue
        combos = list(itertools.combinations(eidx.tolist(), nv - 1))
        if len(combos) > max_trees:
            raise InvalidSpec(f"too many spanning-tree candidates ({len(combos)})")
        trees = []
        for combo in combos:
            parent2 = {int(l): int(l) for l in nodes_c}

            def find2(a):
                while parent2[a] != a:
                    parent2[a] = parent2[parent2[a]]
                    a = parent2[a]
                return a

            ok = True
            for idx in combo:
                ra, rb = find2(int(p[idx])), find2(int(q[idx]))
                if ra == rb:
                    ok = False
                    break
                parent2[ra] = rb
            if ok:
                trees.append(np.asarray(combo, dtype=np.int64))
        per_comp_choices.append(trees)

    def assign(tree_per_comp):
        a = np.zeros(k)
        for nodes_c, tree in zip(comps, tree_per_comp):
            if tree.size == 0:
                continue
            adj = {int(l): [] for l in nodes_c}
            for idx in tree:
                adj[int(p[idx])].append((int(q[idx]), -float(d[idx])))
                adj[int(q[idx])].append((int(p[idx]), +float(d[idx])))
            root = int(nodes_c[0])
            stack, seen = [root], {root}
            a[root] = 0.0
            while stack:
                cur = stack.pop()
                for nxt, delta in adj[cur]:
                    if nxt not in seen:
                        # tree edge (p, q) enforces a_p - a_q = d
                        a[nxt] = a[cur] + delta
                        seen.add(nxt)
                        stack.append(nxt)
        return a

    for tree_combo in itertools.product(*per_comp_choices):
        a = assign(tree_combo)
        val = eval_a(a)
        if val < best_total:
            best_total, best_a = val, a
    return best_total, best_a


def verify_approx_bound(g: DataGraph, f: Partition, m, x_true, iters, slack=0.05):
    """Check the TV error bound against six times the best clustered fit.

    Runs the solver with labels sampled from ``x_true``, computes
    lhs = tv(solution - x_true) and rhs = 6 * min_a tv(x_true - clustered(a)),
    and reports ``(lhs, rhs, holds)`` with holds = lhs <= rhs * (1 + slack)
    (the slack absorbs finite-iteration error).  Requires a resolved
    sampling set.
    """
    x_true = as_node_signal(g, x_true)
    nodes = m.nodes if isinstance(m, SamplingSet) else np.asarray(m, dtype=np.int64)
    samples = make_sampling_set(nodes, x_true[nodes])
    rep = resolves(g, f, samples)
    if not rep.resolved:
        raise NotResolved(
            f"sampling set does not resolve the partition "
            f"({len(rep.violations)} boundary edge(s) lack witnesses)"
        )
    cfg = SolverConfig(max_iterations=iters, history_stride=iters)
    report = slp_solve(g, samples, cfg, truth=x_true)
    lhs = tv(g, report.labels - x_true)
    best_val, _ = min_clustered_tv(g, f, x_true)
    rhs = 6.0 * best_val
    return lhs, rhs, bool(lhs <= rhs * (1.0 + slack))
