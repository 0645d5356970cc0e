"""Preconditioned primal-dual solver for label propagation by TV minimization.

The solver finds labels minimizing total variation subject to agreeing with
the given labels on the sampling set.  Each iteration is

    1. x <- x - Gamma D^T y          (node step, Gamma = diag(1/d_i))
    2. x[i] <- label_i on the sampling set
    3. xt <- 2 x - x_prev            (overshoot)
    4. y <- y + Lambda D xt          (edge step, Lambda = diag(1/(2 W_e)))
    5. y[e] <- y[e] / max(1, |y[e]|) (projection onto the unit inf-ball)

with x started at the clamped labels (zero elsewhere) and y at zero.  The
same arithmetic is available in two forms: a vectorized loop over whole
node/edge arrays (`slp_solve`) and a message-passing form whose updates
touch only each node's neighborhood (`slp_solve_message_passing`).  In
deterministic mode both produce bit-identical iterates.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .errors import (
    DisconnectedGraph,
    EmptySamplingSet,
    InvalidSpec,
    IsolatedNode,
    NonFiniteIterate,
)
from .graph import (
    DataGraph,
    OrientedGraph,
    apply_incidence,
    apply_incidence_transpose,
    connected_components,
    orient,
)
from .signals import SamplingSet, as_node_signal, check_samples, nmse, tv


@dataclasses.dataclass(frozen=True)
class FixedIterations:
    """Run exactly max_iterations iterations."""


@dataclasses.dataclass(frozen=True)
class ObjectiveDecrease:
    """Stop once the relative TV decrease over `window` iterations drops below tol."""

    tol: float
    window: int = 10

    def __post_init__(self):
        if not self.tol > 0:
            raise InvalidSpec("ObjectiveDecrease tol must be > 0")
        if self.window < 1:
            raise InvalidSpec("ObjectiveDecrease window must be >= 1")


@dataclasses.dataclass(frozen=True)
class SolverConfig:
    max_iterations: int
    history_stride: int = 1
    stopping: object = FixedIterations()
    deterministic: bool = True

    def __post_init__(self):
        if self.max_iterations < 1:
            raise InvalidSpec("max_iterations must be >= 1")
        if self.history_stride < 1:
            raise InvalidSpec("history_stride must be >= 1")


@dataclasses.dataclass(frozen=True)
class Preconditioners:
    """Diagonal step sizes: gamma[i] = 1/d_i over nodes, lam[e] = 1/(2 W_e) over edges."""

    gamma: np.ndarray
    lam: np.ndarray


@dataclasses.dataclass(frozen=True)
class SlpState:
    """Solver state after iteration k (x clamped, y clipped)."""

    k: int
    x_hat: np.ndarray
    y_hat: np.ndarray
    x_prev: np.ndarray


@dataclasses.dataclass(frozen=True)
class HistoryRecord:
    k: int
    tv: float
    nmse: float | None
    max_abs_dual: float | None


@dataclasses.dataclass(frozen=True)
class SolveReport:
    labels: np.ndarray
    iterations_run: int
    history: list


def preconditioners(g: DataGraph) -> Preconditioners:
    """Per-node and per-edge diagonal step sizes; requires every degree > 0."""
    zero = g.degrees == 0.0
    if zero.any():
        i = int(np.flatnonzero(zero)[0])
        raise IsolatedNode(f"node {i} has no incident edges; step size 1/d_i is undefined")
    gamma = 1.0 / g.degrees
    lam = 1.0 / (2.0 * g.weights)
    gamma.flags.writeable = False
    lam.flags.writeable = False
    return Preconditioners(gamma=gamma, lam=lam)


def check_convergence_condition(g: DataGraph, tol=1e-10, min_iterations=100,
                                max_iterations=200_000, seed=0x5EED):
    """Estimate the scaled operator norm governing step-size admissibility.

    Runs matrix-free power iteration for the top singular value of
    ``Gamma^(1/2) D^T Lambda^(1/2)`` and returns ``(estimate, satisfied)``
    with ``satisfied = estimate < 1``.  The true norm never exceeds 1 for
    these step sizes (it equals 1 exactly on bipartite graphs), and Rayleigh
    quotients approach it from below; the estimate is shaved by a few ulps so
    rounding cannot push it above the true value.
    """
    pre = preconditioners(g)
    og = orient(g)
    sqrt_gamma = np.sqrt(pre.gamma)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(g.node_count)
    sigma = 0.0
    for it in range(1, max_iterations + 1):
        t = sqrt_gamma * v
        s = pre.lam * apply_incidence(og, t)
        r = sqrt_gamma * apply_incidence_transpose(og, s)
        denom = float(np.dot(v, v))
        rayleigh = float(np.dot(v, r)) / denom
        sigma_new = float(np.sqrt(max(rayleigh, 0.0)))
        norm_r = float(np.linalg.norm(r))
        if norm_r == 0.0:
            v = rng.standard_normal(g.node_count)
            continue
        v = r / norm_r
        if it >= min_iterations and abs(sigma_new - sigma) <= tol * max(sigma_new, 1e-30):
            sigma = sigma_new
            break
        sigma = sigma_new
    estimate = sigma * (1.0 - 1e-13)
    return estimate, estimate < 1.0


def _validate_inputs(g: DataGraph, m: SamplingSet):
    if m.size == 0:
        raise EmptySamplingSet("sampling set is empty")
    check_samples(g, m)
    comps = connected_components(g)
    if len(comps) > 1:
        sizes = sorted((len(c) for c in comps), reverse=True)
        raise DisconnectedGraph(
            f"graph has {len(comps)} connected components (sizes {sizes[:8]}...); "
            "split it per component before solving"
        )


class _History:
    """Shared history/stopping bookkeeping for the solver loops."""

    def __init__(self, g, truth, cfg):
        self.g = g
        self.truth = as_node_signal(g, truth) if truth is not None else None
        self.stride = cfg.history_stride
        self.stopping = cfg.stopping
        self.records = []
        self._tvs = []

    def after_iteration(self, k, x, y) -> bool:
        """Record if due; return True when the stopping rule fires."""
        need_tv = isinstance(self.stopping, ObjectiveDecrease)
        recorded = k % self.stride == 0
        if recorded or need_tv:
            tv_k = tv(self.g, x)
        if need_tv:
            self._tvs.append(tv_k)
        if recorded:
            self._append(k, tv_k, x, y)
        if need_tv and k > self.stopping.window:
            ref = self._tvs[-1 - self.stopping.window]
            if ref - self._tvs[-1] < self.stopping.tol * max(abs(ref), 1e-30):
                return True
        return False

    def finish(self, k, x, y):
        if not self.records or self.records[-1].k != k:
            self._append(k, tv(self.g, x), x, y)

    def _append(self, k, tv_k, x, y):
        err = nmse(x, self.truth) if self.truth is not None else None
        if y is None:
            max_dual = None
        else:
            max_dual = float(np.max(np.abs(y))) if y.size else 0.0
        self.records.append(HistoryRecord(k=k, tv=tv_k, nmse=err, max_abs_dual=max_dual))


def _initial_state(base, m, x0, y0):
    if x0 is None:
        x = np.zeros(base.node_count)
        x[m.nodes] = m.labels
    else:
        x = as_node_signal(base, x0).copy()
    if y0 is None:
        y = np.zeros(base.edge_count)
    else:
        y = np.asarray(y0, dtype=np.float64).copy()
        if y.shape != (base.edge_count,):
            raise InvalidSpec(f"y0 shape {y.shape} != ({base.edge_count},)")
    return x, y


def slp_solve(g, m: SamplingSet, cfg: SolverConfig, truth=None, on_iteration=None,
              x0=None, y0=None) -> SolveReport:
    """Run the primal-dual iteration with whole-array updates.

    `g` may be a DataGraph (oriented canonically) or an OrientedGraph.
    `truth`, when given, adds an NMSE column to the history.  `on_iteration`
    is an optional diagnostic callback receiving an SlpState after every
    iteration.  `x0`/`y0` warm-start the iteration in place of the default
    clamped-zero initialization.
    """
    og = g if isinstance(g, OrientedGraph) else orient(g)
    base = og.base
    _validate_inputs(base, m)
    pre = preconditioners(base)
    gamma, lam = pre.gamma, pre.lam
    det = cfg.deterministic

    x, y = _initial_state(base, m, x0, y0)
    hist = _History(base, truth, cfg)

    k = 0
    for k in range(1, cfg.max_iterations + 1):
        with np.errstate(invalid="ignore", over="ignore"):
            aty = apply_incidence_transpose(og, y, deterministic=det)
            x_new = x - gamma * aty
            x_new[m.nodes] = m.labels
            xt = 2.0 * x_new - x
            v = y + lam * apply_incidence(og, xt)
            y = v / np.maximum(np.abs(v), 1.0)
        if not np.isfinite(x_new).all():
            raise NonFiniteIterate(f"non-finite label iterate at iteration {k}")
        x, x_prev = x_new, x
        if on_iteration is not None:
            on_iteration(SlpState(k=k, x_hat=x, y_hat=y, x_prev=x_prev))
        if hist.after_iteration(k, x, y):
            break
    hist.finish(k, x, y)
    return SolveReport(labels=x, iterations_run=k, history=hist.records)


def _oriented_adjacency(og: OrientedGraph):
    """Per-node incident-edge lists, split by orientation, in ascending edge order."""
    n = og.base.node_count
    e = og.base.edge_count
    order_h = np.argsort(og.head, kind="stable")
    order_t = np.argsort(og.tail, kind="stable")
    head_ptr = np.zeros(n + 1, dtype=np.int64)
    tail_ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(og.head, minlength=n), out=head_ptr[1:])
    np.cumsum(np.bincount(og.tail, minlength=n), out=tail_ptr[1:])
    head_edges = np.arange(e, dtype=np.int64)[order_h]
    tail_edges = np.arange(e, dtype=np.int64)[order_t]
    return head_ptr, head_edges, tail_ptr, tail_edges


def _node_phase(nodes, x, y, x_new, gamma, w, head_ptr, head_edges, tail_ptr, tail_edges):
    """Local node update: x_new[i] = x[i] - gamma_i (sum_+ W_e y_e - sum_- W_e y_e).

    Touches, per node, only the dual values on its incident edges.
    """
    for i in nodes:
        p = 0.0
        for pos in range(head_ptr[i], head_ptr[i + 1]):
            e = head_edges[pos]
            p += w[e] * y[e]
        q = 0.0
        for pos in range(tail_ptr[i], tail_ptr[i + 1]):
            e = tail_edges[pos]
            q += w[e] * y[e]
        x_new[i] = x[i] - gamma[i] * (p - q)


def _edge_phase(edges, y, xt, w, lam, head, tail):
    """Local edge update with clipping: y_e <- clip(y_e + lam_e W_e (xt[h] - xt[t]))."""
    for e in edges:
        d = w[e] * (xt[head[e]] - xt[tail[e]])
        v = y[e] + lam[e] * d
        a = abs(v)
        y[e] = v / a if a > 1.0 else v


def slp_solve_message_passing(g, m: SamplingSet, cfg: SolverConfig, truth=None,
                              on_iteration=None, x0=None, y0=None) -> SolveReport:
    """Same iteration as slp_solve, expressed as per-node and per-edge local updates.

    In deterministic mode the output (labels, history, iteration count) is
    bit-identical to slp_solve: each node accumulates its head-side and
    tail-side sums in the same ascending edge order the vectorized reduction
    uses.  The state arrays handed to `on_iteration` are live buffers reused
    between iterations; copy them if they must outlive the callback.
    """
    og = g if isinstance(g, OrientedGraph) else orient(g)
    base = og.base
    _validate_inputs(base, m)
    pre = preconditioners(base)
    gamma, lam, w = pre.gamma, pre.lam, base.weights
    head, tail = og.head, og.tail
    head_ptr, head_edges, tail_ptr, tail_edges = _oriented_adjacency(og)
    n, e = base.node_count, base.edge_count

    x, y = _initial_state(base, m, x0, y0)
    x_new = np.empty(n)
    xt = np.empty(n)
    hist = _History(base, truth, cfg)

    k = 0
    for k in range(1, cfg.max_iterations + 1):
        _node_phase(range(n), x, y, x_new, gamma, w,
                    head_ptr, head_edges, tail_ptr, tail_edges)
        for idx, lab in zip(m.nodes, m.labels):
            x_new[idx] = lab
        for i in range(n):
            xt[i] = 2.0 * x_new[i] - x[i]
        _edge_phase(range(e), y, xt, w, lam, head, tail)
        if not np.isfinite(x_new).all():
            raise NonFiniteIterate(f"non-finite label iterate at iteration {k}")
        x, x_new = x_new, x
        if on_iteration is not None:
            on_iteration(SlpState(k=k, x_hat=x, y_hat=y, x_prev=x_new))
        if hist.after_iteration(k, x, y):
            break
    hist.finish(k, x, y)
    return SolveReport(labels=x.copy(), iterations_run=k, history=hist.records)


def suboptimality_trace(report: SolveReport, tv_star: float):
    """TV suboptimality per recorded iteration: [(k, tv_k - tv_star), ...].

    tv_star should come from a much longer reference run (>= 50x iterations).
    """
    return [(rec.k, rec.tv - tv_star) for rec in report.history]


def check_rate_envelope(trace, fit_points=10, slack=0.10):
    """Fit c1 on early iterations and test the c1/k decay envelope later on.

    c1 is the max of k * suboptimality over the first `fit_points` recorded
    points; returns ``(c1, holds)`` where holds means every later point
    satisfies suboptimality <= (1 + slack) * c1 / k.
    """
    if not trace:
        raise InvalidSpec("empty suboptimality trace")
    fit = trace[:fit_points]
    c1 = max(k * s for k, s in fit)
    holds = all(s <= (1.0 + slack) * c1 / k for k, s in trace[fit_points:])
    return c1, holds


def write_history_csv(path, history):
    """Write history records as ``k,tv,nmse,max_abs_dual`` (blank for missing)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("k,tv,nmse,max_abs_dual\n")
        for rec in history:
            err = repr(rec.nmse) if rec.nmse is not None else ""
            dual = repr(rec.max_abs_dual) if rec.max_abs_dual is not None else ""
            fh.write(f"{rec.k},{rec.tv!r},{err},{dual}\n")


def read_history_csv(path):
    from .errors import FileFormatError

    records = []
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline().strip()
        if first != "k,tv,nmse,max_abs_dual":
            raise FileFormatError(f"unexpected history header {first!r}", path=path, line=1)
        for lineno, raw in enumerate(fh, start=2):
            line = raw.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise FileFormatError(f"expected 4 fields, got {len(parts)}", path=path, line=lineno)
            try:
                records.append(HistoryRecord(
                    k=int(parts[0]),
                    tv=float(parts[1]),
                    nmse=float(parts[2]) if parts[2] else None,
                    max_abs_dual=float(parts[3]) if parts[3] else None,
                ))
            except ValueError as exc:
                raise FileFormatError(str(exc), path=path, line=lineno) from None
    return records
