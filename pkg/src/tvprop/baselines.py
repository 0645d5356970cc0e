"""Ordinary label propagation: clamped Laplacian-quadratic minimization.

Solved by synchronous Jacobi sweeps: every unlabeled node moves to the
weighted average of its neighbors while labeled nodes stay clamped.  The
converged solution is the harmonic extension of the given labels.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .errors import InvalidSpec
from .graph import DataGraph
from .signals import SamplingSet
from .solver import SolveReport, SolverConfig, _History, _validate_inputs


@dataclasses.dataclass(frozen=True)
class LpConfig:
    max_iterations: int
    tol: float = 1e-12
    history_stride: int = 1
    deterministic: bool = True

    def __post_init__(self):
        if self.max_iterations < 1:
            raise InvalidSpec("max_iterations must be >= 1")
        if not self.tol > 0:
            raise InvalidSpec("tol must be > 0")
        if self.history_stride < 1:
            raise InvalidSpec("history_stride must be >= 1")


def _neighbor_weighted_sum(g: DataGraph, x, deterministic):
    wx_u = g.weights * x[g.edge_u]
    wx_v = g.weights * x[g.edge_v]
    if deterministic:
        s = np.zeros(g.node_count)
        np.add.at(s, g.edge_u, wx_v)
        np.add.at(s, g.edge_v, wx_u)
    else:
        s = (np.bincount(g.edge_u, weights=wx_v, minlength=g.node_count)
             + np.bincount(g.edge_v, weights=wx_u, minlength=g.node_count))
    return s


def lp_solve(g: DataGraph, m: SamplingSet, cfg: LpConfig, truth=None) -> SolveReport:
    """Jacobi sweeps for the clamped harmonic problem.

    Stops after max_iterations sweeps or once the sup-norm change of the
    unlabeled values in one sweep drops below tol; at that point every
    unlabeled node satisfies the averaging optimality condition to within
    tol.  History records use the same schema as the TV solver with an empty
    dual column.
    """
    _validate_inputs(g, m)
    labeled = np.zeros(g.node_count, dtype=bool)
    labeled[m.nodes] = True
    unlabeled = np.flatnonzero(~labeled)

    x = np.zeros(g.node_count)
    x[m.nodes] = m.labels
    hist = _History(g, truth, SolverConfig(max_iterations=cfg.max_iterations,
                                           history_stride=cfg.history_stride))

    k = 0
    for k in range(1, cfg.max_iterations + 1):
        s = _neighbor_weighted_sum(g, x, cfg.deterministic)
        x_new = x.copy()
        if unlabeled.size:
            x_new[unlabeled] = s[unlabeled] / g.degrees[unlabeled]
        delta = float(np.max(np.abs(x_new[unlabeled] - x[unlabeled]))) if unlabeled.size else 0.0
        x = x_new
        hist.after_iteration(k, x, _NO_DUAL)
        if delta < cfg.tol:
            break
    hist.finish(k, x, _NO_DUAL)
    return SolveReport(labels=x, iterations_run=k, history=hist.records)


_NO_DUAL = None
