"""Render experiment figures and summary tables from solver outputs.

Figures are written as PNG files next to a delimited summary; input is one
or more history CSVs (and optionally label CSVs) as produced by the CLI.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def plot_history(histories, out_dir):
    """Plot TV and (when present) NMSE versus iteration for each named run.

    `histories` maps a run name to a list of HistoryRecord.  Returns the
    list of files written.
    """
    written = []

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for name, records in histories.items():
        ks = [r.k for r in records]
        ax.plot(ks, [r.tv for r in records], label=name)
    ax.set_xlabel("iteration")
    ax.set_ylabel("total variation")
    ax.set_yscale("log")
    ax.legend()
    ax.grid(True, alpha=0.3)
    path = os.path.join(out_dir, "tv_vs_iteration.png")
    fig.savefig(path, dpi=130, bbox_inches="tight")
    plt.close(fig)
    written.append(path)

    with_nmse = {
        name: [(r.k, r.nmse) for r in records if r.nmse is not None]
        for name, records in histories.items()
    }
    with_nmse = {name: pts for name, pts in with_nmse.items() if pts}
    if with_nmse:
        fig, ax = plt.subplots(figsize=(7, 4.5))
        for name, pts in with_nmse.items():
            ax.plot([k for k, _ in pts], [e for _, e in pts], label=name)
        ax.set_xlabel("iteration")
        ax.set_ylabel("NMSE")
        ax.set_yscale("log")
        ax.legend()
        ax.grid(True, alpha=0.3)
        path = os.path.join(out_dir, "nmse_vs_iteration.png")
        fig.savefig(path, dpi=130, bbox_inches="tight")
        plt.close(fig)
        written.append(path)
    return written


def plot_labels(labels_by_name, truth, out_dir, max_nodes=2000):
    """Overlay learned label values (and the truth) against node index."""
    fig, ax = plt.subplots(figsize=(8, 4.5))
    if truth is not None:
        n = min(len(truth), max_nodes)
        ax.plot(np.arange(n), truth[:n], "k-", lw=1.0, alpha=0.6, label="truth")
    for name, values in labels_by_name.items():
        n = min(len(values), max_nodes)
        ax.plot(np.arange(n), values[:n], lw=1.0, label=name)
    ax.set_xlabel("node id")
    ax.set_ylabel("label value")
    ax.legend()
    ax.grid(True, alpha=0.3)
    path = os.path.join(out_dir, "labels.png")
    fig.savefig(path, dpi=130, bbox_inches="tight")
    plt.close(fig)
    return [path]


def write_summary_csv(path, histories):
    """One row per run: final iteration, TV, NMSE, max dual magnitude."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("run,iterations,final_tv,final_nmse,final_max_abs_dual\n")
        for name, records in histories.items():
            last = records[-1]
            err = repr(last.nmse) if last.nmse is not None else ""
            dual = repr(last.max_abs_dual) if last.max_abs_dual is not None else ""
            fh.write(f"{name},{last.k},{last.tv!r},{err},{dual}\n")
    return path
