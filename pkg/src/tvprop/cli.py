"""Command-line front end: generate instances, solve, segment, check, report.

Every command writes a ``manifest.json`` beside its outputs recording the
tool version, all parameters, seeds, and wall-clock duration — enough to
re-run it.  Exit codes: 0 success, 2 usage/spec error, 3 check failed,
4 IO/parse error, 5 numerical abort.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .baselines import LpConfig, lp_solve
from .errors import (
    FileFormatError,
    InvalidSpec,
    NonFiniteIterate,
    TvpropError,
)
from .generators import (
    ChainSpec,
    PlantedPartitionSpec,
    chain_instance,
    image_grid_graph,
    make_image_grid_spec,
    planted_partition_instance,
    read_pgm,
    read_ppm,
    segment,
    synthetic_two_tone,
    write_mask_pgm,
    write_pgm,
    write_ppm,
)
from .graph import load_edge_list, save_edge_list
from .signals import (
    boundary,
    load_labels_csv,
    load_partition_csv,
    load_samples_csv,
    make_partition,
    make_sampling_set,
    save_labels_csv,
    save_partition_csv,
    save_samples_csv,
)
from .solver import (
    SolverConfig,
    read_history_csv,
    slp_solve,
    slp_solve_message_passing,
    write_history_csv,
)
from .theory import nnsp_ratio_estimate, nnsp_ratio_exact, resolves

EXIT_OK = 0
EXIT_SPEC = 2
EXIT_CHECK_FAILED = 3
EXIT_IO = 4
EXIT_NUMERIC = 5


def _write_manifest(out_dir, command, parameters, outputs, started):
    manifest = {
        "tool": "tvprop",
        "version": __version__,
        "command": command,
        "parameters": parameters,
        "outputs": sorted(outputs),
        "duration_s": round(time.perf_counter() - started, 6),
    }
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _params(args, exclude=("func", "out")):
    return {k: v for k, v in sorted(vars(args).items()) if k not in exclude}


def _load_graph(path):
    g, original = load_edge_list(path)
    reverse = {int(o): k for k, o in enumerate(original)}
    return g, original, reverse


def _map_ids(ids, reverse, what):
    try:
        return np.asarray([reverse[int(i)] for i in ids], dtype=np.int64)
    except KeyError as exc:
        raise InvalidSpec(f"{what} references node id {exc.args[0]} absent from the graph") from None


def _load_partition_for(path, g, reverse):
    ids, clusters = load_partition_csv(path)
    dense = _map_ids(ids, reverse, "partition")
    if dense.size != g.node_count or np.unique(dense).size != g.node_count:
        raise InvalidSpec("partition file must assign every graph node exactly once")
    cluster_of = np.empty(g.node_count, dtype=np.int64)
    cluster_of[dense] = clusters
    return make_partition(cluster_of)


def _load_truth_for(path, g, reverse):
    ids, values = load_labels_csv(path)
    dense = _map_ids(ids, reverse, "truth labels")
    if dense.size != g.node_count or np.unique(dense).size != g.node_count:
        raise InvalidSpec("truth file must assign every graph node exactly once")
    truth = np.empty(g.node_count)
    truth[dense] = values
    return truth


def _load_samples_for(path, g, reverse):
    raw = load_samples_csv(path)
    dense = _map_ids(raw.nodes, reverse, "sampling set")
    samples = make_sampling_set(dense, raw.labels)
    if samples.nodes[-1] >= g.node_count:
        raise InvalidSpec("sampling set references a node outside the graph")
    return samples


# -- generate -----------------------------------------------------------------


def _emit_instance(args, g, f, truth, samples, command, started):
    os.makedirs(args.out, exist_ok=True)
    save_edge_list(os.path.join(args.out, "edges.tsv"), g)
    save_labels_csv(os.path.join(args.out, "truth.csv"), truth)
    save_partition_csv(os.path.join(args.out, "partition.csv"), f)
    save_samples_csv(os.path.join(args.out, "samples.csv"), samples)
    outputs = ["edges.tsv", "truth.csv", "partition.csv", "samples.csv"]
    _write_manifest(args.out, command, _params(args), outputs, started)
    print(f"wrote {', '.join(outputs)} to {args.out}")
    return EXIT_OK


def cmd_generate_chain(args):
    started = time.perf_counter()
    spec = ChainSpec(n=args.n, cluster_size=args.cluster_size,
                     w_intra=args.w_intra, w_inter=args.w_inter,
                     coeff_low=args.coeff_low, coeff_high=args.coeff_high,
                     placement=args.placement, seed=args.seed)
    g, f, truth, samples = chain_instance(spec)
    return _emit_instance(args, g, f, truth, samples, "generate chain", started)


def cmd_generate_planted(args):
    started = time.perf_counter()
    spec = PlantedPartitionSpec(n=args.n, clusters=args.clusters,
                                p_in=args.p_in, p_out=args.p_out,
                                w_lo=args.w_lo, w_hi=args.w_hi, seed=args.seed)
    g, f, truth, sampler = planted_partition_instance(spec)
    sample_seed = args.sample_seed if args.sample_seed is not None else args.seed + 1
    samples = sampler(args.samples, sample_seed)
    return _emit_instance(args, g, f, truth, samples, "generate planted", started)


def cmd_generate_grid(args):
    started = time.perf_counter()
    pixels, trimap, truth_mask = synthetic_two_tone(
        width=args.width, height=args.height,
        band_halfwidth=args.band_halfwidth, seed=args.seed)
    os.makedirs(args.out, exist_ok=True)
    write_ppm(os.path.join(args.out, "image.ppm"), pixels)
    write_pgm(os.path.join(args.out, "trimap.pgm"), trimap)
    write_mask_pgm(os.path.join(args.out, "truth_mask.pgm"), truth_mask)
    outputs = ["image.ppm", "trimap.pgm", "truth_mask.pgm"]
    _write_manifest(args.out, "generate grid", _params(args), outputs, started)
    print(f"wrote {', '.join(outputs)} to {args.out}")
    return EXIT_OK


# -- solve / segment ----------------------------------------------------------


def _default_stride(n):
    return 1 if n <= 100_000 else 10


def cmd_solve(args):
    started = time.perf_counter()
    g, original, reverse = _load_graph(args.graph)
    samples = _load_samples_for(args.samples, g, reverse)
    truth = _load_truth_for(args.truth, g, reverse) if args.truth else None
    stride = args.history_stride or _default_stride(g.node_count)
    deterministic = args.threads <= 1

    if args.method == "slp":
        cfg = SolverConfig(max_iterations=args.iters, history_stride=stride,
                           deterministic=deterministic)
        solve = slp_solve_message_passing if args.message_passing else slp_solve
        report = solve(g, samples, cfg, truth=truth)
    else:
        cfg = LpConfig(max_iterations=args.iters, tol=args.lp_tol,
                       history_stride=stride, deterministic=deterministic)
        report = lp_solve(g, samples, cfg, truth=truth)

    os.makedirs(args.out, exist_ok=True)
    save_labels_csv(os.path.join(args.out, "labels.csv"), report.labels, ids=original)
    write_history_csv(os.path.join(args.out, "history.csv"), report.history)
    _write_manifest(args.out, "solve", _params(args),
                    ["labels.csv", "history.csv"], started)
    last = report.history[-1]
    extra = f", nmse={last.nmse:.6g}" if last.nmse is not None else ""
    print(f"{args.method}: {report.iterations_run} iterations, tv={last.tv:.6g}{extra}")
    return EXIT_OK


def cmd_segment(args):
    started = time.perf_counter()
    pixels = read_ppm(args.image)
    trimap = read_pgm(args.trimap)
    spec = make_image_grid_spec(pixels, trimap)
    g, samples = image_grid_graph(spec)
    stride = args.history_stride or _default_stride(g.node_count)
    cfg = SolverConfig(max_iterations=args.iters, history_stride=stride,
                       deterministic=args.threads <= 1)
    report = slp_solve(g, samples, cfg)
    mask = segment(report.labels, spec.trimap)

    os.makedirs(args.out, exist_ok=True)
    write_mask_pgm(os.path.join(args.out, "mask.pgm"), mask)
    write_history_csv(os.path.join(args.out, "history.csv"), report.history)
    _write_manifest(args.out, "segment", _params(args),
                    ["mask.pgm", "history.csv"], started)
    print(f"segmented {spec.width}x{spec.height} image: "
          f"{int(mask.sum())} foreground pixels")
    return EXIT_OK


# -- check --------------------------------------------------------------------


def _emit_check(args, payload, started, failed):
    text = json.dumps(payload, indent=2, sort_keys=True)
    print(text)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "report.json"), "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        _write_manifest(args.out, payload["check"], _params(args), ["report.json"], started)
    return EXIT_CHECK_FAILED if failed else EXIT_OK


def cmd_check_resolve(args):
    started = time.perf_counter()
    g, original, reverse = _load_graph(args.graph)
    f = _load_partition_for(args.partition, g, reverse)
    samples = _load_samples_for(args.samples, g, reverse)
    rep = resolves(g, f, samples)
    payload = {
        "check": "resolve",
        "resolved": rep.resolved,
        "boundary_edges": len(rep.witnesses) + len(rep.violations),
        "witnesses": [
            {"i": int(original[w.i]), "j": int(original[w.j]),
             "m": int(original[w.m]), "n": int(original[w.n]),
             "m_self": w.m_self, "n_self": w.n_self}
            for w in rep.witnesses
        ],
        "violations": [
            {"i": int(original[v.i]), "j": int(original[v.j]), "weight": v.weight,
             "missing": [int(original[s]) for s in v.missing]}
            for v in rep.violations
        ],
    }
    return _emit_check(args, payload, started, failed=not rep.resolved)


def cmd_check_nnsp(args):
    started = time.perf_counter()
    g, original, reverse = _load_graph(args.graph)
    f = _load_partition_for(args.partition, g, reverse)
    samples = _load_samples_for(args.samples, g, reverse)
    edge_ids = boundary(g, f)
    if args.exact:
        ratio, witness = nnsp_ratio_exact(g, samples, edge_ids)
        certified = ratio < 2.0
        mode = "exact"
    else:
        est = nnsp_ratio_estimate(g, samples, edge_ids,
                                  restarts=args.restarts, steps=args.steps, seed=args.seed)
        ratio, witness, certified = est.best_ratio, est.witness, est.certified_violation
        mode = "estimate"
    support = np.flatnonzero(np.abs(witness) > 1e-12)
    payload = {
        "check": "nnsp",
        "mode": mode,
        "edge_set_size": int(edge_ids.size),
        "best_ratio": float(ratio),
        "certified_violation": bool(certified),
        "witness": [[int(original[i]), float(witness[i])] for i in support],
    }
    return _emit_check(args, payload, started, failed=bool(certified))


# -- report -------------------------------------------------------------------


def _parse_named(pairs, what):
    out = {}
    for item in pairs or []:
        if "=" not in item:
            raise InvalidSpec(f"{what} expects NAME=PATH, got {item!r}")
        name, path = item.split("=", 1)
        out[name] = path
    return out


def cmd_report(args):
    from . import report as figures

    started = time.perf_counter()
    histories = {name: read_history_csv(path)
                 for name, path in _parse_named(args.history, "--history").items()}
    labels = {}
    for name, path in _parse_named(args.labels, "--labels").items():
        ids, values = load_labels_csv(path)
        labels[name] = values[np.argsort(ids)]
    truth = None
    if args.truth:
        ids, values = load_labels_csv(args.truth)
        truth = values[np.argsort(ids)]
    if not histories and not labels:
        raise InvalidSpec("report needs at least one --history or --labels input")

    os.makedirs(args.out, exist_ok=True)
    written = []
    if histories:
        written += figures.plot_history(histories, args.out)
        written.append(figures.write_summary_csv(
            os.path.join(args.out, "summary.csv"), histories))
    if labels:
        written += figures.plot_labels(labels, truth, args.out)
    names = [os.path.basename(p) for p in written]
    _write_manifest(args.out, "report", _params(args), names, started)
    print(f"wrote {', '.join(sorted(names))} to {args.out}")
    return EXIT_OK


# -- parser -------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(
        prog="tvprop",
        description="Label propagation on weighted graphs by TV minimization",
    )
    p.add_argument("--version", action="version", version=f"tvprop {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a benchmark instance to a directory")
    gsub = gen.add_subparsers(dest="kind", required=True)

    chain = gsub.add_parser("chain", help="weighted chain of consecutive clusters")
    chain.add_argument("--n", type=int, required=True)
    chain.add_argument("--cluster-size", type=int, default=5)
    chain.add_argument("--w-intra", type=float, default=2.0)
    chain.add_argument("--w-inter", type=float, default=1.0)
    chain.add_argument("--coeff-low", type=float, default=1.0)
    chain.add_argument("--coeff-high", type=float, default=5.0)
    chain.add_argument("--placement", choices=["boundary", "center", "random"],
                       default="boundary")
    chain.add_argument("--seed", type=int, default=None)
    chain.add_argument("--out", required=True)
    chain.set_defaults(func=cmd_generate_chain)

    planted = gsub.add_parser("planted", help="planted-partition community graph")
    planted.add_argument("--n", type=int, required=True)
    planted.add_argument("--clusters", type=int, required=True)
    planted.add_argument("--p-in", type=float, default=0.75)
    planted.add_argument("--p-out", type=float, default=0.02)
    planted.add_argument("--w-lo", type=float, default=1.0)
    planted.add_argument("--w-hi", type=float, default=2.0)
    planted.add_argument("--seed", type=int, default=0)
    planted.add_argument("--samples", type=int, default=9)
    planted.add_argument("--sample-seed", type=int, default=None)
    planted.add_argument("--out", required=True)
    planted.set_defaults(func=cmd_generate_planted)

    grid = gsub.add_parser("grid", help="synthetic two-tone image with trimap")
    grid.add_argument("--width", type=int, default=32)
    grid.add_argument("--height", type=int, default=32)
    grid.add_argument("--band-halfwidth", type=int, default=1)
    grid.add_argument("--seed", type=int, default=0)
    grid.add_argument("--out", required=True)
    grid.set_defaults(func=cmd_generate_grid)

    solve = sub.add_parser("solve", help="propagate labels over a graph")
    solve.add_argument("--method", choices=["slp", "lp"], required=True)
    solve.add_argument("--graph", required=True)
    solve.add_argument("--samples", required=True)
    solve.add_argument("--truth", default=None)
    solve.add_argument("--iters", type=int, required=True)
    solve.add_argument("--history-stride", type=int, default=None)
    solve.add_argument("--message-passing", action="store_true",
                       help="run the per-node/per-edge update form (slp only)")
    solve.add_argument("--lp-tol", type=float, default=1e-12)
    solve.add_argument("--threads", type=int, default=1,
                       help=">1 permits reassociated reductions (non-deterministic mode)")
    solve.add_argument("--out", required=True)
    solve.set_defaults(func=cmd_solve)

    seg = sub.add_parser("segment", help="foreground/background segmentation of a PPM image")
    seg.add_argument("--image", required=True)
    seg.add_argument("--trimap", required=True)
    seg.add_argument("--iters", type=int, default=500)
    seg.add_argument("--history-stride", type=int, default=None)
    seg.add_argument("--threads", type=int, default=1)
    seg.add_argument("--out", required=True)
    seg.set_defaults(func=cmd_segment)

    check = sub.add_parser("check", help="recovery-condition checks")
    csub = check.add_subparsers(dest="which", required=True)

    resolve = csub.add_parser("resolve", help="boundary-witness condition")
    resolve.add_argument("--graph", required=True)
    resolve.add_argument("--partition", required=True)
    resolve.add_argument("--samples", required=True)
    resolve.add_argument("--out", default=None)
    resolve.set_defaults(func=cmd_check_resolve)

    nnsp = csub.add_parser("nnsp", help="nullspace ratio search on the partition boundary")
    nnsp.add_argument("--graph", required=True)
    nnsp.add_argument("--partition", required=True)
    nnsp.add_argument("--samples", required=True)
    nnsp.add_argument("--restarts", type=int, default=50)
    nnsp.add_argument("--steps", type=int, default=400)
    nnsp.add_argument("--seed", type=int, default=0)
    nnsp.add_argument("--exact", action="store_true",
                      help="sign-pattern enumeration (small graphs only)")
    nnsp.add_argument("--out", default=None)
    nnsp.set_defaults(func=cmd_check_nnsp)

    rep = sub.add_parser("report", help="render figures and a summary from run outputs")
    rep.add_argument("--history", action="append", metavar="NAME=PATH")
    rep.add_argument("--labels", action="append", metavar="NAME=PATH")
    rep.add_argument("--truth", default=None)
    rep.add_argument("--out", required=True)
    rep.set_defaults(func=cmd_report)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileFormatError as exc:
        print(f"tvprop: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"tvprop: {exc}", file=sys.stderr)
        return EXIT_IO
    except NonFiniteIterate as exc:
        print(f"tvprop: numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except TvpropError as exc:
        print(f"tvprop: {exc}", file=sys.stderr)
        return EXIT_SPEC


if __name__ == "__main__":
    sys.exit(main())
