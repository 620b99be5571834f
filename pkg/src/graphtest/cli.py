"""Command-line interface.

Primary outputs go to stdout (or ``--out``); logs go to stderr. Exit codes:
0 success, 1 data or computation error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import data_io
from .data_io import PointSet
from .distance import METRICS, network_distance, pairwise_distances
from .errors import GraphTestError
from .graph import GRAPH_TYPES, build_graph, graph_stats, normality_diagnostics
from .inference import ALL_STATS, PermutationConfig, canonical_stat, run_test
from .nulldist import asymptotic_agreement, bootstrap_moments, permutation_moments

log = logging.getLogger("graphtest")

STAT_CHOICES = ("S", "R0", "Z0", "T1", "T2", "T3", "T4", "degree", "hotelling", "glr", "all")


def _parse_int_list(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _parse_graph_specs(text: str) -> tuple:
    specs = []
    for tok in text.split(","):
        kind, _, k = tok.strip().partition(":")
        if kind not in GRAPH_TYPES or not k.isdigit():
            raise argparse.ArgumentTypeError(f"bad graph spec {tok!r}; use e.g. kmst:5")
        specs.append((kind, int(k)))
    return tuple(specs)


def _emit(text: str, out: str | None) -> None:
    if out:
        data_io._write_text(out, text)
    else:
        sys.stdout.write(text)


def _add_source_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--points", "--input", dest="points", help="points CSV")
    p.add_argument("--distances", help="N x N distance CSV")
    p.add_argument("--networks", help="directed network samples, JSON lines")
    p.add_argument("--metric", default="euclidean", choices=METRICS)
    p.add_argument("--k", type=int, default=5, help="graph density parameter")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graphtest", description=__doc__.splitlines()[0])
    parser.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    parser.add_argument("--x-label", help="label token that marks sample X")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-graph", help="build a similarity graph")
    _add_source_args(p)
    p.add_argument("--graph", default="kmst", choices=GRAPH_TYPES)
    p.add_argument("--out")

    p = sub.add_parser("test", help="run the two-sample tests")
    _add_source_args(p)
    p.add_argument("--graph", default="kmst", help="graph type (kmst|kmdp|knn) or graph JSON path")
    p.add_argument("--labels", required=True)
    p.add_argument("--stat", default="S", choices=STAT_CHOICES)
    p.add_argument("--pvalue", default="all", choices=("exact", "perm", "asymptotic", "all"))
    p.add_argument("--perms", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--exact-threshold", type=int, default=20000)
    p.add_argument("--out")

    p = sub.add_parser("diagnose", help="structural diagnostics of a graph")
    p.add_argument("--graph", required=True, help="graph JSON")
    p.add_argument("--labels", help="optional labels to add null-moment diagnostics")
    p.add_argument("--out")

    p = sub.add_parser("packing", help="log10 packing-count curve")
    p.add_argument("--dmax", type=int, default=100)
    p.add_argument("--out")

    p = sub.add_parser("simulate", help="simulation studies")
    ssub = p.add_subparsers(dest="study", required=True)
    sp = ssub.add_parser("power")
    sp.add_argument("--table", default="1", choices=("1", "2", "3", "6", "7", "custom"))
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--perms", type=int, default=1000)
    sp.add_argument("--skip-mdp", action="store_true", help="omit k-MDP rows (slow)")
    sp.add_argument("--calibration", default="permutation", choices=("permutation", "asymptotic"))
    sp.add_argument("--family", default="normal_location")
    sp.add_argument("--d", type=int, default=10)
    sp.add_argument("--n", type=int, default=50)
    sp.add_argument("--m", type=int, default=50)
    sp.add_argument("--delta", type=float, default=0.0)
    sp.add_argument("--sigma", type=float, default=1.0)
    sp.add_argument("--alpha", type=float, default=0.05)
    sp.add_argument("--graphs", type=_parse_graph_specs, default=(("kmst", 1), ("kmst", 3), ("kmst", 5)))
    sp.add_argument("--stats", default="S,R0")
    sp.add_argument("--out")
    sp = ssub.add_parser("pval-accuracy")
    sp.add_argument("--n", type=_parse_int_list, default=[150])
    sp.add_argument("--m", type=_parse_int_list, default=None, help="defaults to --n")
    sp.add_argument("--d", type=_parse_int_list, default=[10])
    sp.add_argument("--ks", type=_parse_int_list, default=[1, 3, 5])
    sp.add_argument("--runs", type=int, default=100)
    sp.add_argument("--perms", type=int, default=10000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    sp = ssub.add_parser("packing")
    sp.add_argument("--dmax", type=int, default=100)
    sp.add_argument("--out")
    return parser


def _distances(args, parser):
    sources = [s for s in ("points", "distances", "networks") if getattr(args, s, None)]
    if len(sources) > 1:
        parser.error(f"conflicting inputs: {', '.join('--' + s for s in sources)}")
    if not sources:
        parser.error("one of --points, --distances or --networks is required")
    points = None
    if args.points:
        points = data_io.load_points(args.points)
        dist = pairwise_distances(points, args.metric)
    elif args.distances:
        dist = data_io.load_distance_matrix(args.distances)
    else:
        dist = network_distance(data_io.load_network_samples(args.networks))
    return dist, points


def cmd_build_graph(args, parser) -> int:
    dist, _ = _distances(args, parser)
    g = build_graph(dist, args.graph, args.k)
    obj = data_io.graph_to_dict(g)
    obj["config"] = {"graph": args.graph, "k": args.k, "metric": args.metric}
    _emit(data_io.dumps(obj), args.out)
    return 0


def cmd_test(args, parser) -> int:
    points = None
    if args.graph in GRAPH_TYPES:
        dist, points = _distances(args, parser)
        g = build_graph(dist, args.graph, args.k)
        graph_desc = {"graph": args.graph, "k": args.k, "metric": args.metric}
    else:
        if args.points and args.distances:
            parser.error("conflicting inputs: --points, --distances")
        g = data_io.load_graph(args.graph)
        if args.points:
            points = data_io.load_points(args.points)
        graph_desc = {"graph_file": args.graph}
    lab = data_io.load_labels(args.labels, x_label=args.x_label)
    data_io.check_pairing(g.n_nodes, lab)
    stats = list(ALL_STATS) if args.stat == "all" else [canonical_stat(args.stat)]
    if points is None:
        stats = [s for s in stats if s not in ("hotelling_t2", "glr")] or stats
    cfg = PermutationConfig(
        n_permutations=args.perms,
        seed=args.seed,
        exact_threshold=args.exact_threshold,
        threads=args.threads,
    )
    report = run_test(g, lab, stats, cfg, pvalue=args.pvalue, points=points)
    report.config.update(graph_desc)
    _emit(data_io.dumps(report.to_dict()), args.out)
    return 0


def cmd_diagnose(args, parser) -> int:
    g = data_io.load_graph(args.graph)
    gs = graph_stats(g)
    out = {"n_nodes": g.n_nodes, "n_edges": g.n_edges}
    out.update(normality_diagnostics(gs).to_dict())
    out["sum_deg_sq"] = gs.sum_deg_sq
    out["c_pairs"] = gs.c_pairs
    out["sum_AeBe"] = gs.sum_AeBe
    if args.labels:
        lab = data_io.load_labels(args.labels, x_label=args.x_label)
        data_io.check_pairing(g.n_nodes, lab)
        mom = permutation_moments(gs, lab.n, lab.m)
        out["corr12"] = mom.corr12
        agree = asymptotic_agreement(mom, bootstrap_moments(gs, lab.n, lab.m))
        out["bootstrap_agreement"] = vars(agree)
    out["config"] = {"graph_file": args.graph, "labels": args.labels}
    _emit(data_io.dumps(out), args.out)
    return 0


def cmd_packing(args, parser) -> int:
    from .simulate import packing_csv

    _emit(packing_csv(args.dmax), args.out)
    return 0


def cmd_simulate(args, parser) -> int:
    from . import simulate as sim

    if args.study == "packing":
        return cmd_packing(args, parser)
    if args.study == "power":
        if args.table == "custom":
            stats = tuple(canonical_stat(s) for s in args.stats.split(",") if s)
            scenarios = [
                sim.SimScenario(args.family, d=args.d, n=args.n, m=args.m, delta=args.delta,
                                sigma=args.sigma, trials=args.trials, alpha=args.alpha,
                                graphs=args.graphs, statistics=stats, seed=args.seed)
            ]
        else:
            scenarios = sim.preset_table(args.table, trials=args.trials, seed=args.seed,
                                        include_mdp=not args.skip_mdp)
        log.info("power study: %d scenarios, %d trials, %d permutations",
                 len(scenarios), args.trials, args.perms)
        table = sim.power_study(scenarios, n_permutations=args.perms,
                                calibration=args.calibration, threads=args.threads)
        _emit(table.to_csv(), args.out)
        return 0
    ms = args.m or args.n
    if len(ms) != len(args.n):
        parser.error("--m must list as many sizes as --n")
    configs = [
        sim.AccuracyConfig(n, m, d, ks=tuple(args.ks), runs=args.runs,
                           n_permutations=args.perms, seed=args.seed)
        for n, m in zip(args.n, ms)
        for d in args.d
    ]
    _emit(sim.accuracy_csv(sim.pvalue_accuracy_study(configs)), args.out)
    return 0


COMMANDS = {
    "build-graph": cmd_build_graph,
    "test": cmd_test,
    "diagnose": cmd_diagnose,
    "packing": cmd_packing,
    "simulate": cmd_simulate,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    if args.threads < 1:
        parser.error("--threads must be at least 1")
    try:
        return COMMANDS[args.command](args, parser)
    except GraphTestError as exc:
        sys.stderr.write(json.dumps(exc.to_dict()) + "\n")
        return 1
    except ValueError as exc:
        sys.stderr.write(json.dumps({"error": "ValueError", "message": str(exc)}) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
