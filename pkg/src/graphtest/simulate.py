"""Simulation studies: power grids, p-value accuracy, layering and packing.

Everything here is a pure function of its configuration and seed. Each trial
draws from its own random stream keyed by (seed, trial index), so tables do
not depend on the number of worker threads.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .data_io import Labeling, PointSet
from .distance import pairwise_distances
from .errors import DegenerateTable, GraphTestError
from .graph import SimilarityGraph, build_knn, graph_stats, kmdp_rounds, kmst_rounds, union
from .inference import make_evaluator, count_extreme, random_labelings
from .nulldist import permutation_moments
from .stats import Unavailable, edge_counts, glr_stat, hotelling_t2, tail_of

FAMILIES = ("normal_location", "normal_scale", "lognormal_location")
BLOCK = 1000


def trial_rng(seed: int, trial: int, purpose: int, block: int = 0) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(trial, purpose, block))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class SimScenario:
    family: str = "normal_location"
    d: int = 10
    n: int = 50
    m: int = 50
    delta: float = 0.0
    sigma: float = 1.0
    trials: int = 100
    alpha: float = 0.05
    graphs: tuple = (("kmst", 1), ("kmst", 3), ("kmst", 5))
    statistics: tuple = ("S", "R0")
    seed: int = 0
    tests: tuple | None = None  # explicit (statistic, graph) pairs; overrides the cross product

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}")

    def label(self) -> str:
        return f"{self.family}:d={self.d}:n={self.n}:m={self.m}:delta={self.delta}:sigma={self.sigma}"


def gen_samples(scenario: SimScenario, trial_index: int) -> tuple[PointSet, Labeling]:
    """Pooled points (X rows first) and their labels for one trial."""
    rng = trial_rng(scenario.seed, trial_index, 0)
    d, n, m = scenario.d, scenario.n, scenario.m
    zx = rng.standard_normal((n, d))
    zy = rng.standard_normal((m, d))
    if scenario.family == "lognormal_location":
        x = np.exp(zx)
        y = np.exp(zy + scenario.delta / math.sqrt(d))
    else:
        shift = np.zeros(d)
        shift[0] = scenario.delta
        x = zx
        y = scenario.sigma * zy + shift
    labels = np.r_[np.zeros(n, dtype=np.int8), np.ones(m, dtype=np.int8)]
    return PointSet(np.vstack([x, y])), Labeling(labels)


# -- graph-family helpers -----------------------------------------------------


def build_graph_family(dist, specs: Iterable[tuple[str, int]]) -> dict:
    """Graphs for every (type, k); k-MST/k-MDP share their leading rounds."""
    specs = list(dict.fromkeys((t, int(k)) for t, k in specs))
    n = dist.n
    out = {}
    for kind in ("kmst", "kmdp"):
        ks = [k for t, k in specs if t == kind]
        if not ks:
            continue
        rounds = (kmst_rounds if kind == "kmst" else kmdp_rounds)(dist, max(ks))
        for k in ks:
            out[(kind, k)] = union(n, rounds[:k])
    for t, k in specs:
        if t == "knn":
            out[(t, k)] = build_knn(dist, k)
        elif t not in ("kmst", "kmdp"):
            raise ValueError(f"unknown graph type {t!r}")
    return out


def graph_label(spec) -> str:
    if spec is None:
        return "-"
    kind, k = spec
    return f"{k}-{kind[1:].upper()}"


# -- power study --------------------------------------------------------------


@dataclass(frozen=True)
class TestSpec:
    statistic: str
    graph: tuple | None = None  # None for tests on the raw points

    __test__ = False

    def label(self) -> str:
        return self.statistic if self.graph is None else f"{self.statistic}@{graph_label(self.graph)}"


def scenario_tests(s: SimScenario) -> list[TestSpec]:
    if s.tests is not None:
        return [TestSpec(name, tuple(g) if g else None) for name, g in s.tests]
    tests = []
    for name in s.statistics:
        if name in ("hotelling_t2", "glr"):
            tests.append(TestSpec(name))
        elif name == "degree_chi2":
            tests.append(TestSpec(name, ("kmst", 1)))
        else:
            tests.extend(TestSpec(name, g) for g in s.graphs)
    return tests


def _trial_pvalues(
    s: SimScenario, tests: Sequence[TestSpec], trial: int, n_perms: int, calibration: str
) -> list[float | None]:
    pts, lab = gen_samples(s, trial)
    dist = pairwise_distances(pts, "euclidean")
    graphs = build_graph_family(dist, [t.graph for t in tests if t.graph is not None])
    moments = {
        spec: permutation_moments(graph_stats(g), lab.n, lab.m) for spec, g in graphs.items()
    }
    evaluators, observed = [], []
    for t in tests:
        if t.statistic == "hotelling_t2" and isinstance(hotelling_t2(pts, lab), Unavailable):
            evaluators.append(None)
        elif t.statistic == "glr" and isinstance(glr_stat(pts, lab), Unavailable):
            evaluators.append(None)
        else:
            g = graphs.get(t.graph) if t.graph else SimilarityGraph.from_edges(pts.n_points, [])
            try:
                ev = make_evaluator(t.statistic, g, lab.n, moments.get(t.graph), points=pts)
                evaluators.append(ev)
            except GraphTestError:
                evaluators.append(None)
        ev = evaluators[-1]
        try:
            observed.append(float(ev(lab.labels[None, :])[0]) if ev is not None else None)
        except DegenerateTable:
            # margins are fixed by the graph: every labeling ties, p = 1
            evaluators[-1] = lambda labels: np.zeros(len(labels))
            observed.append(0.0)

    if calibration == "asymptotic":
        out = []
        for t, obs in zip(tests, observed):
            if obs is None or t.statistic != "S":
                out.append(None)
            else:
                out.append(math.exp(-obs / 2.0))
        return out

    hits = [0] * len(tests)
    for b in range(-(-n_perms // BLOCK)):
        size = min(BLOCK, n_perms - b * BLOCK)
        perm = random_labelings(lab.labels, size, trial_rng(s.seed, trial, 1, b))
        for i, (t, ev) in enumerate(zip(tests, evaluators)):
            if ev is not None:
                hits[i] += count_extreme(ev(perm), observed[i], tail_of(t.statistic))
    return [
        (1 + h) / (1 + n_perms) if ev is not None else None for h, ev in zip(hits, evaluators)
    ]


@dataclass
class PowerTable:
    """Rejection counts per (scenario, test); None marks an unavailable cell."""

    scenarios: list[SimScenario]
    tests: list[list[TestSpec]]
    rejections: list[list[int | None]]
    n_permutations: int
    calibration: str = "permutation"

    def cell(self, scenario_index: int, statistic: str, graph=None) -> int | None:
        for t, r in zip(self.tests[scenario_index], self.rejections[scenario_index]):
            if t.statistic == statistic and t.graph == graph:
                return r
        raise KeyError((statistic, graph))

    def power(self, scenario_index: int, statistic: str, graph=None) -> float | None:
        r = self.cell(scenario_index, statistic, graph)
        return None if r is None else r / self.scenarios[scenario_index].trials

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(
            ["family", "d", "n", "m", "delta", "sigma", "trials", "alpha", "seed",
             "n_permutations", "calibration", "statistic", "graph", "rejections", "power"]
        )
        for s, tests, rej in zip(self.scenarios, self.tests, self.rejections):
            for t, r in zip(tests, rej):
                w.writerow(
                    [s.family, s.d, s.n, s.m, s.delta, s.sigma, s.trials, s.alpha, s.seed,
                     self.n_permutations, self.calibration, t.statistic, graph_label(t.graph),
                     "-" if r is None else r, "-" if r is None else r / s.trials]
                )
        return buf.getvalue()


def power_study(
    scenarios: Sequence[SimScenario],
    n_permutations: int = 1000,
    calibration: str = "permutation",
    threads: int = 1,
) -> PowerTable:
    """Count rejections (p < alpha) for every scenario and test."""
    all_tests, all_rej = [], []
    for s in scenarios:
        tests = scenario_tests(s)

        def one(trial, s=s, tests=tests):
            return _trial_pvalues(s, tests, trial, n_permutations, calibration)

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                pvals = list(pool.map(one, range(s.trials)))
        else:
            pvals = [one(t) for t in range(s.trials)]
        rej = []
        for i in range(len(tests)):
            col = [p[i] for p in pvals]
            rej.append(None if any(p is None for p in col) else sum(p < s.alpha for p in col))
        all_tests.append(tests)
        all_rej.append(rej)
    return PowerTable(list(scenarios), all_tests, all_rej, n_permutations, calibration)


MST_135 = (("kmst", 1), ("kmst", 3), ("kmst", 5))
MDP_135 = (("kmdp", 1), ("kmdp", 3), ("kmdp", 5))


def preset_tests(include_mdp: bool = True) -> tuple:
    """Default test rows of the preset power grids, in order."""
    rows = [("hotelling_t2", None), ("glr", None)]
    rows += [("R0", g) for g in MST_135]
    if include_mdp:
        rows += [("R0", g) for g in MDP_135]
    rows += [("degree_chi2", ("kmst", 1))]
    rows += [("S", g) for g in MST_135]
    return tuple(rows)


def preset_table(table: str, trials: int = 100, seed: int = 0, include_mdp: bool = True) -> list[SimScenario]:
    """Preset scenario grids: "1" normal location, "2" normal scale, "3" lognormal location, "6" and "7" the T-statistic comparisons."""
    base = dict(trials=trials, seed=seed, tests=preset_tests(include_mdp), n=50, m=50)
    if table == "1":
        cols = [(2, 0.6), (10, 0.8), (30, 1.1), (50, 1.4), (70, 1.7), (90, 2.0), (100, 2.0)]
        return [SimScenario("normal_location", d=d, delta=dl, **base) for d, dl in cols]
    if table == "2":
        cols = [(2, 1.4), (5, 1.25), (10, 1.2), (20, 1.15)]
        return [SimScenario("normal_scale", d=d, sigma=sg, **base) for d, sg in cols]
    if table == "3":
        cols = [(2, 0.8), (10, 1.0), (30, 1.3), (50, 1.3), (70, 1.5), (90, 1.7)]
        return [SimScenario("lognormal_location", d=d, delta=dl, **base) for d, dl in cols]
    if table in ("6", "7"):
        d, delta, sigma = (10, 1.0, 1.1) if table == "6" else (100, 2.0, 1.05)
        tests = tuple((name, ("kmst", 1)) for name in ("T1", "T2", "T3", "T4", "S"))
        common = dict(trials=trials, seed=seed, tests=tests, d=d)
        out = []
        for n, m in ((100, 100), (100, 200)):
            out.append(SimScenario("normal_location", n=n, m=m, delta=delta, **common))
            out.append(SimScenario("normal_scale", n=n, m=m, sigma=sigma, **common))
        return out
    raise ValueError(f"unknown table {table!r}")


# -- null calibration and p-value accuracy ------------------------------------


def asymptotic_size(
    n: int, m: int, d: int, k: int, trials: int, alpha: float = 0.05, seed: int = 0
) -> float:
    """Rejection rate of the chi-square(2) S test on k-MST under a normal null."""
    s = SimScenario("normal_location", d=d, n=n, m=m, trials=trials, alpha=alpha,
                    graphs=(("kmst", k),), statistics=("S",), seed=seed)
    table = power_study([s], calibration="asymptotic")
    return table.rejections[0][0] / trials


@dataclass(frozen=True)
class AccuracyConfig:
    n: int
    m: int
    d: int
    ks: tuple = (1, 3, 5)
    runs: int = 100
    n_permutations: int = 10000
    seed: int = 0


@dataclass(frozen=True)
class AccuracySummary:
    n: int
    m: int
    d: int
    k: int
    runs: int
    mean: float
    mean_abs: float
    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float

    @property
    def iqr(self) -> float:
        return self.q3 - self.q1


def pvalue_differences(cfg: AccuracyConfig) -> dict[int, np.ndarray]:
    """Asymptotic minus permutation p-value of S per run, for each k-MST."""
    s = SimScenario("normal_location", d=cfg.d, n=cfg.n, m=cfg.m, seed=cfg.seed)
    diffs = {k: np.empty(cfg.runs) for k in cfg.ks}
    for run in range(cfg.runs):
        pts, lab = gen_samples(s, run)
        dist = pairwise_distances(pts, "euclidean")
        graphs = build_graph_family(dist, [("kmst", k) for k in cfg.ks])
        evals, obs = {}, {}
        for k in cfg.ks:
            g = graphs[("kmst", k)]
            mom = permutation_moments(graph_stats(g), lab.n, lab.m)
            evals[k] = make_evaluator("S", g, lab.n, mom)
            obs[k] = float(evals[k](lab.labels[None, :])[0])
        hits = dict.fromkeys(cfg.ks, 0)
        B = cfg.n_permutations
        for b in range(-(-B // BLOCK)):
            size = min(BLOCK, B - b * BLOCK)
            perm = random_labelings(lab.labels, size, trial_rng(cfg.seed, run, 1, b))
            for k in cfg.ks:
                hits[k] += count_extreme(evals[k](perm), obs[k], "upper")
        for k in cfg.ks:
            diffs[k][run] = math.exp(-obs[k] / 2.0) - (1 + hits[k]) / (1 + B)
    return diffs


def summarize_differences(cfg: AccuracyConfig, diffs: dict[int, np.ndarray]) -> list[AccuracySummary]:
    out = []
    for k in cfg.ks:
        v = diffs[k]
        q = np.quantile(v, [0, 0.25, 0.5, 0.75, 1.0])
        out.append(AccuracySummary(cfg.n, cfg.m, cfg.d, k, len(v), float(v.mean()),
                                   float(np.abs(v).mean()), *map(float, q)))
    return out


def pvalue_accuracy_study(configs: Sequence[AccuracyConfig]) -> list[AccuracySummary]:
    rows = []
    for cfg in configs:
        rows.extend(summarize_differences(cfg, pvalue_differences(cfg)))
    return rows


def accuracy_csv(rows: Sequence[AccuracySummary]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "m", "d", "k", "runs", "mean", "mean_abs", "min", "q1", "median", "q3", "max"])
    for r in rows:
        w.writerow([r.n, r.m, r.d, r.k, r.runs, r.mean, r.mean_abs, r.minimum, r.q1,
                    r.median, r.q3, r.maximum])
    return buf.getvalue()


# -- the layering phenomenon --------------------------------------------------


def five_number(v: np.ndarray) -> dict:
    q = np.quantile(v, [0, 0.25, 0.5, 0.75, 1.0])
    return dict(zip(("min", "q1", "median", "q3", "max"), map(float, q)))


def layer_diagnostic(points: PointSet, lab: Labeling) -> dict:
    """Five-number summaries of each sample's distances to the pooled centroid."""
    x = points.data
    r = np.linalg.norm(x - x.mean(axis=0), axis=1)
    return {"X": five_number(r[lab.labels == 0]), "Y": five_number(r[lab.labels == 1])}


@dataclass(frozen=True)
class Phenomenon:
    r0: int
    r1: int
    r2: int
    dev0: float
    dev1: float
    dev2: float


def edge_count_phenomenon(scenario: SimScenario, trial_index: int = 0) -> Phenomenon:
    """Signed deviations of the 1-MST edge counts from their null means."""
    pts, lab = gen_samples(scenario, trial_index)
    g = union(pts.n_points, kmst_rounds(pairwise_distances(pts, "euclidean"), 1))
    c = edge_counts(g, lab)
    mom = permutation_moments(graph_stats(g), lab.n, lab.m)
    return Phenomenon(c.r0, c.r1, c.r2, c.r0 - mom.mu0, c.r1 - mom.mu1, c.r2 - mom.mu2)


# -- sphere packing -----------------------------------------------------------


def packing_count(d: int) -> float:
    """log10 of the approximate number of unit-sphere points more than 1 apart."""
    if d < 1:
        raise ValueError("dimension must be at least 1")
    ln = (
        0.5 * math.log(math.pi)
        + math.log(d)
        + math.lgamma(d / 2 + 0.5)
        - math.lgamma(d / 2 + 1)
        + (d - 1) * math.log(2)
    )
    return ln / math.log(10)


def packing_csv(dmax: int) -> str:
    lines = ["d,log10_count"] + [f"{d},{packing_count(d)!r}" for d in range(1, dmax + 1)]
    return "\n".join(lines) + "\n"
