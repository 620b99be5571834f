"""p-values for the graph-based statistics and assembly of test reports.

Permutation p-values are exact (full enumeration of the C(N, n) labelings)
when that number is small, otherwise Monte Carlo with the (1 + b)/(1 + B)
estimator. Monte Carlo replicates are drawn in fixed blocks, each block with
its own counter-based Philox stream keyed by (seed, block index), so the
result does not depend on how blocks are distributed over threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from itertools import combinations, islice
from typing import Callable, Sequence

import numpy as np
from scipy.special import ndtr
from scipy.stats import chi2

from .data_io import Labeling, PointSet
from .errors import (
    CalibrationError,
    DegenerateTable,
    GraphTestError,
    InternalError,
    LengthMismatch,
    SingularCovariance,
)
from .graph import SimilarityGraph, graph_stats, normality_diagnostics
from .nulldist import NullMoments, permutation_moments
from .stats import (
    GLRBatch,
    HotellingBatch,
    StatisticValue,
    Unavailable,
    chi2_2x2,
    counts_batch,
    degree_table_batch,
    edge_counts,
    glr_stat,
    graph_statistic_batch,
    hotelling_t2,
    tail_of,
)

BLOCK = 1000
EXACT_HARD_CAP = 5_000_000
TIE_RTOL = 1e-10

STAT_ALIASES = {"degree": "degree_chi2", "hotelling": "hotelling_t2"}
ALL_STATS = ("S", "R0", "T1", "T2", "T3", "T4", "degree_chi2", "hotelling_t2", "glr")


def canonical_stat(name: str) -> str:
    return STAT_ALIASES.get(name, name)


@dataclass(frozen=True)
class PermutationConfig:
    n_permutations: int = 10000
    seed: int = 0
    exact_threshold: int = 20000
    statistic: str = "S"
    threads: int = 1

    def __post_init__(self):
        if self.n_permutations < 1:
            raise ValueError("n_permutations must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


# -- statistic evaluators -----------------------------------------------------

Evaluator = Callable[[np.ndarray], np.ndarray]


def make_evaluator(
    name: str,
    g: SimilarityGraph,
    n: int,
    moments: NullMoments | None = None,
    points: PointSet | np.ndarray | None = None,
) -> Evaluator:
    """Vectorized statistic: (B, N) label matrix -> (B,) values.

    Labels are 0 for sample X and 1 for sample Y, with n zeros per row.
    """
    name = canonical_stat(name)
    if name in ("S", "R0", "Z0", "T1", "T2", "T3", "T4"):
        if moments is None:
            moments = permutation_moments(graph_stats(g), n, g.n_nodes - n)
        edges, n_edges, mom = g.edges, g.n_edges, moments
        # validate once so that errors surface before any permutation
        graph_statistic_batch(name, np.zeros(1), np.zeros(1), n_edges, mom)

        def graph_eval(labels):
            r1, r2 = counts_batch(edges, labels)
            return graph_statistic_batch(name, r1, r2, n_edges, mom)

        return graph_eval
    if name == "degree_chi2":
        is_leaf = g.degrees() == 1
        return lambda labels: chi2_2x2(degree_table_batch(is_leaf, labels))
    if points is None:
        raise ValueError(f"statistic {name!r} needs the raw points")
    x = points.data if isinstance(points, PointSet) else np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if name == "hotelling_t2":
        return HotellingBatch(x, n)
    if name == "glr":
        return GLRBatch(x, n)
    raise ValueError(f"unknown statistic {name!r}")


def count_extreme(values: np.ndarray, observed: float, tail: str) -> int:
    """Replicates at least as extreme as observed; near-ties count as extreme."""
    tol = TIE_RTOL * max(1.0, abs(observed))
    if tail == "upper":
        return int(np.count_nonzero(values >= observed - tol))
    return int(np.count_nonzero(values <= observed + tol))


# -- random and exhaustive labelings -----------------------------------------


def block_rng(seed: int, block: int, stream: int = 0) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(stream, block))
    return np.random.Generator(np.random.Philox(ss))


def random_labelings(labels: np.ndarray, size: int, rng: np.random.Generator) -> np.ndarray:
    """Rows are uniform random rearrangements of the observed labels."""
    return rng.permuted(np.tile(labels.astype(np.int8), (size, 1)), axis=1)


def n_labelings(N: int, n: int) -> int:
    return math.comb(N, n)


def enumerate_labelings(N: int, n: int, chunk: int = 4096):
    """All label vectors with n zeros (sample X), in combination order, chunked."""
    it = combinations(range(N), n)
    while True:
        combos = list(islice(it, chunk))
        if not combos:
            return
        out = np.ones((len(combos), N), dtype=np.int8)
        rows = np.repeat(np.arange(len(combos)), n)
        out[rows, np.asarray(combos, dtype=np.int64).ravel()] = 0
        yield out


@dataclass(frozen=True)
class PermutationResult:
    p_value: float
    n_extreme: int
    n_permutations: int
    exact: bool


def permutation_test(
    evaluator: Evaluator,
    labels: np.ndarray,
    tail: str,
    cfg: PermutationConfig,
    mode: str = "auto",
    stream: int = 0,
) -> PermutationResult:
    """Exact or Monte Carlo permutation p-value for one statistic.

    ``mode`` is "auto" (exact iff C(N, n) <= cfg.exact_threshold), "exact" or
    "mc".
    """
    labels = np.asarray(labels, dtype=np.int8)
    N = labels.size
    n = int(np.count_nonzero(labels == 0))
    observed = float(evaluator(labels[None, :])[0])
    total = n_labelings(N, n)
    exact = mode == "exact" or (mode == "auto" and total <= cfg.exact_threshold)
    try:
        if exact:
            if total > EXACT_HARD_CAP:
                raise ValueError(f"C({N},{n}) = {total} labelings is too many to enumerate")
            hits = sum(
                count_extreme(evaluator(blk), observed, tail)
                for blk in enumerate_labelings(N, n)
            )
            return PermutationResult(hits / total, hits, total, True)

        B = cfg.n_permutations
        n_blocks = -(-B // BLOCK)

        def run_block(b: int) -> int:
            size = min(BLOCK, B - b * BLOCK)
            perm = random_labelings(labels, size, block_rng(cfg.seed, b, stream))
            return count_extreme(evaluator(perm), observed, tail)

        if cfg.threads > 1 and n_blocks > 1:
            with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
                hits = sum(pool.map(run_block, range(n_blocks)))
        else:
            hits = sum(run_block(b) for b in range(n_blocks))
    except SingularCovariance as exc:
        raise CalibrationError(f"statistic unavailable on a permuted labeling: {exc}") from exc
    return PermutationResult((1 + hits) / (1 + B), hits, B, False)


def permutation_pvalue(
    g: SimilarityGraph,
    lab: Labeling,
    cfg: PermutationConfig,
    points: PointSet | None = None,
) -> float:
    if lab.N != g.n_nodes:
        raise LengthMismatch(f"{lab.N} labels for a graph on {g.n_nodes} nodes")
    name = canonical_stat(cfg.statistic)
    ev = make_evaluator(name, g, lab.n, points=points)
    return permutation_test(ev, lab.labels, tail_of(name), cfg).p_value


# -- asymptotic p-values ------------------------------------------------------


def asymptotic_pvalue_S(s: StatisticValue | float) -> float:
    """Upper tail of chi-square with 2 degrees of freedom."""
    value = s.value if isinstance(s, StatisticValue) else float(s)
    if isinstance(s, StatisticValue) and s.name != "S":
        raise ValueError(f"expected statistic S, got {s.name}")
    if value < 0:
        raise InternalError(f"S must be nonnegative, got {value}")
    return math.exp(-value / 2.0)


def asymptotic_pvalue_Z0(z: StatisticValue | float) -> float:
    """Lower tail of the standard normal."""
    value = z.value if isinstance(z, StatisticValue) else float(z)
    if isinstance(z, StatisticValue) and z.name != "Z0":
        raise ValueError(f"expected statistic Z0, got {z.name}")
    return float(ndtr(value))


# -- reports ------------------------------------------------------------------


@dataclass
class StatisticResult:
    name: str
    value: float | None
    tail: str
    p_asymptotic: float | None = None
    p_permutation: float | None = None
    n_permutations: int | None = None
    exact: bool = False
    error: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TestReport:
    n: int
    m: int
    n_nodes: int
    n_edges: int
    r0: int
    r1: int
    r2: int
    moments: NullMoments | None
    results: list[StatisticResult]
    seed: int | None
    diagnostics: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    __test__ = False  # not a pytest class

    @property
    def primary(self) -> StatisticResult:
        return self.results[0]

    def to_dict(self) -> dict:
        mom = self.moments
        first = self.primary
        out = {
            "n": self.n,
            "m": self.m,
            "n_nodes": self.n_nodes,
            "n_edges": self.n_edges,
            "r0": self.r0,
            "r1": self.r1,
            "r2": self.r2,
            "mu0": mom.mu0 if mom else None,
            "mu1": mom.mu1 if mom else None,
            "mu2": mom.mu2 if mom else None,
            "sigma": [list(row) for row in mom.sigma] if mom else None,
            "statistic": {"name": first.name, "value": first.value},
            "s": next((r.value for r in self.results if r.name == "S"), None),
            "p_asymptotic": first.p_asymptotic,
            "p_permutation": first.p_permutation,
            "n_permutations": first.n_permutations,
            "exact": first.exact,
            "seed": self.seed,
            "diagnostics": dict(self.diagnostics),
        }
        if mom:
            out["diagnostics"]["var0"] = mom.var0
            out["diagnostics"]["corr12"] = mom.corr12
        if first.error:
            out["error"] = first.error
        out["results"] = [r.to_dict() for r in self.results]
        out["config"] = dict(self.config)
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "TestReport":
        diag = dict(obj.get("diagnostics", {}))
        var0 = diag.pop("var0", None)
        corr12 = diag.pop("corr12", None)
        mom = None
        if obj.get("mu1") is not None:
            s = obj["sigma"]
            mom = NullMoments(
                obj["mu1"],
                obj["mu2"],
                ((s[0][0], s[0][1]), (s[1][0], s[1][1])),
                obj["mu0"],
                var0,
                corr12,
            )
        results = [StatisticResult(**r) for r in obj["results"]]
        return cls(
            n=obj["n"],
            m=obj["m"],
            n_nodes=obj["n_nodes"],
            n_edges=obj["n_edges"],
            r0=obj["r0"],
            r1=obj["r1"],
            r2=obj["r2"],
            moments=mom,
            results=results,
            seed=obj["seed"],
            diagnostics=diag,
            config=obj.get("config", {}),
        )


PVALUE_MODES = ("exact", "perm", "asymptotic", "all")


def _observed(name, g, lab, moments, points):
    """Observed statistic value, or Unavailable for the parametric baselines."""
    if name == "hotelling_t2":
        return hotelling_t2(points, lab)
    if name == "glr":
        return glr_stat(points, lab)
    ev = make_evaluator(name, g, lab.n, moments=moments)
    return StatisticValue.of(name, ev(lab.labels[None, :])[0])


def _asymptotic(sv: StatisticValue, moments: NullMoments | None) -> float | None:
    if sv.name == "S":
        return asymptotic_pvalue_S(sv)
    if sv.name == "Z0":
        return asymptotic_pvalue_Z0(sv)
    if sv.name == "R0":
        return asymptotic_pvalue_Z0((sv.value - moments.mu0) / math.sqrt(moments.var0))
    if sv.name == "degree_chi2":
        return float(chi2.sf(sv.value, 1))
    return None


def run_test(
    g: SimilarityGraph,
    lab: Labeling,
    statistics: Sequence[str] = ("S",),
    cfg: PermutationConfig | None = None,
    pvalue: str = "all",
    points: PointSet | None = None,
) -> TestReport:
    """Counts, null moments, requested statistics, p-values and diagnostics."""
    cfg = cfg or PermutationConfig()
    if pvalue not in PVALUE_MODES:
        raise ValueError(f"pvalue must be one of {PVALUE_MODES}")
    if lab.N != g.n_nodes:
        raise LengthMismatch(f"{lab.N} labels for a graph on {g.n_nodes} nodes")
    if points is not None and points.n_points != g.n_nodes:
        raise LengthMismatch(f"{points.n_points} points for a graph on {g.n_nodes} nodes")
    counts = edge_counts(g, lab)
    gs = graph_stats(g)
    diagnostics = normality_diagnostics(gs).to_dict()
    moments = None
    moment_error = None
    try:
        moments = permutation_moments(gs, lab.n, lab.m)
    except GraphTestError as exc:
        moment_error = f"{exc.code}: {exc}"

    results = []
    for k, raw in enumerate(statistics):
        name = canonical_stat(raw)
        res = StatisticResult(name=name, value=None, tail=tail_of(name))
        results.append(res)
        if moment_error and name not in ("degree_chi2", "hotelling_t2", "glr"):
            res.error = moment_error
            continue
        try:
            sv = _observed(name, g, lab, moments, points)
            if isinstance(sv, Unavailable):
                res.error = f"Unavailable: {sv.reason}"
                continue
            res.value = sv.value
            if pvalue in ("asymptotic", "all"):
                res.p_asymptotic = _asymptotic(sv, moments)
            if pvalue in ("exact", "perm", "all"):
                ev = make_evaluator(name, g, lab.n, moments=moments, points=points)
                mode = "exact" if pvalue == "exact" else "auto"
                pr = permutation_test(ev, lab.labels, res.tail, cfg, mode=mode, stream=k)
                res.p_permutation = pr.p_value
                res.n_permutations = pr.n_permutations
                res.exact = pr.exact
        except DegenerateTable as exc:
            # margins are fixed by the graph, so every labeling is degenerate
            res.value = 0.0
            res.error = f"{exc.code}: {exc}"
            if pvalue in ("asymptotic", "all"):
                res.p_asymptotic = 1.0
            if pvalue in ("exact", "perm", "all"):
                res.p_permutation = 1.0
        except GraphTestError as exc:
            res.value = None
            res.p_asymptotic = res.p_permutation = res.n_permutations = None
            res.error = f"{exc.code}: {exc}"

    return TestReport(
        n=lab.n,
        m=lab.m,
        n_nodes=g.n_nodes,
        n_edges=g.n_edges,
        r0=counts.r0,
        r1=counts.r1,
        r2=counts.r2,
        moments=moments,
        results=results,
        seed=cfg.seed,
        diagnostics=diagnostics,
        config={
            "statistics": [canonical_stat(s) for s in statistics],
            "pvalue": pvalue,
            "n_permutations": cfg.n_permutations,
            "exact_threshold": cfg.exact_threshold,
            "seed": cfg.seed,
        },
    )
