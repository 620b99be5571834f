"""Similarity graphs on pooled observations and their structural statistics.

Builders take a dense distance matrix and return a :class:`SimilarityGraph`
whose edge list is sorted with ``i < j``. Equal distances are resolved by
lexicographic order of the node pair, so every builder is deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
import scipy.sparse as sp

from ._matching import min_weight_perfect_matching
from .data_io import DistanceMatrix
from .errors import InfeasibleK, ShapeError, TooFewObservations

GRAPH_TYPES = ("kmst", "kmdp", "knn")


@dataclass(frozen=True, eq=False)
class SimilarityGraph:
    n_nodes: int
    edges: np.ndarray  # (E, 2) int64, rows sorted, i < j

    @classmethod
    def from_edges(cls, n_nodes: int, edges: Iterable) -> "SimilarityGraph":
        arr = np.array([tuple(e) for e in edges], dtype=np.int64).reshape(-1, 2)
        if arr.size:
            if np.any(arr[:, 0] == arr[:, 1]):
                raise ShapeError("similarity graph has a self-loop")
            if arr.min() < 0 or arr.max() >= n_nodes:
                raise ShapeError("edge endpoint out of range")
            arr = np.sort(arr, axis=1)
            arr = arr[np.lexsort((arr[:, 1], arr[:, 0]))]
            if np.any(np.all(arr[1:] == arr[:-1], axis=1)):
                raise ShapeError("similarity graph has a repeated edge")
        arr.setflags(write=False)
        return cls(int(n_nodes), arr)

    @property
    def n_edges(self) -> int:
        return int(self.edges.shape[0])

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.n_nodes)

    def edge_list(self) -> list[tuple[int, int]]:
        return [(int(i), int(j)) for i, j in self.edges]

    def adjacency(self) -> sp.csr_matrix:
        e = self.edges
        data = np.ones(2 * len(e))
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        return sp.csr_matrix((data, (rows, cols)), shape=(self.n_nodes, self.n_nodes))

    def relabel(self, perm: np.ndarray) -> "SimilarityGraph":
        """Graph with node ``v`` renamed to ``perm[v]``."""
        perm = np.asarray(perm)
        return SimilarityGraph.from_edges(self.n_nodes, perm[self.edges])

    def __eq__(self, other):
        return (
            isinstance(other, SimilarityGraph)
            and self.n_nodes == other.n_nodes
            and np.array_equal(self.edges, other.edges)
        )


def union(n_nodes: int, rounds: list[np.ndarray]) -> SimilarityGraph:
    if not rounds:
        return SimilarityGraph.from_edges(n_nodes, [])
    return SimilarityGraph.from_edges(n_nodes, np.concatenate(rounds))


def _dist_values(dist) -> np.ndarray:
    v = dist.values if isinstance(dist, DistanceMatrix) else np.asarray(dist, dtype=float)
    if v.shape[0] < 2:
        raise TooFewObservations("need at least 2 observations")
    return v


def edge_ranks(d: np.ndarray) -> np.ndarray:
    """Dense matrix of each pair's position in the (distance, i, j) order.

    The diagonal holds +inf. Ranks are unique, which makes the minimum
    spanning tree unique and equal to the lexicographically tie-broken one.
    """
    n = d.shape[0]
    iu, ju = np.triu_indices(n, 1)
    order = np.lexsort((ju, iu, d[iu, ju]))
    ranks = np.empty(order.size, dtype=float)
    ranks[order] = np.arange(order.size, dtype=float)
    r = np.full((n, n), np.inf)
    r[iu, ju] = ranks
    r[ju, iu] = ranks
    return r


def _prim(ranks: np.ndarray, round_: int) -> np.ndarray:
    n = ranks.shape[0]
    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    key = ranks[0].copy()
    parent = np.zeros(n, dtype=np.int64)
    key[0] = np.inf
    out = np.empty((n - 1, 2), dtype=np.int64)
    for step in range(n - 1):
        v = int(np.argmin(key))
        if not np.isfinite(key[v]):
            raise InfeasibleK(round_, f"remaining graph is disconnected at round {round_}")
        u = parent[v]
        out[step] = (min(u, v), max(u, v))
        in_tree[v] = True
        key[v] = np.inf
        row = ranks[v]
        better = (row < key) & ~in_tree
        key[better] = row[better]
        parent[better] = v
    return out


def kmst_rounds(dist, k: int) -> list[np.ndarray]:
    """Edge arrays of the 1st..kth spanning trees, each avoiding earlier trees."""
    if k < 1:
        raise ValueError("k must be positive")
    d = _dist_values(dist)
    ranks = edge_ranks(d)
    rounds = []
    for j in range(1, k + 1):
        tree = _prim(ranks, j)
        ranks[tree[:, 0], tree[:, 1]] = np.inf
        ranks[tree[:, 1], tree[:, 0]] = np.inf
        rounds.append(tree)
    return rounds


def build_kmst(dist, k: int) -> SimilarityGraph:
    d = _dist_values(dist)
    return union(d.shape[0], kmst_rounds(d, k))


def kmdp_rounds(dist, k: int) -> list[np.ndarray]:
    """Edge arrays of k successive edge-disjoint optimal matchings.

    For odd N each round adds a fresh pseudo node at distance 0 from every
    observation and drops the pair that contains it.
    """
    if k < 1:
        raise ValueError("k must be positive")
    d = _dist_values(dist)
    n = d.shape[0]
    odd = n % 2 == 1
    size = n + 1 if odd else n
    used = np.zeros((n, n), dtype=bool)
    iu, ju = np.triu_indices(n, 1)
    rounds = []
    for j in range(1, k + 1):
        keep = ~used[iu, ju]
        edges = np.column_stack([iu[keep], ju[keep]])
        weights = d[iu[keep], ju[keep]]
        if odd:
            pseudo = np.column_stack([np.arange(n), np.full(n, n)])
            edges = np.concatenate([edges, pseudo])
            weights = np.concatenate([weights, np.zeros(n)])
        pairs = min_weight_perfect_matching(size, edges, weights)
        if pairs is None:
            raise InfeasibleK(j, f"no perfect matching avoiding earlier rounds at round {j}")
        real = np.array([p for p in pairs if p[1] < n], dtype=np.int64).reshape(-1, 2)
        used[real[:, 0], real[:, 1]] = True
        used[real[:, 1], real[:, 0]] = True
        rounds.append(real)
    return rounds


def build_kmdp(dist, k: int) -> SimilarityGraph:
    d = _dist_values(dist)
    return union(d.shape[0], kmdp_rounds(d, k))


def build_knn(dist, k: int) -> SimilarityGraph:
    d = np.array(_dist_values(dist), dtype=float)
    n = d.shape[0]
    if k < 1:
        raise ValueError("k must be positive")
    if k >= n:
        raise InfeasibleK(1, f"k={k} needs k <= N-1 = {n - 1}")
    np.fill_diagonal(d, np.inf)
    # stable sort keeps the smaller index first among equal distances
    nbrs = np.argsort(d, axis=1, kind="stable")[:, :k]
    src = np.repeat(np.arange(n), k)
    pairs = np.sort(np.column_stack([src, nbrs.ravel()]), axis=1)
    pairs = np.unique(pairs, axis=0)
    return SimilarityGraph.from_edges(n, pairs)


def build_graph(dist, kind: str, k: int) -> SimilarityGraph:
    if kind == "kmst":
        return build_kmst(dist, k)
    if kind == "kmdp":
        return build_kmdp(dist, k)
    if kind == "knn":
        return build_knn(dist, k)
    raise ValueError(f"unknown graph type {kind!r}; expected one of {GRAPH_TYPES}")


def total_weight(g: SimilarityGraph, dist) -> float:
    d = _dist_values(dist)
    return float(d[g.edges[:, 0], g.edges[:, 1]].sum())


@dataclass(frozen=True, eq=False)
class GraphStats:
    n_nodes: int
    n_edges: int
    degrees: np.ndarray
    sum_deg_sq: int
    c_pairs: int
    a_sizes: np.ndarray
    b_sizes: np.ndarray

    @property
    def sum_AeBe(self) -> int:
        return int(np.dot(self.a_sizes, self.b_sizes))


def graph_stats(g: SimilarityGraph) -> GraphStats:
    deg = g.degrees()
    n_e = g.n_edges
    sum_sq = int(np.dot(deg, deg))
    c = sum_sq // 2 - n_e
    if n_e == 0:
        empty = np.zeros(0, dtype=np.int64)
        return GraphStats(g.n_nodes, 0, deg, 0, 0, empty, empty)
    i, j = g.edges[:, 0], g.edges[:, 1]
    a = deg[i] + deg[j] - 1
    adj = g.adjacency()
    closed = (adj + sp.identity(g.n_nodes, format="csr")).tocsr()
    rows = np.repeat(np.arange(n_e), 2)
    inc = sp.csr_matrix((np.ones(2 * n_e), (rows, g.edges.ravel())), shape=(n_e, g.n_nodes))
    # nodes touched by A_e: both endpoints and all their neighbours
    touched = (inc @ closed).astype(bool).astype(float).tocsr()
    deg_total = touched @ deg.astype(float)
    # edges with both endpoints inside the touched set are counted twice above
    inside = np.asarray((touched @ adj).multiply(touched).sum(axis=1)).ravel() / 2.0
    b = np.rint(deg_total - inside).astype(np.int64)
    return GraphStats(g.n_nodes, n_e, deg, sum_sq, int(c), a.astype(np.int64), b)


@dataclass(frozen=True)
class NormalityDiagnostics:
    edges_per_node: float
    deg_sq_per_node: float
    ab_ratio: float
    max_degree: int
    asymptotics_questionable: bool

    def to_dict(self) -> dict:
        return {
            "edges_per_node": self.edges_per_node,
            "deg_sq_per_node": self.deg_sq_per_node,
            "sum_AeBe_per_N32": self.ab_ratio,
            "max_degree": self.max_degree,
            "asymptotics_questionable": self.asymptotics_questionable,
        }


def normality_diagnostics(stats: GraphStats) -> NormalityDiagnostics:
    """Finite-sample ratios behind the chi-square(2) approximation conditions.

    The flag is a heuristic: it fires when the A_e/B_e sum exceeds N**1.5 or
    some node has degree above sqrt(N).
    """
    n = stats.n_nodes
    ab = stats.sum_AeBe / n**1.5
    max_deg = int(stats.degrees.max()) if stats.degrees.size else 0
    return NormalityDiagnostics(
        edges_per_node=stats.n_edges / n,
        deg_sq_per_node=stats.sum_deg_sq / n,
        ab_ratio=ab,
        max_degree=max_deg,
        asymptotics_questionable=bool(ab > 1.0 or max_deg > math.sqrt(n)),
    )
