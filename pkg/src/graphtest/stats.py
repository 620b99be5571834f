"""Test statistics on a similarity graph and the parametric baselines.

Graph statistics are functions of the edge counts (R0, R1, R2) and of the
permutation-null moments. The ``*_batch`` helpers evaluate a statistic for
many labelings at once (rows of a 0/1 matrix) and are what the permutation
machinery calls; the scalar functions wrap them for a single labeling.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .data_io import Labeling, PointSet
from .errors import DegenerateGraph, DegenerateTable, LengthMismatch, SingularCovariance
from .graph import SimilarityGraph
from .nulldist import NullMoments

GRAPH_STATISTICS = ("S", "R0", "Z0", "T1", "T2", "T3", "T4", "degree_chi2")
POINT_STATISTICS = ("hotelling_t2", "glr")
STATISTICS = GRAPH_STATISTICS + POINT_STATISTICS
LOWER_TAIL = ("R0", "Z0")

PIVOT_TOL = 1e-12
S_DET_TOL = 1e-12


def tail_of(name: str) -> str:
    return "lower" if name in LOWER_TAIL else "upper"


@dataclass(frozen=True)
class EdgeCounts:
    r0: int
    r1: int
    r2: int

    @property
    def total(self) -> int:
        return self.r0 + self.r1 + self.r2


@dataclass(frozen=True)
class StatisticValue:
    name: str
    value: float
    tail: str

    @classmethod
    def of(cls, name: str, value: float) -> "StatisticValue":
        return cls(name, float(value), tail_of(name))


@dataclass(frozen=True)
class Unavailable:
    """A statistic that cannot be computed on this data (a '-' table cell)."""

    name: str
    reason: str


def _labels_array(lab) -> np.ndarray:
    return lab.labels if isinstance(lab, Labeling) else np.asarray(lab, dtype=np.int8)


def counts_batch(edges: np.ndarray, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(R1, R2) for each row of a (B, N) 0/1 label matrix."""
    labels = np.atleast_2d(labels).astype(bool)
    gi = labels[:, edges[:, 0]]
    gj = labels[:, edges[:, 1]]
    r2 = np.count_nonzero(gi & gj, axis=1)
    r1 = np.count_nonzero(~(gi | gj), axis=1)
    return r1, r2


def edge_counts(g: SimilarityGraph, lab) -> EdgeCounts:
    labels = _labels_array(lab)
    if labels.size != g.n_nodes:
        raise LengthMismatch(f"{labels.size} labels for a graph on {g.n_nodes} nodes")
    r1, r2 = counts_batch(g.edges, labels[None, :])
    r1, r2 = int(r1[0]), int(r2[0])
    return EdgeCounts(g.n_edges - r1 - r2, r1, r2)


# -- graph statistics ---------------------------------------------------------


def check_sigma(mom: NullMoments) -> None:
    s11, s22, s12 = mom.sigma11, mom.sigma22, mom.sigma12
    det = s11 * s22 - s12 * s12
    if not (s11 > 0 and s22 > 0 and det > S_DET_TOL * s11 * s22):
        raise SingularCovariance(
            "null covariance of (R1, R2) is singular; use a denser graph or larger samples"
        )


def s_batch(r1, r2, mom: NullMoments) -> np.ndarray:
    check_sigma(mom)
    s11, s22, s12 = mom.sigma11, mom.sigma22, mom.sigma12
    det = s11 * s22 - s12 * s12
    d1 = np.asarray(r1, dtype=float) - mom.mu1
    d2 = np.asarray(r2, dtype=float) - mom.mu2
    return (s22 * d1 * d1 - 2.0 * s12 * d1 * d2 + s11 * d2 * d2) / det


def z0_batch(r0, mom: NullMoments) -> np.ndarray:
    if not mom.var0 > 0:
        raise DegenerateGraph("variance of R0 is zero")
    return (np.asarray(r0, dtype=float) - mom.mu0) / np.sqrt(mom.var0)


def t_batch(r1, r2, mom: NullMoments, variant: int) -> np.ndarray:
    d1 = np.asarray(r1, dtype=float) - mom.mu1
    d2 = np.asarray(r2, dtype=float) - mom.mu2
    if variant in (2, 4) and not (mom.sigma11 > 0 and mom.sigma22 > 0):
        raise DegenerateGraph(f"T{variant} needs positive null variances")
    if variant == 1:
        return np.abs(d1) + np.abs(d2)
    if variant == 2:
        return np.abs(d1) / np.sqrt(mom.sigma11) + np.abs(d2) / np.sqrt(mom.sigma22)
    if variant == 3:
        return d1 * d1 + d2 * d2
    if variant == 4:
        return d1 * d1 / mom.sigma11 + d2 * d2 / mom.sigma22
    raise ValueError(f"T variant must be 1..4, got {variant}")


def graph_statistic_batch(name: str, r1, r2, n_edges: int, mom: NullMoments) -> np.ndarray:
    r1 = np.asarray(r1)
    r2 = np.asarray(r2)
    if name == "S":
        return s_batch(r1, r2, mom)
    if name == "R0":
        return (n_edges - r1 - r2).astype(float)
    if name == "Z0":
        return z0_batch(n_edges - r1 - r2, mom)
    if name in ("T1", "T2", "T3", "T4"):
        return t_batch(r1, r2, mom, int(name[1]))
    raise ValueError(f"{name!r} is not an edge-count statistic")


def statistic_S(counts: EdgeCounts, mom: NullMoments) -> StatisticValue:
    return StatisticValue.of("S", s_batch(counts.r1, counts.r2, mom))


def statistic_Z0(counts: EdgeCounts, mom: NullMoments) -> StatisticValue:
    return StatisticValue.of("Z0", z0_batch(counts.r0, mom))


def statistic_T(counts: EdgeCounts, mom: NullMoments, variant: int) -> StatisticValue:
    return StatisticValue.of(f"T{variant}", t_batch(counts.r1, counts.r2, mom, variant))


# -- degree test --------------------------------------------------------------


def degree_table_batch(is_leaf: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """(B, 2, 2) tables: rows sample X / Y, columns degree 1 / other."""
    labels = np.atleast_2d(labels).astype(bool)
    leaf = is_leaf.astype(bool)
    x_leaf = np.count_nonzero(~labels & leaf, axis=1)
    x_all = np.count_nonzero(~labels, axis=1)
    y_leaf = np.count_nonzero(labels & leaf, axis=1)
    y_all = labels.shape[1] - x_all
    return np.stack(
        [np.stack([x_leaf, x_all - x_leaf], 1), np.stack([y_leaf, y_all - y_leaf], 1)], 1
    )


def chi2_2x2(tables: np.ndarray) -> np.ndarray:
    """Pearson chi-square without continuity correction."""
    t = np.asarray(tables, dtype=float).reshape(-1, 2, 2)
    a, b, c, d = t[:, 0, 0], t[:, 0, 1], t[:, 1, 0], t[:, 1, 1]
    margins = (a + b) * (c + d) * (a + c) * (b + d)
    if np.any(margins == 0):
        raise DegenerateTable("degree table has an empty row or column")
    n = a + b + c + d
    return n * (a * d - b * c) ** 2 / margins


def degree_test(g: SimilarityGraph, lab) -> tuple[StatisticValue, np.ndarray]:
    labels = _labels_array(lab)
    if labels.size != g.n_nodes:
        raise LengthMismatch(f"{labels.size} labels for a graph on {g.n_nodes} nodes")
    table = degree_table_batch(g.degrees() == 1, labels[None, :])[0]
    return StatisticValue.of("degree_chi2", chi2_2x2(table)[0]), table


# -- parametric baselines -----------------------------------------------------


def logdet_pivoted(a: np.ndarray) -> float | None:
    """log|det a| via LU with partial pivoting, or None if numerically singular."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    scale = np.max(np.abs(a))
    if scale == 0:
        return None
    with warnings.catch_warnings():
        # exact singularity is handled by the pivot check below
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, _ = scipy.linalg.lu_factor(a, check_finite=False)
    piv = np.abs(np.diag(lu))
    if np.any(piv < PIVOT_TOL * scale):
        return None
    return float(np.sum(np.log(piv)))


def _split(points, lab):
    x = points.data if isinstance(points, PointSet) else np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    labels = _labels_array(lab)
    if labels.size != x.shape[0]:
        raise LengthMismatch(f"{x.shape[0]} points but {labels.size} labels")
    return x, labels.astype(bool)


def scatter(x: np.ndarray) -> np.ndarray:
    c = x - x.mean(axis=0)
    return c.T @ c


class HotellingBatch:
    """Two-sample Hotelling T^2 for many labelings of the same points.

    With T the total centered scatter and D the mean difference,
    W = T - (nm/N) D D', so T^2 = q / (1 - q) with q = (nm/N) D' T^-1 D.
    """

    def __init__(self, x: np.ndarray, n: int):
        self.x = np.asarray(x, dtype=float)
        N, d = self.x.shape
        self.n, self.m = n, N - n
        self.factor = n * self.m / N
        total = scatter(self.x)
        if logdet_pivoted(total) is None:
            raise SingularCovariance("total scatter is singular")
        chol = np.linalg.cholesky(total)
        self.z = np.linalg.solve(chol, (self.x - self.x.mean(axis=0)).T).T

    def __call__(self, labels: np.ndarray) -> np.ndarray:
        labels = np.atleast_2d(labels).astype(float)
        sx = (1.0 - labels) @ self.z
        sy = labels @ self.z
        diff = sx / self.n - sy / self.m
        q = self.factor * np.einsum("bj,bj->b", diff, diff)
        if np.any(q >= 1.0 - 1e-12):
            raise SingularCovariance("within-group scatter is singular")
        return q / (1.0 - q)


def hotelling_t2(points, lab) -> StatisticValue | Unavailable:
    x, y_mask = _split(points, lab)
    N, d = x.shape
    if d > N - 2:
        return Unavailable("hotelling_t2", f"d={d} exceeds N-2={N - 2}")
    xs, ys = x[~y_mask], x[y_mask]
    w = scatter(xs) + scatter(ys)
    if logdet_pivoted(w) is None:
        return Unavailable("hotelling_t2", "pooled within-group scatter is singular")
    diff = xs.mean(axis=0) - ys.mean(axis=0)
    n, m = len(xs), len(ys)
    val = float(diff @ np.linalg.solve(w, diff)) * n * m / N
    return StatisticValue.of("hotelling_t2", val)


class GLRBatch:
    """N log|S0| - n log|Sx| - m log|Sy| for many labelings (ML covariances)."""

    def __init__(self, x: np.ndarray, n: int):
        self.x = np.asarray(x, dtype=float)
        N, d = self.x.shape
        self.n, self.m = n, N - n
        if min(self.n, self.m) <= d:
            raise SingularCovariance("a group has no more observations than dimensions")
        ld0 = logdet_pivoted(scatter(self.x) / N)
        if ld0 is None:
            raise SingularCovariance("pooled covariance is singular")
        self.base = N * ld0
        self.outer = np.einsum("ij,ik->ijk", self.x, self.x)
        self.outer_total = self.outer.sum(axis=0)
        self.sum_total = self.x.sum(axis=0)

    def __call__(self, labels: np.ndarray) -> np.ndarray:
        ymask = np.atleast_2d(labels).astype(float)
        out = np.empty(ymask.shape[0])
        for start in range(0, ymask.shape[0], 256):
            blk = ymask[start : start + 256]
            sy = blk @ self.x
            sx = self.sum_total - sy
            oy = np.einsum("bi,ijk->bjk", blk, self.outer)
            ox = self.outer_total - oy
            cx = (ox - np.einsum("bj,bk->bjk", sx, sx) / self.n) / self.n
            cy = (oy - np.einsum("bj,bk->bjk", sy, sy) / self.m) / self.m
            sgx, ldx = np.linalg.slogdet(cx)
            sgy, ldy = np.linalg.slogdet(cy)
            if np.any(sgx <= 0) or np.any(sgy <= 0):
                raise SingularCovariance("group covariance is singular")
            out[start : start + 256] = self.base - self.n * ldx - self.m * ldy
        return out


def glr_stat(points, lab) -> StatisticValue | Unavailable:
    x, y_mask = _split(points, lab)
    N, d = x.shape
    xs, ys = x[~y_mask], x[y_mask]
    n, m = len(xs), len(ys)
    if min(n, m) <= d:
        return Unavailable("glr", f"min(n, m) = {min(n, m)} does not exceed d = {d}")
    ld0 = logdet_pivoted(scatter(x) / N)
    ldx = logdet_pivoted(scatter(xs) / n)
    ldy = logdet_pivoted(scatter(ys) / m)
    if ld0 is None or ldx is None or ldy is None:
        return Unavailable("glr", "a maximum-likelihood covariance estimate is singular")
    return StatisticValue.of("glr", N * ld0 - n * ldx - m * ldy)
