"""Pairwise dissimilarities for points and for directed-network samples."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial.distance import cdist
from scipy.stats import rankdata

from .data_io import DistanceMatrix, PointSet
from .errors import ShapeError, SingularCovariance

METRICS = ("euclidean", "manhattan", "mahalanobis", "rank_mahalanobis")

# relative determinant (determinant of the correlation matrix) below this is singular
SINGULAR_TOL = 1e-12


@dataclass(frozen=True)
class DirectedGraphSample:
    n_actors: int
    edge_set: frozenset = field(default_factory=frozenset)

    def __init__(self, n_actors: int, edges: Iterable[tuple[int, int]] = ()):
        pairs = [(int(i), int(j)) for i, j in edges]
        for i, j in pairs:
            if i == j:
                raise ShapeError(f"self-loop ({i}, {j}) in network sample")
            if not (0 <= i < n_actors and 0 <= j < n_actors):
                raise ShapeError(f"edge ({i}, {j}) out of range for {n_actors} actors")
        if len(set(pairs)) != len(pairs):
            raise ShapeError("duplicate directed edge in network sample")
        object.__setattr__(self, "n_actors", int(n_actors))
        object.__setattr__(self, "edge_set", frozenset(pairs))


def _as_array(points) -> np.ndarray:
    return points.data if isinstance(points, PointSet) else np.asarray(points, dtype=float)


def midranks(x: np.ndarray) -> np.ndarray:
    """Column-wise ranks with ties replaced by their average rank."""
    return rankdata(x, method="average", axis=0)


def whiten(x: np.ndarray) -> np.ndarray:
    """Map rows so that Euclidean distance equals Mahalanobis distance.

    Uses the pooled covariance of all rows (denominator N-1).
    """
    x = np.asarray(x, dtype=float)
    cov = np.atleast_2d(np.cov(x, rowvar=False, ddof=1))
    sd = np.sqrt(np.diag(cov))
    if np.any(sd == 0):
        raise SingularCovariance("pooled covariance has a zero-variance column")
    corr = cov / np.outer(sd, sd)
    sign, logdet = np.linalg.slogdet(corr)
    if sign <= 0 or logdet < np.log(SINGULAR_TOL):
        raise SingularCovariance(
            "pooled covariance is singular (relative determinant below 1e-12)"
        )
    chol = np.linalg.cholesky(cov)
    # rows of x @ inv(L).T have identity covariance
    centered = x - x.mean(axis=0)
    return np.linalg.solve(chol, centered.T).T


def pairwise_distances(points, metric: str = "euclidean") -> DistanceMatrix:
    x = _as_array(points)
    if metric == "euclidean":
        d = cdist(x, x, "euclidean")
    elif metric == "manhattan":
        d = cdist(x, x, "cityblock")
    elif metric == "mahalanobis":
        w = whiten(x)
        d = cdist(w, w, "euclidean")
    elif metric == "rank_mahalanobis":
        w = whiten(midranks(x))
        d = cdist(w, w, "euclidean")
    else:
        raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")
    d = 0.5 * (d + d.T)
    np.fill_diagonal(d, 0.0)
    return DistanceMatrix(d)


def network_distance(samples: Sequence[DirectedGraphSample]) -> DistanceMatrix:
    """Number of directed edges present in exactly one of two networks."""
    if len(samples) < 2:
        raise ShapeError("need at least two network samples")
    v = samples[0].n_actors
    for s in samples:
        if s.n_actors != v:
            raise ShapeError(f"network samples disagree on actor count ({s.n_actors} vs {v})")
    ind = np.zeros((len(samples), v * v), dtype=np.float64)
    for a, s in enumerate(samples):
        for i, j in s.edge_set:
            ind[a, i * v + j] = 1.0
    # |A xor B| = |A| + |B| - 2 |A and B|
    sizes = ind.sum(axis=1)
    inter = ind @ ind.T
    d = sizes[:, None] + sizes[None, :] - 2.0 * inter
    np.fill_diagonal(d, 0.0)
    return DistanceMatrix(d)
