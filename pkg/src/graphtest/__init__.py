"""Graph-based two-sample tests for multivariate and object data."""

from .data_io import DistanceMatrix, Labeling, PointSet
from .distance import network_distance, pairwise_distances
from .graph import SimilarityGraph, build_kmdp, build_kmst, build_knn, graph_stats
from .inference import PermutationConfig, TestReport, run_test
from .nulldist import bootstrap_moments, permutation_moments
from .stats import edge_counts, statistic_S

__all__ = [
    "DistanceMatrix",
    "Labeling",
    "PermutationConfig",
    "PointSet",
    "SimilarityGraph",
    "TestReport",
    "bootstrap_moments",
    "build_kmdp",
    "build_kmst",
    "build_knn",
    "edge_counts",
    "graph_stats",
    "network_distance",
    "pairwise_distances",
    "permutation_moments",
    "run_test",
    "statistic_S",
]

__version__ = "0.1.0"
