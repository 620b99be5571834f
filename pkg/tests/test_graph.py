import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _oracles import (
    best_matching,
    edge_neighbourhoods,
    is_spanning_tree,
    random_distances,
    random_simple_graph,
    spanning_trees,
)
from graphtest.data_io import DistanceMatrix, PointSet
from graphtest.distance import pairwise_distances
from graphtest.errors import InfeasibleK, ShapeError
from graphtest.graph import (
    SimilarityGraph,
    build_graph,
    build_kmdp,
    build_kmst,
    build_knn,
    edge_ranks,
    graph_stats,
    kmdp_rounds,
    kmst_rounds,
    normality_diagnostics,
    total_weight,
)

SQUARE = PointSet(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]))


def square_dist():
    return pairwise_distances(SQUARE, "euclidean")


def edges_of(g):
    return set(g.edge_list())


def test_kmst_two_nodes():
    g = build_kmst(DistanceMatrix(np.array([[0.0, 1.0], [1.0, 0.0]])), 1)
    assert g.edge_list() == [(0, 1)]


def test_kmst_unit_square():
    assert edges_of(build_kmst(square_dist(), 1)) == {(0, 1), (0, 3), (1, 2)}


def test_kmst_unit_square_second_round():
    rounds = kmst_rounds(square_dist(), 2)
    assert {tuple(e) for e in rounds[1]} == {(2, 3), (0, 2), (1, 3)}
    assert build_kmst(square_dist(), 2).n_edges == 6


def test_kmst_infeasible_round():
    with pytest.raises(InfeasibleK) as info:
        build_kmst(square_dist(), 3)
    assert info.value.round == 3


def test_kmdp_two_nodes():
    g = build_kmdp(DistanceMatrix(np.array([[0.0, 2.0], [2.0, 0.0]])), 1)
    assert g.edge_list() == [(0, 1)]


def test_kmdp_unit_square():
    assert build_kmdp(square_dist(), 1).edge_list() == [(0, 1), (2, 3)]


def test_kmdp_odd_pseudo_node():
    d = np.array([[0, 1, 2], [1, 0, 3], [2, 3, 0]], dtype=float)
    assert build_kmdp(DistanceMatrix(d), 1).edge_list() == [(0, 1)]


def test_kmdp_rounds_disjoint_and_infeasible():
    g = build_kmdp(square_dist(), 3)
    assert g.n_edges == 6
    with pytest.raises(InfeasibleK):
        build_kmdp(square_dist(), 4)


def test_knn_collinear():
    x = PointSet(np.array([[0.0], [1.0], [3.0]]))
    assert build_knn(pairwise_distances(x), 1).edge_list() == [(0, 1), (1, 2)]


def test_knn_two_nodes_and_complete():
    assert build_knn(DistanceMatrix(np.array([[0.0, 1.0], [1.0, 0.0]])), 1).edge_list() == [(0, 1)]
    d = random_distances(np.random.default_rng(0), 6)
    assert build_knn(DistanceMatrix(d), 5).n_edges == 15
    with pytest.raises(InfeasibleK):
        build_knn(DistanceMatrix(d), 6)


def test_build_graph_dispatch():
    with pytest.raises(ValueError):
        build_graph(square_dist(), "delaunay", 1)
    assert build_graph(square_dist(), "kmst", 1) == build_kmst(square_dist(), 1)


def test_from_edges_validation():
    with pytest.raises(ShapeError):
        SimilarityGraph.from_edges(3, [(0, 0)])
    with pytest.raises(ShapeError):
        SimilarityGraph.from_edges(3, [(0, 3)])
    with pytest.raises(ShapeError):
        SimilarityGraph.from_edges(3, [(0, 1), (1, 0)])
    g = SimilarityGraph.from_edges(3, [(2, 1), (1, 0)])
    assert g.edge_list() == [(0, 1), (1, 2)]


# -- brute-force optimality ----------------------------------------------------


@pytest.mark.parametrize("seed", range(40))
def test_mst_matches_enumeration(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 7))
    d = random_distances(rng, n, integer=bool(seed % 2), high=3)
    tree = build_kmst(DistanceMatrix(d), 1)
    assert is_spanning_tree(n, tree.edge_list())
    best = min(sum(d[i, j] for i, j in t) for t in spanning_trees(n))
    assert total_weight(tree, d) == pytest.approx(best, abs=1e-12)
    # with ties, the chosen tree is the unique minimiser of the tie-broken ranks
    ranks = edge_ranks(d)
    oracle = min(spanning_trees(n), key=lambda t: sum(ranks[i, j] for i, j in t))
    assert edges_of(tree) == set(oracle)


@pytest.mark.parametrize("seed", range(40))
def test_matching_matches_enumeration(seed):
    rng = np.random.default_rng(100 + seed)
    n = int(rng.choice([2, 4, 6, 8]))
    d = random_distances(rng, n, integer=bool(seed % 2), high=3)
    g = build_kmdp(DistanceMatrix(d), 1)
    w, pairs = best_matching(d)
    assert total_weight(g, d) == pytest.approx(w, abs=1e-12)
    assert g.edge_list() == pairs


def test_second_mst_is_optimal_on_remaining_edges():
    rng = np.random.default_rng(7)
    d = random_distances(rng, 6)
    r1, r2 = kmst_rounds(DistanceMatrix(d), 2)
    used = {tuple(e) for e in r1}
    allowed = {(i, j) for i in range(6) for j in range(i + 1, 6)} - used
    best = min(sum(d[i, j] for i, j in t) for t in spanning_trees(6, allowed))
    assert sum(d[i, j] for i, j in r2) == pytest.approx(best)


def test_odd_matching_oracle():
    rng = np.random.default_rng(11)
    for _ in range(10):
        d = random_distances(rng, 5)
        aug = np.zeros((6, 6))
        aug[:5, :5] = d
        w, pairs = best_matching(aug)
        expected = [p for p in pairs if p[1] < 5]
        assert build_kmdp(DistanceMatrix(d), 1).edge_list() == expected


@settings(max_examples=25, deadline=None)
@given(st.integers(4, 12), st.integers(1, 3), st.integers(0, 10_000))
def test_kmst_structure(n, k, seed):
    d = random_distances(np.random.default_rng(seed), n)
    if k * (n - 1) > n * (n - 1) // 2:
        return
    try:
        rounds = kmst_rounds(DistanceMatrix(d), k)
    except InfeasibleK:
        return
    seen = set()
    for r in rounds:
        pairs = {tuple(e) for e in r}
        assert is_spanning_tree(n, list(pairs))
        assert not pairs & seen
        seen |= pairs
    assert build_kmst(DistanceMatrix(d), k).n_edges == k * (n - 1)


@settings(max_examples=25, deadline=None)
@given(st.integers(4, 9), st.integers(0, 10_000))
def test_mst_weight_invariant_under_relabeling(n, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, 2))
    perm = rng.permutation(n)
    d1 = pairwise_distances(PointSet(x))
    d2 = pairwise_distances(PointSet(x[perm]))
    w1 = total_weight(build_kmst(d1, 1), d1)
    w2 = total_weight(build_kmst(d2, 1), d2)
    assert w1 == pytest.approx(w2, rel=1e-12)
    m1 = total_weight(build_kmdp(d1, 1), d1)
    m2 = total_weight(build_kmdp(d2, 1), d2)
    assert m1 == pytest.approx(m2, rel=1e-12)


def test_builders_deterministic():
    d = pairwise_distances(PointSet(np.random.default_rng(5).standard_normal((20, 3))))
    for kind in ("kmst", "kmdp", "knn"):
        assert build_graph(d, kind, 2) == build_graph(d, kind, 2)


# -- structural statistics -----------------------------------------------------


def test_stats_path():
    gs = graph_stats(SimilarityGraph.from_edges(4, [(0, 1), (1, 2), (2, 3)]))
    assert gs.n_edges == 3
    assert gs.degrees.tolist() == [1, 2, 2, 1]
    assert (gs.sum_deg_sq, gs.c_pairs) == (10, 2)


def test_stats_two_disjoint_edges():
    gs = graph_stats(SimilarityGraph.from_edges(4, [(0, 1), (2, 3)]))
    assert gs.c_pairs == 0
    assert gs.a_sizes.tolist() == [1, 1] and gs.b_sizes.tolist() == [1, 1]
    assert gs.sum_AeBe == 2


def test_stats_star():
    gs = graph_stats(SimilarityGraph.from_edges(4, [(0, 1), (0, 2), (0, 3)]))
    assert gs.degrees.tolist() == [3, 1, 1, 1]
    assert gs.c_pairs == 3
    assert gs.a_sizes.tolist() == [3, 3, 3] and gs.b_sizes.tolist() == [3, 3, 3]
    assert gs.sum_AeBe == 27


@pytest.mark.parametrize("seed", range(30))
def test_neighbourhoods_match_sets(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 10))
    edges = random_simple_graph(rng, n, float(rng.uniform(0.1, 0.8)))
    gs = graph_stats(SimilarityGraph.from_edges(n, edges))
    a, b = edge_neighbourhoods(n, sorted(edges))
    assert gs.a_sizes.tolist() == a
    assert gs.b_sizes.tolist() == b
    pairs_sharing = sum(
        1 for x in range(len(edges)) for y in range(x + 1, len(edges))
        if set(edges[x]) & set(edges[y])
    )
    assert gs.c_pairs == pairs_sharing


def test_diagnostics_perfect_matching_100():
    g = SimilarityGraph.from_edges(100, [(2 * i, 2 * i + 1) for i in range(50)])
    diag = normality_diagnostics(graph_stats(g))
    assert diag.edges_per_node == 0.5
    assert diag.deg_sq_per_node == 1.0
    # sum |A_e||B_e| = 50 edges * 1 * 1, over 100**1.5
    assert diag.ab_ratio == pytest.approx(0.05)
    assert not diag.asymptotics_questionable


def test_diagnostics_star_100():
    g = SimilarityGraph.from_edges(100, [(0, i) for i in range(1, 100)])
    diag = normality_diagnostics(graph_stats(g))
    assert diag.ab_ratio == pytest.approx(99**3 / 1000)
    assert diag.asymptotics_questionable


def test_diagnostics_single_edge():
    diag = normality_diagnostics(graph_stats(SimilarityGraph.from_edges(2, [(0, 1)])))
    assert (diag.edges_per_node, diag.deg_sq_per_node) == (0.5, 1.0)
    assert diag.ab_ratio == pytest.approx(1 / 2**1.5)
    assert not diag.asymptotics_questionable
    assert set(diag.to_dict()) == {
        "edges_per_node", "deg_sq_per_node", "sum_AeBe_per_N32", "max_degree",
        "asymptotics_questionable",
    }


def test_empty_graph_stats():
    gs = graph_stats(SimilarityGraph.from_edges(5, []))
    assert (gs.n_edges, gs.sum_deg_sq, gs.c_pairs, gs.sum_AeBe) == (0, 0, 0, 0)
    assert math.isclose(normality_diagnostics(gs).ab_ratio, 0.0)
