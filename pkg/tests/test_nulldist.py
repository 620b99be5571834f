import math
from fractions import Fraction

import numpy as np
import pytest

from _oracles import bootstrap_by_enumeration, moments_by_enumeration, random_simple_graph
from graphtest.errors import DegenerateGraph, TooFewObservations
from graphtest.graph import SimilarityGraph, graph_stats
from graphtest.nulldist import (
    asymptotic_agreement,
    bootstrap_moments,
    falling_fraction,
    permutation_moments,
)

PATH = SimilarityGraph.from_edges(4, [(0, 1), (1, 2), (2, 3)])


def test_path_moments():
    mom = permutation_moments(graph_stats(PATH), 2, 2)
    assert mom.mu1 == pytest.approx(0.5) and mom.mu2 == pytest.approx(0.5)
    assert mom.sigma11 == pytest.approx(0.25) and mom.sigma22 == pytest.approx(0.25)
    assert mom.sigma12 == pytest.approx(1 / 12)
    assert mom.mu0 == pytest.approx(2.0)
    assert mom.var0 == pytest.approx(2 / 3)


def test_path_moments_match_enumeration():
    mu1, mu2, s11, s22, s12 = moments_by_enumeration(4, PATH.edge_list(), 2)
    assert (mu1, mu2, s11, s22, s12) == (
        Fraction(1, 2), Fraction(1, 2), Fraction(1, 4), Fraction(1, 4), Fraction(1, 12)
    )


def test_network_sized_moments():
    # a graph with |G| = 987 on 330 nodes; only |G| enters the means
    edges = [(i, j) for i in range(330) for j in range(i + 1, min(i + 5, 330))][:987]
    gs = graph_stats(SimilarityGraph.from_edges(330, edges))
    assert gs.n_edges == 987
    mom = permutation_moments(gs, 236, 94)
    assert round(mom.mu0, 1) == 403.3
    assert round(mom.mu1, 1) == 504.2
    assert round(mom.mu2, 1) == 79.5


def test_empty_graph_moments():
    mom = permutation_moments(graph_stats(SimilarityGraph.from_edges(5, [])), 2, 3)
    assert (mom.mu1, mom.mu2, mom.mu0, mom.var0) == (0, 0, 0, 0)
    assert mom.sigma_array().tolist() == [[0, 0], [0, 0]]


def test_size_mismatch_and_tiny_samples():
    with pytest.raises(ValueError):
        permutation_moments(graph_stats(PATH), 2, 3)
    with pytest.raises(TooFewObservations):
        permutation_moments(graph_stats(SimilarityGraph.from_edges(3, [(0, 1)])), 1, 2)


@pytest.mark.parametrize("seed", range(25))
def test_moments_match_enumeration(seed):
    rng = np.random.default_rng(seed)
    n_nodes = int(rng.integers(4, 9))
    edges = random_simple_graph(rng, n_nodes, float(rng.uniform(0.2, 0.9)))
    gs = graph_stats(SimilarityGraph.from_edges(n_nodes, edges))
    for n in range(1, n_nodes):
        mom = permutation_moments(gs, n, n_nodes - n)
        exact = moments_by_enumeration(n_nodes, edges, n)
        got = (mom.mu1, mom.mu2, mom.sigma11, mom.sigma22, mom.sigma12)
        for g, e in zip(got, exact):
            assert g == pytest.approx(float(e), rel=1e-12, abs=1e-12)


def test_falling_fraction():
    assert falling_fraction(5, 10, 2) == Fraction(20, 90)
    assert falling_fraction(1, 10, 2) == 0
    assert falling_fraction(3, 3, 3) == 1


def test_bootstrap_path():
    b = bootstrap_moments(graph_stats(PATH), 2, 2)
    assert b.mu1_b == pytest.approx(0.75)
    assert b.var1_b == pytest.approx(0.8125)
    assert b.r_n == 0.5


def test_bootstrap_degenerate_r_one():
    # r = 1 cannot come from valid samples; substitute directly
    gs = graph_stats(PATH)
    r = 1.0
    mu = gs.n_edges * r**2
    var = gs.n_edges * r**2 * (1 - r) ** 2 + gs.sum_deg_sq * r**3 * (1 - r)
    assert (mu, var) == (3.0, 0.0)


def test_bootstrap_empty():
    b = bootstrap_moments(graph_stats(SimilarityGraph.from_edges(4, [])), 2, 2)
    assert (b.mu1_b, b.mu2_b, b.var1_b, b.var2_b) == (0, 0, 0, 0)


@pytest.mark.parametrize("seed", range(10))
def test_bootstrap_matches_enumeration(seed):
    rng = np.random.default_rng(seed)
    n_nodes = int(rng.integers(3, 9))
    edges = random_simple_graph(rng, n_nodes, 0.5)
    n = int(rng.integers(1, n_nodes))
    b = bootstrap_moments(graph_stats(SimilarityGraph.from_edges(n_nodes, edges)), n, n_nodes - n)
    mean, var = bootstrap_by_enumeration(n_nodes, edges, n / n_nodes)
    assert b.mu1_b == pytest.approx(mean, abs=1e-12)
    assert b.var1_b == pytest.approx(var, abs=1e-12)
    # sample Y is the same computation with the roles swapped
    mean2, var2 = bootstrap_by_enumeration(n_nodes, edges, 1 - n / n_nodes)
    assert b.mu2_b == pytest.approx(mean2, abs=1e-12)
    assert b.var2_b == pytest.approx(var2, abs=1e-12)


def test_agreement_path():
    gs = graph_stats(PATH)
    agree = asymptotic_agreement(permutation_moments(gs, 2, 2), bootstrap_moments(gs, 2, 2))
    assert agree.sd_ratio1 == pytest.approx(math.sqrt(0.8125 / 0.25))
    assert agree.sd_ratio1 == pytest.approx(1.803, abs=1e-3)


def test_agreement_empty_graph():
    gs = graph_stats(SimilarityGraph.from_edges(4, []))
    with pytest.raises(DegenerateGraph):
        asymptotic_agreement(permutation_moments(gs, 2, 2), bootstrap_moments(gs, 2, 2))
