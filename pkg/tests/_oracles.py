"""Brute-force reference implementations used only by the tests.

Everything here is deliberately naive: enumerate, count, compare.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations

import numpy as np


def all_pairs(n):
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def is_spanning_tree(n, edges):
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            a = parent[a]
        return a

    for i, j in edges:
        ri, rj = find(i), find(j)
        if ri == rj:
            return False
        parent[ri] = rj
    return len(edges) == n - 1


def spanning_trees(n, allowed=None):
    pool = all_pairs(n) if allowed is None else sorted(allowed)
    for combo in combinations(pool, n - 1):
        if is_spanning_tree(n, combo):
            yield combo


def perfect_matchings(nodes):
    nodes = list(nodes)
    if not nodes:
        yield []
        return
    a = nodes[0]
    for k in range(1, len(nodes)):
        b = nodes[k]
        rest = nodes[1:k] + nodes[k + 1 :]
        for m in perfect_matchings(rest):
            yield [(a, b)] + m


def best_matching(d):
    """Minimum weight, then lexicographically smallest sorted pair list."""
    n = d.shape[0]
    best = None
    for m in perfect_matchings(range(n)):
        w = sum(d[i, j] for i, j in m)
        key = (w, sorted(m))
        if best is None or key < best:
            best = key
    return best


def moments_by_enumeration(n_nodes, edges, n):
    """Exact E R1, E R2 and Cov(R1, R2) over all labelings with n zeros."""
    total = 0
    s1 = s2 = s11 = s22 = s12 = 0
    for xs in combinations(range(n_nodes), n):
        xset = set(xs)
        r1 = sum(1 for i, j in edges if i in xset and j in xset)
        r2 = sum(1 for i, j in edges if i not in xset and j not in xset)
        total += 1
        s1 += r1
        s2 += r2
        s11 += r1 * r1
        s22 += r2 * r2
        s12 += r1 * r2
    f = lambda v: Fraction(v, total)  # noqa: E731
    mu1, mu2 = f(s1), f(s2)
    return mu1, mu2, f(s11) - mu1 * mu1, f(s22) - mu2 * mu2, f(s12) - mu1 * mu2


def bootstrap_by_enumeration(n_nodes, edges, r):
    """Mean and variance of R1 when each node joins X with probability r."""
    e1 = e11 = 0.0
    for mask in range(2**n_nodes):
        inx = [(mask >> v) & 1 for v in range(n_nodes)]
        k = sum(inx)
        p = r**k * (1 - r) ** (n_nodes - k)
        r1 = sum(1 for i, j in edges if inx[i] and inx[j])
        e1 += p * r1
        e11 += p * r1 * r1
    return e1, e11 - e1 * e1


def edge_neighbourhoods(n_nodes, edges):
    """|A_e| and |B_e| by explicit set construction."""
    edges = [tuple(e) for e in edges]
    a_sizes, b_sizes = [], []
    for e in edges:
        a = {f for f in edges if set(f) & set(e)}
        nodes = {v for f in a for v in f}
        b = {f for f in edges if set(f) & nodes}
        a_sizes.append(len(a))
        b_sizes.append(len(b))
    return a_sizes, b_sizes


def random_simple_graph(rng, n, p):
    return [(i, j) for i, j in all_pairs(n) if rng.random() < p]


def random_distances(rng, n, integer=False, high=5):
    if integer:
        w = rng.integers(1, high + 1, size=(n, n)).astype(float)
    else:
        w = rng.random((n, n))
    d = np.triu(w, 1)
    return d + d.T
