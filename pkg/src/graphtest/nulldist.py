"""Null moments of the within-sample edge counts.

Permutation-null moments are exact for any graph; bootstrap-null moments
assign each node to sample X independently with probability n/N.
"""

from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGraph, TooFewObservations
from .graph import GraphStats


def falling_fraction(a: int, total: int, r: int) -> Fraction:
    """a(a-1)...(a-r+1) / (total(total-1)...(total-r+1)) as an exact fraction."""
    if a < r:
        return Fraction(0)
    return Fraction(math.perm(a, r), math.perm(total, r))


@dataclass(frozen=True)
class NullMoments:
    mu1: float
    mu2: float
    sigma: tuple[tuple[float, float], tuple[float, float]]
    mu0: float
    var0: float
    corr12: float

    @property
    def sigma11(self) -> float:
        return self.sigma[0][0]

    @property
    def sigma22(self) -> float:
        return self.sigma[1][1]

    @property
    def sigma12(self) -> float:
        return self.sigma[0][1]

    def sigma_array(self) -> np.ndarray:
        return np.array(self.sigma, dtype=float)


def permutation_moments(stats: GraphStats, n: int, m: int) -> NullMoments:
    """Mean and covariance of (R1, R2) over all C(N, n) labelings.

    R1 counts edges inside sample X (n nodes), R2 edges inside sample Y.
    """
    N = n + m
    if N != stats.n_nodes:
        raise ValueError(f"n + m = {N} does not match graph size {stats.n_nodes}")
    if n < 1 or m < 1:
        raise TooFewObservations("both samples need at least one observation")
    G = stats.n_edges
    C = stats.c_pairs
    if G == 0:
        zero = ((0.0, 0.0), (0.0, 0.0))
        return NullMoments(0.0, 0.0, zero, 0.0, 0.0, 0.0)
    if N < 4:
        raise TooFewObservations("covariance of edge counts needs N >= 4")
    # exact rational arithmetic: the covariances are small differences of large terms
    p2x, p2y = falling_fraction(n, N, 2), falling_fraction(m, N, 2)
    p3x, p3y = falling_fraction(n, N, 3), falling_fraction(m, N, 3)
    p4x, p4y = falling_fraction(n, N, 4), falling_fraction(m, N, 4)
    # disjoint edge pairs with two X nodes and two Y nodes
    pxy = p2x * falling_fraction(m, N - 2, 2)
    mu1, mu2 = G * p2x, G * p2y
    disjoint = G * (G - 1) - 2 * C
    s11 = mu1 * (1 - mu1) + 2 * C * p3x + disjoint * p4x
    s22 = mu2 * (1 - mu2) + 2 * C * p3y + disjoint * p4y
    s12 = disjoint * pxy - mu1 * mu2
    var0 = s11 + s22 + 2 * s12
    corr = float(s12) / math.sqrt(float(s11) * float(s22)) if s11 > 0 and s22 > 0 else 0.0
    f11, f22, f12 = float(s11), float(s22), float(s12)
    return NullMoments(
        float(mu1), float(mu2), ((f11, f12), (f12, f22)), float(G - mu1 - mu2), float(var0), corr
    )


@dataclass(frozen=True)
class BootstrapMoments:
    mu1_b: float
    mu2_b: float
    var1_b: float
    var2_b: float
    r_n: float


def bootstrap_moments(stats: GraphStats, n: int, m: int) -> BootstrapMoments:
    r = n / (n + m)
    G, S = stats.n_edges, stats.sum_deg_sq
    return BootstrapMoments(
        mu1_b=G * r**2,
        mu2_b=G * (1 - r) ** 2,
        var1_b=G * r**2 * (1 - r) ** 2 + S * r**3 * (1 - r),
        var2_b=G * r**2 * (1 - r) ** 2 + S * r * (1 - r) ** 3,
        r_n=r,
    )


@dataclass(frozen=True)
class AgreementRatios:
    sd_ratio1: float
    sd_ratio2: float
    mean_gap1: float
    mean_gap2: float


def asymptotic_agreement(perm: NullMoments, boot: BootstrapMoments) -> AgreementRatios:
    """Compare bootstrap- and permutation-null moments.

    Returns sigma_B/sigma for each count and the mean difference in units of
    sigma_B.
    """
    if min(perm.sigma11, perm.sigma22, boot.var1_b, boot.var2_b) <= 0:
        raise DegenerateGraph("zero null variance; agreement ratios undefined")
    sb1, sb2 = math.sqrt(boot.var1_b), math.sqrt(boot.var2_b)
    return AgreementRatios(
        sd_ratio1=sb1 / math.sqrt(perm.sigma11),
        sd_ratio2=sb2 / math.sqrt(perm.sigma22),
        mean_gap1=(boot.mu1_b - perm.mu1) / sb1,
        mean_gap2=(boot.mu2_b - perm.mu2) / sb2,
    )
