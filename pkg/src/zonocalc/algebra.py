"""Multilinear calculus on zonotopes: wedges, mixed and intrinsic volumes.

The wedge product of two zonotopes has one generator per pair of input
generators, with the nigiros wedging separately.  Lengths of wedge products
give mixed volumes (Schneider normalization: vol(sum t_i K_i) expands with a
symmetric coefficient for every index word, so MV(K,...,K) = vol(K)) and
intrinsic volumes via k-fold wedge powers.
"""

from __future__ import annotations

from itertools import combinations
from math import comb, factorial, gamma, pi, sqrt

import numpy as np

from .multivector import wedge_coords_batch, wedge_table
from .rng import generator
from .zonotope import Zonotope, from_samples

__all__ = [
    "wedge_zonotopes",
    "wedge_power",
    "pair_length",
    "pair_length_with_se",
    "mixed_volume",
    "intrinsic_volume",
    "volume",
    "length_with_balls_check",
    "af_inequality",
    "bm_inequality",
    "ball_volume",
    "sphere_volume",
    "gaussian_expected_wedge_norm",
    "gaussian_ball",
]

SUBSET_CAP = 10_000_000
PAIR_BLOCK = 262_144


def ball_volume(k: int) -> float:
    """Volume b_k of the unit ball in R^k."""
    return pi ** (k / 2.0) / gamma(k / 2.0 + 1.0)


def sphere_volume(k: int) -> float:
    """Volume s_k of the unit k-sphere in R^{k+1}."""
    return 2.0 ** (k + 1) * pi**k / (factorial(k) * ball_volume(k))


def gaussian_expected_wedge_norm(m: int, k: int) -> float:
    """E ||xi_1 ^ ... ^ xi_k|| for i.i.d. standard Gaussians in R^m."""
    if not 0 <= k <= m:
        raise ValueError("need 0 <= k <= m")
    num = factorial(m) * ball_volume(m)
    den = (2.0 * pi) ** (k / 2.0) * factorial(m - k) * ball_volume(m - k)
    return num / den


def gaussian_ball(m: int, n_samples: int = 100_000, seed: int = 0, stream: int = 0) -> Zonotope:
    """Empirical zonotope approximating the unit ball B_m.

    The centered zonoid of a standard Gaussian is B_m / sqrt(2 pi), so
    scaling the samples by sqrt(2 pi) targets the unit ball.
    """
    rng = generator(seed, 0xBA11, stream)
    xs = sqrt(2.0 * pi) * rng.standard_normal((n_samples, m))
    return from_samples(xs, mode="centered")


def wedge_zonotopes(K: Zonotope, L: Zonotope, merge: bool = True) -> Zonotope:
    """Wedge product: all generator pairs, nigiros wedge separately."""
    if K.m != L.m:
        raise ValueError(f"ambient dimension mismatch: {K.m} vs {L.m}")
    if K.k + L.k > K.m:
        raise ValueError(f"grade overflow: {K.k} + {L.k} > {K.m}")
    W = wedge_table(K.m, K.k, L.k)
    nig = np.einsum("p,q,pqo->o", K.nigiro, L.nigiro, W)
    n_pairs = K.n_generators * L.n_generators
    if n_pairs == 0:
        return Zonotope(K.m, K.k + L.k, np.zeros(0), np.zeros((0, W.shape[2])), nig)
    prods = np.einsum("ip,jq,pqo->ijo", K.vectors, L.vectors, W)
    weights = np.multiply.outer(K.weights, L.weights).reshape(-1)
    out = Zonotope(K.m, K.k + L.k, weights, prods.reshape(n_pairs, -1), nig)
    return out.merged() if merge else out.pruned()


def wedge_power(K: Zonotope, k: int, cap: int = SUBSET_CAP) -> Zonotope:
    """k-fold wedge power of a grade-1 zonotope by subset enumeration.

    The centered part is k! sum over generator subsets {i_1 < ... < i_k} of
    (w_{i_1} ... w_{i_k}) underline(v_{i_1} ^ ... ^ v_{i_k}); the nigiro
    vanishes for k >= 2 because e ^ e = 0.
    """
    if K.k != 1:
        raise ValueError("wedge powers are defined here for grade-1 zonotopes")
    if k < 1:
        raise ValueError("power must be >= 1")
    if k > K.m:
        raise ValueError(f"grade overflow: {k} > {K.m}")
    if k == 1:
        return K
    z = K.pruned()
    n = z.n_generators
    if k > n:
        return Zonotope.zero(K.m, k)
    n_terms = comb(n, k)
    if n_terms > cap:
        raise ValueError(
            f"subset enumeration needs {n_terms} terms (cap {cap}); merge generators first"
        )
    idx = np.array(list(combinations(range(n), k)), dtype=np.intp)
    stacks = z.vectors[idx]  # (n_terms, k, m)
    coords = wedge_coords_batch(stacks)
    weights = factorial(k) * np.prod(z.weights[idx], axis=1)
    out = Zonotope(K.m, k, weights, coords, np.zeros(comb(K.m, k)))
    return out.pruned()


def _pair_length_2d(a: np.ndarray, b: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """sum_ij |det(a_i, b_j)| for planar vectors, in O(n log n).

    Returns the total and the per-row/per-column partial sums.  Rows with
    angle theta and columns phi contribute r_i s_j sin|theta_i - phi_j| once
    all angles are folded into [0, pi).
    """
    ra = np.linalg.norm(a, axis=1)
    rb = np.linalg.norm(b, axis=1)
    ta = np.mod(np.arctan2(a[:, 1], a[:, 0]), pi)
    tb = np.mod(np.arctan2(b[:, 1], b[:, 0]), pi)
    order = np.argsort(tb, kind="stable")
    tb_s, rb_s = tb[order], rb[order]
    cos_b, sin_b = rb_s * np.cos(tb_s), rb_s * np.sin(tb_s)
    C = np.concatenate([[0.0], np.cumsum(cos_b)])
    S = np.concatenate([[0.0], np.cumsum(sin_b)])
    pos = np.searchsorted(tb_s, ta, side="left")
    sin_a, cos_a = np.sin(ta), np.cos(ta)
    row = ra * (
        sin_a * C[pos] - cos_a * S[pos] + cos_a * (S[-1] - S[pos]) - sin_a * (C[-1] - C[pos])
    )
    total = float(np.sum(row))
    # column partials by the symmetric sweep
    order_a = np.argsort(ta, kind="stable")
    ta_s, ra_s = ta[order_a], ra[order_a]
    Ca = np.concatenate([[0.0], np.cumsum(ra_s * np.cos(ta_s))])
    Sa = np.concatenate([[0.0], np.cumsum(ra_s * np.sin(ta_s))])
    posb = np.searchsorted(ta_s, tb, side="left")
    sin_bb, cos_bb = np.sin(tb), np.cos(tb)
    col = rb * (
        sin_bb * Ca[posb] - cos_bb * Sa[posb] + cos_bb * (Sa[-1] - Sa[posb]) - sin_bb * (Ca[-1] - Ca[posb])
    )
    return total, row, col


def _pair_length_blocked(K: Zonotope, L: Zonotope) -> tuple[float, np.ndarray, np.ndarray]:
    W = wedge_table(K.m, K.k, L.k)
    n1, n2 = K.n_generators, L.n_generators
    rows = np.zeros(n1)
    cols = np.zeros(n2)
    block = max(1, PAIR_BLOCK // max(n2, 1))
    for start in range(0, n1, block):
        stop = min(start + block, n1)
        prods = np.einsum("ip,jq,pqo->ijo", K.vectors[start:stop], L.vectors, W)
        norms = np.linalg.norm(prods, axis=2)
        norms *= K.weights[start:stop, None]
        norms *= L.weights[None, :]
        rows[start:stop] = norms.sum(axis=1)
        cols += norms.sum(axis=0)
    return float(rows.sum()), rows, cols


def _pair_partials(K: Zonotope, L: Zonotope) -> tuple[float, np.ndarray, np.ndarray]:
    if K.m != L.m:
        raise ValueError(f"ambient dimension mismatch: {K.m} vs {L.m}")
    if K.k + L.k > K.m:
        raise ValueError(f"grade overflow: {K.k} + {L.k} > {K.m}")
    if K.n_generators == 0 or L.n_generators == 0:
        return 0.0, np.zeros(K.n_generators), np.zeros(L.n_generators)
    if K.m == 2 and K.k == 1 and L.k == 1:
        a = K.weights[:, None] * K.vectors
        b = L.weights[:, None] * L.vectors
        return _pair_length_2d(a, b)
    return _pair_length_blocked(K, L)


def pair_length(K: Zonotope, L: Zonotope) -> float:
    """ell(K ^ L) computed without materializing the product generators."""
    return _pair_partials(K, L)[0]


def pair_length_with_se(K: Zonotope, L: Zonotope) -> tuple[float, float]:
    """ell(K ^ L) plus a two-sample projection standard error.

    Meaningful when the generators of each body are i.i.d. Monte Carlo draws
    (as produced by empirical section estimates); the estimator is then a
    two-sample U-statistic and the dominant variance is the Hajek projection.
    """
    total, rows, cols = _pair_partials(K, L)
    n1, n2 = max(K.n_generators, 1), max(L.n_generators, 1)
    var = 0.0
    if n1 > 1:
        var += float(np.var(rows * n1, ddof=1)) / n1
    if n2 > 1:
        var += float(np.var(cols * n2, ddof=1)) / n2
    return total, sqrt(var)


def mixed_volume(Ks) -> float:
    """MV(K_1, ..., K_m) = ell(K_1 ^ ... ^ K_m) / m! for grade-1 bodies."""
    Ks = list(Ks)
    if not Ks:
        raise ValueError("mixed volume needs at least one body")
    m = Ks[0].m
    if len(Ks) != m:
        raise ValueError(f"need exactly {m} bodies in R^{m}, got {len(Ks)}")
    for K in Ks:
        if K.k != 1 or K.m != m:
            raise ValueError("mixed volume expects grade-1 bodies in a common space")
    acc = Ks[0]
    for K in Ks[1:-1]:
        acc = wedge_zonotopes(acc, K)
    tail = Ks[-1] if len(Ks) > 1 else None
    total = pair_length(acc, tail) if tail is not None else acc.length()
    return total / factorial(m)


def intrinsic_volume(K: Zonotope, k: int) -> float:
    """k-th intrinsic volume of a grade-1 zonotope via wedge powers."""
    if K.k != 1:
        raise ValueError("intrinsic volumes expect a grade-1 zonotope")
    if not 0 <= k <= K.m:
        raise ValueError(f"order {k} out of range [0, {K.m}]")
    if k == 0:
        return 1.0
    if k == 1:
        return K.length()
    if k == 2:
        return 0.5 * pair_length(K, K)
    return wedge_power(K, k).length() / factorial(k)


def volume(K: Zonotope) -> float:
    return intrinsic_volume(K, K.m)


def length_with_balls_check(
    C: Zonotope, ball_samples: int = 100_000, seed: int = 0
) -> tuple[float, float]:
    """Both sides of ell(C) = ell(C ^ B_m^(m-k)) / ((m-k)! b_{m-k}).

    The left side is exact; the right side uses a fresh empirical ball
    approximant, so the two sides form an internal consistency check.
    """
    m, k = C.m, C.k
    d = m - k
    lhs = C.length()
    if d == 0:
        return lhs, lhs
    ball = gaussian_ball(m, ball_samples, seed)
    power = ball if d == 1 else wedge_power(ball, d)
    rhs = pair_length(C, power) / (factorial(d) * ball_volume(d))
    return lhs, rhs


def af_inequality(K: Zonotope, L: Zonotope, rest=()) -> tuple[float, float, bool]:
    """Alexandrov-Fenchel check: MV(K,L,rest) >= sqrt(MV(K,K,rest) MV(L,L,rest))."""
    rest = list(rest)
    lhs = mixed_volume([K, L, *rest])
    rhs = sqrt(max(0.0, mixed_volume([K, K, *rest])) * max(0.0, mixed_volume([L, L, *rest])))
    return lhs, rhs, bool(lhs >= rhs - 1e-9)


def bm_inequality(K0: Zonotope, K1: Zonotope, t: float) -> tuple[float, float, bool]:
    """Brunn-Minkowski check: vol((1-t)K0 + tK1) >= vol(K0)^(1-t) vol(K1)^t."""
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    lhs = volume(K0.convex_combine(K1, t))
    v0, v1 = max(volume(K0), 0.0), max(volume(K1), 0.0)
    rhs = v0 ** (1.0 - t) * v1**t  # 0 ** 0 == 1 covers the endpoint conventions
    return lhs, rhs, bool(lhs >= rhs - 1e-9)
