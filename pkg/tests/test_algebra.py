from math import factorial, pi, sqrt

import numpy as np
import pytest

from zonocalc.algebra import (
    _pair_length_blocked,
    af_inequality,
    ball_volume,
    bm_inequality,
    gaussian_ball,
    gaussian_expected_wedge_norm,
    intrinsic_volume,
    length_with_balls_check,
    mixed_volume,
    pair_length,
    pair_length_with_se,
    sphere_volume,
    volume,
    wedge_power,
    wedge_zonotopes,
)
from zonocalc.multivector import MultiVector
from zonocalc.rng import generator
from zonocalc.zonotope import Zonotope, from_samples, sphere_probes

from _oracles import gaussian_wedge_norm_mc, planar_zonotope_area_mc


def vec(*xs):
    return MultiVector.from_vector(np.array(xs, dtype=float))


def seg(*xs):
    return Zonotope.segment(vec(*xs))


def unit_square():
    return seg(1, 0) + seg(0, 1)


def random_planar(seed, n=6):
    rng = generator(seed, 0x9)
    return from_samples(rng.standard_normal((n, 2)), mode="centered")


# -- constants ----------------------------------------------------------------

def test_ball_and_sphere_volumes():
    assert ball_volume(1) == pytest.approx(2.0)
    assert ball_volume(2) == pytest.approx(pi)
    assert ball_volume(3) == pytest.approx(4.0 * pi / 3.0)
    assert sphere_volume(1) == pytest.approx(2.0 * pi)
    assert sphere_volume(2) == pytest.approx(4.0 * pi)


def test_gaussian_wedge_norm_formula():
    assert gaussian_expected_wedge_norm(2, 1) == pytest.approx(sqrt(pi / 2.0))
    assert gaussian_expected_wedge_norm(3, 2) == pytest.approx(2.0)


def test_gaussian_wedge_norm_against_mc():
    for m, k in [(2, 1), (3, 2), (4, 2)]:
        mc, se = gaussian_wedge_norm_mc(m, k, n=100_000)
        assert gaussian_expected_wedge_norm(m, k) == pytest.approx(mc, abs=4 * se)


# -- wedge of zonotopes ----------------------------------------------------------

def test_wedge_segments():
    W = wedge_zonotopes(seg(1, 0), seg(0, 1))
    assert W.k == 2 and W.length() == pytest.approx(1.0)


def test_wedge_with_vitale_segment():
    # K ^ [0, c] is the linear image of K under (.) ^ c
    rng = generator(1, 0)
    K = from_samples(rng.standard_normal((5, 3)), mode="segment")
    c = np.array([0.2, -1.0, 0.7])
    L = Zonotope(3, 1, np.array([1.0]), c[None, :], c)  # the segment [0, c]
    W = wedge_zonotopes(K, L, merge=False)
    from zonocalc.multivector import wedge_table

    T = np.einsum("pqo,q->op", wedge_table(3, 1, 1), c)
    img = K.apply_coordinate_map(T, 3, 2)
    probes = sphere_probes(3, 128)
    assert W.hausdorff_estimate(img, probes) < 1e-12


def test_wedge_with_point_body():
    # a one-point body contributes only its nigiro
    K = from_samples(generator(2, 0).standard_normal((4, 3)), mode="segment")
    P = Zonotope.point(vec(0.0, 0.0, 1.0))
    W = wedge_zonotopes(K, P)
    assert W.n_generators == 0
    expected = np.einsum(
        "pqo,p,q->o",
        __import__("zonocalc.multivector", fromlist=["wedge_table"]).wedge_table(3, 1, 1),
        K.nigiro,
        P.nigiro,
    )
    assert np.allclose(W.nigiro, expected)


def test_wedge_gaussian_pair_length():
    rng1, rng2 = generator(3, 1), generator(3, 2)
    K = from_samples(rng1.standard_normal((400, 3)), mode="centered")
    L = from_samples(rng2.standard_normal((400, 3)), mode="centered")
    assert pair_length(K, L) == pytest.approx(2.0, rel=0.02)


def test_wedge_grade_overflow():
    with pytest.raises(ValueError):
        wedge_zonotopes(wedge_zonotopes(seg(1, 0), seg(0, 1)), seg(1, 1))


# -- wedge powers -----------------------------------------------------------------

def test_wedge_power_unit_square():
    P = wedge_power(unit_square(), 2)
    assert P.length() == pytest.approx(2.0)  # 2! * V_2
    assert intrinsic_volume(unit_square(), 2) == pytest.approx(1.0)


def test_wedge_power_vanishes_beyond_generator_count():
    K = seg(1, 0, 0) + seg(0, 1, 0)
    assert wedge_power(K, 3).length() == 0.0


def test_hexagon_intrinsic_volume():
    gens = [[np.cos(a), np.sin(a)] for a in (0.0, pi / 3.0, 2.0 * pi / 3.0)]
    K = Zonotope(2, 1, np.ones(3), np.array(gens), np.zeros(2))
    # oracle: sum of pairwise determinants
    dets = sum(
        abs(np.linalg.det(np.array([gens[i], gens[j]])))
        for i in range(3)
        for j in range(i + 1, 3)
    )
    assert dets == pytest.approx(3.0 * sqrt(3.0) / 2.0, rel=1e-12)
    assert intrinsic_volume(K, 2) == pytest.approx(dets, rel=1e-12)


def test_wedge_power_cap():
    K = from_samples(generator(4, 0).standard_normal((100, 3)))
    with pytest.raises(ValueError, match="merge"):
        wedge_power(K, 2, cap=100)


def test_wedge_power_matches_pairwise_wedge_after_merge():
    K = random_planar(11, n=5)
    P = wedge_power(K, 2).merged()
    W = wedge_zonotopes(K, K, merge=True)
    assert P.n_generators == W.n_generators
    assert np.allclose(np.sort(P.weights), np.sort(W.weights), rtol=1e-12)
    assert P.hausdorff_estimate(W, sphere_probes(1, 2)) < 1e-14


# -- mixed volumes ----------------------------------------------------------------

def test_mixed_volume_segments():
    assert mixed_volume([seg(1, 0), seg(0, 1)]) == pytest.approx(0.5)


def test_mixed_volume_diagonal_is_volume():
    sq = unit_square()
    assert mixed_volume([sq, sq]) == pytest.approx(1.0)
    assert volume(sq) == pytest.approx(1.0)


def test_mixed_volume_ball_ball():
    B = gaussian_ball(2, 100_000, seed=5)
    assert mixed_volume([B, B]) == pytest.approx(pi, rel=0.02)


def test_mixed_volume_multilinear():
    K, Kp, L = random_planar(6), random_planar(7), random_planar(8)
    a, b = 0.7, 1.9
    lhs = mixed_volume([K.scale(a) + Kp.scale(b), L])
    rhs = a * mixed_volume([K, L]) + b * mixed_volume([Kp, L])
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_mixed_volume_symmetric():
    K, L = random_planar(9), random_planar(10)
    assert mixed_volume([K, L]) == pytest.approx(mixed_volume([L, K]), rel=1e-14)


def test_mixed_volume_three_bodies():
    rng = generator(12, 0)
    Ks = [from_samples(rng.standard_normal((4, 3)), mode="centered") for _ in range(3)]
    # oracle: direct sum over generator triples of |det| / normalization
    total = 0.0
    for w1, v1 in zip(Ks[0].weights, Ks[0].vectors):
        for w2, v2 in zip(Ks[1].weights, Ks[1].vectors):
            for w3, v3 in zip(Ks[2].weights, Ks[2].vectors):
                total += w1 * w2 * w3 * abs(np.linalg.det(np.array([v1, v2, v3])))
    assert mixed_volume(Ks) == pytest.approx(total / factorial(3), rel=1e-10)


def test_mixed_volume_argument_checks():
    with pytest.raises(ValueError):
        mixed_volume([unit_square()])
    with pytest.raises(ValueError):
        mixed_volume([unit_square(), wedge_zonotopes(seg(1, 0), seg(0, 1))])


# -- intrinsic volumes ----------------------------------------------------------------

def test_intrinsic_volumes_unit_square():
    sq = unit_square()
    assert intrinsic_volume(sq, 0) == 1.0
    assert intrinsic_volume(sq, 1) == pytest.approx(2.0)
    assert intrinsic_volume(sq, 2) == pytest.approx(1.0)


def test_intrinsic_volume_ball_half_circumference():
    B = gaussian_ball(2, 100_000, seed=6)
    assert intrinsic_volume(B, 1) == pytest.approx(pi, rel=0.02)


def test_intrinsic_volume_segment_in_r3():
    K = seg(0, 0, 2.5)
    assert intrinsic_volume(K, 1) == pytest.approx(2.5)
    assert intrinsic_volume(K, 2) == 0.0
    assert intrinsic_volume(K, 3) == 0.0


def test_intrinsic_volume_range_check():
    with pytest.raises(ValueError):
        intrinsic_volume(unit_square(), 3)


# -- pair length fast path ----------------------------------------------------------

def test_pair_length_fast_matches_blocked():
    rng = generator(13, 0)
    K = from_samples(rng.standard_normal((300, 2)))
    L = from_samples(rng.standard_normal((200, 2)))
    fast = pair_length(K, L)
    blocked, _, _ = _pair_length_blocked(K, L)
    assert fast == pytest.approx(blocked, rel=1e-13)


def test_pair_length_se_reasonable():
    rng1, rng2 = generator(14, 1), generator(14, 2)
    vals = []
    for s in range(30):
        K = from_samples(generator(14, 1, s).standard_normal((256, 2)), mode="centered")
        L = from_samples(generator(14, 2, s).standard_normal((256, 2)), mode="centered")
        v, se = pair_length_with_se(K, L)
        vals.append((v, se))
    spread = np.std([v for v, _ in vals], ddof=1)
    mean_se = np.mean([se for _, se in vals])
    assert 0.5 * spread < mean_se < 2.0 * spread


# -- ball-length identity ------------------------------------------------------------

def test_length_with_balls_simple_plane():
    C = Zonotope.from_generators(3, 2, [(1.0, MultiVector.basis(3, (0, 1)))])
    lhs, rhs = length_with_balls_check(C, ball_samples=100_000, seed=3)
    assert lhs == pytest.approx(1.0)
    assert rhs == pytest.approx(lhs, rel=0.02)


def test_length_with_balls_zero_body():
    C = Zonotope.zero(3, 2)
    lhs, rhs = length_with_balls_check(C, ball_samples=1000, seed=4)
    assert lhs == 0.0 and rhs == 0.0


def test_length_with_balls_gaussian_pair():
    rng = generator(15, 0)
    xs = rng.standard_normal((4096, 2, 3))
    from zonocalc.multivector import wedge_coords_batch

    C = from_samples(wedge_coords_batch(xs), mode="centered", m=3, k=2)
    lhs, rhs = length_with_balls_check(C, ball_samples=20_000, seed=5)
    assert lhs == pytest.approx(2.0, rel=0.05)
    assert rhs == pytest.approx(lhs, rel=0.02)


# -- inequalities ----------------------------------------------------------------------

def test_af_equality_for_equal_bodies():
    K = random_planar(16)
    lhs, rhs, holds = af_inequality(K, K)
    assert holds and lhs == pytest.approx(rhs, rel=1e-12)


def test_af_segments():
    lhs, rhs, holds = af_inequality(seg(1, 0), seg(0, 1))
    assert holds and lhs == pytest.approx(0.5) and rhs == 0.0


def test_af_random_pairs_always_hold():
    for s in range(100):
        K, L = random_planar(1000 + s), random_planar(2000 + s)
        _, _, holds = af_inequality(K, L)
        assert holds


def test_af_with_rest_bodies():
    rng = generator(17, 0)
    Ks = [from_samples(rng.standard_normal((4, 3)), mode="centered") for _ in range(3)]
    lhs, rhs, holds = af_inequality(Ks[0], Ks[1], rest=[Ks[2]])
    assert holds and lhs >= rhs - 1e-9


def test_bm_endpoints_and_equal_bodies():
    sq = unit_square()
    lhs, rhs, holds = bm_inequality(sq, sq.scale(2.0), 0.0)
    assert holds and lhs == pytest.approx(rhs)
    for t in (0.25, 0.5, 0.75):
        lhs, rhs, holds = bm_inequality(sq, sq, t)
        assert holds and lhs == pytest.approx(rhs, rel=1e-12)


def test_bm_hand_case():
    sq = unit_square()
    lhs, rhs, holds = bm_inequality(sq, sq.scale(2.0), 0.5)
    assert lhs == pytest.approx(2.25)
    assert rhs == pytest.approx(2.0)
    assert holds


def test_bm_t_out_of_range():
    with pytest.raises(ValueError):
        bm_inequality(unit_square(), unit_square(), 1.5)


# -- brute force area oracle -------------------------------------------------------------

def test_volume_against_rejection_sampling():
    for s in range(20):
        n = 3 + (s % 4)
        K = random_planar(3000 + s, n=n)
        area = volume(K)
        mc = planar_zonotope_area_mc(K, n_points=200_000, seed=s)
        assert area == pytest.approx(mc, rel=0.01)
