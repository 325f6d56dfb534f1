import json
from math import pi, sqrt

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from zonocalc.multivector import MultiVector
from zonocalc.rng import generator
from zonocalc.zonotope import Zonotope, from_samples, sphere_probes


def vec(*xs):
    return MultiVector.from_vector(np.array(xs, dtype=float))


def unit_square():
    return Zonotope.segment(vec(1, 0)) + Zonotope.segment(vec(0, 1))


# -- from_samples -------------------------------------------------------------

def test_single_sample_segment():
    K = from_samples([vec(2, 0)], mode="segment")
    assert K.n_generators == 1
    assert K.support(vec(1, 0)) == pytest.approx(2.0)
    assert K.support(vec(-1, 0)) == pytest.approx(0.0)
    assert np.allclose(K.nigiro, [2.0, 0.0])


def test_gaussian_samples_make_a_ball():
    rng = generator(0, 0)
    xs = rng.standard_normal((100_000, 2))
    K = from_samples(xs, mode="centered")
    probes = sphere_probes(2, 64)
    h = K.support_batch(probes)
    target = 1.0 / sqrt(2.0 * pi)
    assert np.all(np.abs(h - target) < 0.01 * target)


def test_antipodal_pair_is_centered_segment():
    x = vec(1.5, -0.5)
    K = from_samples([x, -x], mode="segment")
    assert np.allclose(K.nigiro, 0.0, atol=1e-15)
    L = Zonotope.segment(x)
    probes = sphere_probes(2, 64)
    assert K.hausdorff_estimate(L, probes) < 1e-12


def test_empty_sample_list_rejected():
    with pytest.raises(ValueError):
        from_samples([], mode="segment")


def test_segment_minus_nigiro_equals_centered():
    rng = generator(1, 0)
    xs = rng.standard_normal((50, 3))
    seg = from_samples(xs, mode="segment")
    cen = from_samples(xs, mode="centered")
    assert np.allclose(seg.centered().vectors, cen.vectors)
    assert np.allclose(cen.nigiro, 0.0)


# -- support ------------------------------------------------------------------

def test_support_unit_square_corner():
    sq = Zonotope(2, 1, np.ones(2), np.eye(2), np.array([1.0, 1.0]))
    assert sq.support(vec(1, 1)) == pytest.approx(2.0)
    assert sq.centered().support(vec(1, 1)) == pytest.approx(1.0)


@given(st.integers(0, 2**32 - 1))
def test_support_sublinear(seed):
    rng = np.random.default_rng(seed)
    K = from_samples(rng.standard_normal((8, 3)), mode="segment")
    u, v = rng.standard_normal(3), rng.standard_normal(3)
    t = float(rng.uniform(0, 3))
    assert K.support(vec(*(u + v))) <= K.support(vec(*u)) + K.support(vec(*v)) + 1e-12
    assert K.support(vec(*(t * u))) == pytest.approx(t * K.support(vec(*u)), abs=1e-12)


# -- length ---------------------------------------------------------------------

def test_length_single_generator():
    assert Zonotope.segment(vec(3, 4)).length() == pytest.approx(5.0)


def test_length_empty():
    assert Zonotope.zero(2, 1).length() == 0.0


def test_length_gaussian_r2():
    rng = generator(2, 0)
    K = from_samples(rng.standard_normal((100_000, 2)), mode="centered")
    assert K.length() == pytest.approx(sqrt(pi / 2.0), rel=0.01)


def test_length_additive_and_homogeneous():
    rng = np.random.default_rng(3)
    K = from_samples(rng.standard_normal((5, 2)))
    L = from_samples(rng.standard_normal((7, 2)))
    assert (K + L).length() == pytest.approx(K.length() + L.length(), rel=1e-14)
    assert K.scale(2.5).length() == pytest.approx(2.5 * K.length(), rel=1e-14)


# -- sums, scalings, images -----------------------------------------------------

def test_minkowski_square():
    sq = unit_square()
    assert sq.length() == pytest.approx(2.0)
    assert sq.support(vec(1, 0)) == pytest.approx(0.5)  # centered square


def test_scale_zero_is_origin():
    K = unit_square().scale(0.0)
    assert K.n_generators == 0
    assert np.allclose(K.nigiro, 0.0)


def test_negative_scale_rejected():
    with pytest.raises(ValueError):
        unit_square().scale(-1.0)


def test_convex_combination_hand_value():
    K = Zonotope.segment(vec(1, 0)).convex_combine(Zonotope.segment(vec(0, 1)), 0.5)
    assert K.support(vec(1, 0)) == pytest.approx(0.25)


def test_linear_image_diag():
    K = unit_square().linear_image(np.diag([2.0, 3.0]))
    assert K.length() == pytest.approx(5.0)


def test_linear_image_zero_map():
    K = unit_square().linear_image(np.zeros((2, 2))).pruned()
    assert K.length() == 0.0


def test_linear_image_rotation():
    th = pi / 2.0
    R = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    K = Zonotope.segment(vec(1, 0)).linear_image(R)
    L = Zonotope.segment(vec(0, 1))
    assert K.hausdorff_estimate(L, sphere_probes(2, 64)) < 1e-12


def test_linear_image_adjoint_support_identity():
    rng = np.random.default_rng(4)
    K = from_samples(rng.standard_normal((6, 3)))
    T = rng.standard_normal((3, 3))
    u = rng.standard_normal(3)
    assert K.linear_image(T).support(vec(*u)) == pytest.approx(
        K.support(vec(*(T.T @ u))), rel=1e-12
    )


# -- hausdorff -------------------------------------------------------------------

def test_hausdorff_zero_for_equal_bodies():
    K = unit_square()
    assert K.hausdorff_estimate(K, sphere_probes(2, 32)) == 0.0


def test_hausdorff_square_vs_segment():
    K = Zonotope.segment(vec(1, 0))
    L = unit_square()
    d = K.hausdorff_estimate(L, np.array([[0.0, 1.0]]))
    assert d == pytest.approx(0.5)


def test_hausdorff_point_vs_segment():
    x = np.array([0.6, 0.8])
    K = Zonotope.zero(2, 1)
    L = Zonotope.segment(vec(*x))
    probes = np.vstack([sphere_probes(2, 64), x[None, :] / np.linalg.norm(x)])
    assert K.hausdorff_estimate(L, probes) == pytest.approx(0.5 * np.linalg.norm(x))


def test_hausdorff_empty_probes_rejected():
    with pytest.raises(ValueError):
        unit_square().hausdorff_estimate(unit_square(), np.zeros((0, 2)))


# -- grassmannian measure ----------------------------------------------------------

def test_measure_single_atom():
    K = Zonotope.segment(vec(3, 4))
    mu = K.grassmannian_measure()
    assert mu.total_mass == pytest.approx(5.0)
    assert np.allclose(np.abs(mu.lines[0]), [0.6, 0.8])


def test_measure_total_mass_is_length():
    rng = np.random.default_rng(5)
    K = from_samples(rng.standard_normal((40, 3)))
    assert K.grassmannian_measure().total_mass == pytest.approx(K.length(), rel=1e-12)


def test_measure_cosine_transform_identity():
    rng = np.random.default_rng(6)
    K = from_samples(rng.standard_normal((30, 3)), mode="segment")
    mu = K.grassmannian_measure()
    cen = K.centered()
    for _ in range(20):
        u = rng.standard_normal(3)
        lhs = mu.integrate(lambda line: abs(float(np.dot(line.coords, u))))
        assert lhs == pytest.approx(2.0 * cen.support(vec(*u)), rel=1e-9, abs=1e-12)


def test_measure_rejects_non_simple():
    bad = MultiVector.basis(4, (0, 1)) + MultiVector.basis(4, (2, 3))
    K = Zonotope.from_generators(4, 2, [(1.0, bad)])
    with pytest.raises(ValueError, match="generator 0"):
        K.grassmannian_measure()


def test_zonoid_equivalence_battery():
    # X = 4x w.p. 1/2, 0 w.p. 1/2 and Y = 2x a.s. give the same centered zonoid
    x = np.array([0.3, -1.2, 0.5])
    K = from_samples(np.vstack([4 * x, 0 * x]), mode="centered").merged()
    L = from_samples(np.vstack([2 * x]), mode="centered").merged()
    u = np.random.default_rng(7).standard_normal(3)
    funcs = [
        lambda v: np.linalg.norm(v),
        lambda v: np.abs(v).sum(),
        lambda v: np.abs(v).max(),
        lambda v: abs(float(v @ u)),
    ]
    for f in funcs:
        a = sum(w * f(v) for w, v in zip(K.weights, K.vectors))
        b = sum(w * f(v) for w, v in zip(L.weights, L.vectors))
        assert a == pytest.approx(b, rel=1e-12)


def test_merge_coalesces_parallel():
    K = Zonotope(2, 1, np.array([1.0, 2.0, 1.0]), np.array([[1.0, 0.0], [-0.5, 0.0], [0.0, 1.0]]), np.zeros(2))
    M = K.merged()
    assert M.n_generators == 2
    assert M.length() == pytest.approx(K.length(), rel=1e-14)
    assert M.hausdorff_estimate(K, sphere_probes(2, 64)) < 1e-12


def test_subsample_preserves_mass():
    rng = np.random.default_rng(8)
    K = from_samples(rng.standard_normal((500, 2)))
    S = K.subsample(50, seed=9)
    assert S.n_generators == 50
    assert S.length() == pytest.approx(K.length(), rel=1e-12)


# -- serialization -------------------------------------------------------------------

def test_json_round_trip_bit_exact():
    rng = np.random.default_rng(9)
    K = from_samples(rng.standard_normal((17, 3)), mode="segment")
    K2 = Zonotope.loads(K.dumps())
    assert K2.m == K.m and K2.k == K.k
    assert np.array_equal(K2.weights, K.weights)
    assert np.array_equal(K2.vectors, K.vectors)
    assert np.array_equal(K2.nigiro, K.nigiro)


def test_json_schema_fields():
    doc = json.loads(unit_square().dumps())
    assert set(doc) == {"ambient", "generators", "nigiro"}
    assert doc["ambient"] == {"m": 2, "k": 1}
    assert set(doc["generators"][0]) == {"w", "coords"}
