import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from zonocalc.multivector import (
    Frame,
    MultiVector,
    compound_matrix,
    inner,
    multi_indices,
    wedge,
    wedge_coords_batch,
    wedge_vectors,
)


def e(m, *idx):
    return MultiVector.basis(m, idx)


def vec(*xs):
    return MultiVector.from_vector(np.array(xs, dtype=float))


def test_basis_wedge_in_r3():
    out = wedge(e(3, 0), e(3, 1))
    assert out.k == 2
    # basis order (e12, e13, e23)
    assert np.allclose(out.coords, [1.0, 0.0, 0.0])


def test_wedge_alternating():
    v = vec(1.0, 2.0, 3.0)
    assert wedge(v, v).is_zero()


def test_wedge_hand_expansion():
    # (e1 + e2) ^ (e1 - e2) = -2 e12
    out = wedge(vec(1, 1), vec(1, -1))
    assert np.allclose(out.coords, [-2.0])


def test_wedge_grade_overflow():
    with pytest.raises(ValueError):
        wedge(e(2, 0, 1), e(2, 0))


def test_wedge_vectors_top_element():
    out = wedge_vectors(np.eye(3))
    assert out.k == 3 and np.allclose(out.coords, [1.0])


def test_wedge_vectors_determinant():
    assert np.allclose(wedge_vectors([[3.0, 0.0], [0.0, 4.0]]).coords, [12.0])


def test_wedge_vectors_repeated_vector():
    assert wedge_vectors([[1.0, 0.0, 0.0], [1.0, 0.0, 0.0]]).is_zero()


def test_inner_basis():
    b = wedge(e(3, 0), e(3, 1))
    assert inner(b, b) == 1.0


def test_inner_norm_euclidean():
    mv = MultiVector(3, 2, np.array([1.0, 2.0, 2.0]))
    assert inner(mv, mv) == pytest.approx(9.0)
    assert mv.norm() == pytest.approx(3.0)


def test_inner_gram_determinant_hand_case():
    v = wedge_vectors([[1, 0], [0, 1]])
    w = wedge_vectors([[1, 1], [0, 1]])
    gram = np.array([[1.0, 0.0], [1.0, 1.0]])
    assert inner(v, w) == pytest.approx(np.linalg.det(gram))


def test_inner_grade_mismatch():
    with pytest.raises(ValueError):
        inner(e(3, 0), wedge(e(3, 0), e(3, 1)))


@given(st.integers(0, 2**32 - 1))
def test_wedge_norm_equals_gram_det(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 6))
    k = int(rng.integers(1, m + 1))
    vs = rng.standard_normal((k, m))
    norm = wedge_vectors(vs).norm()
    gram = vs @ vs.T
    assert norm == pytest.approx(np.sqrt(abs(np.linalg.det(gram))), rel=1e-9, abs=1e-9)


@given(st.integers(0, 2**32 - 1))
def test_wedge_graded_anticommutativity(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 7))
    k = int(rng.integers(1, m))
    l = int(rng.integers(1, m - k + 1))
    from math import comb

    a = MultiVector(m, k, rng.standard_normal(comb(m, k)))
    b = MultiVector(m, l, rng.standard_normal(comb(m, l)))
    ab = wedge(a, b)
    ba = wedge(b, a)
    sign = (-1.0) ** (k * l)
    assert np.allclose(ab.coords, sign * ba.coords, atol=1e-12)


@given(st.integers(0, 2**32 - 1))
def test_pushforward_matches_compound_matrix(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 5))
    k = int(rng.integers(1, m + 1))
    T = rng.standard_normal((m, m))
    vs = rng.standard_normal((k, m))
    direct = wedge_vectors(vs @ T.T)
    lifted = compound_matrix(T, k) @ wedge_vectors(vs).coords
    assert np.allclose(direct.coords, lifted, atol=1e-9 * max(1.0, np.abs(lifted).max()))


def test_wedge_bilinearity():
    rng = np.random.default_rng(5)
    a, b, c = (vec(*rng.standard_normal(3)) for _ in range(3))
    left = wedge(a + b, c)
    assert np.allclose(left.coords, (wedge(a, c) + wedge(b, c)).coords, atol=1e-13)


def test_wedge_associativity():
    rng = np.random.default_rng(6)
    a, b, c = (vec(*rng.standard_normal(4)) for _ in range(3))
    left = wedge(wedge(a, b), c)
    right = wedge(a, wedge(b, c))
    assert np.allclose(left.coords, right.coords, atol=1e-12)


def test_batch_plucker_matches_single():
    rng = np.random.default_rng(7)
    mats = rng.standard_normal((10, 2, 4))
    batch = wedge_coords_batch(mats)
    for i in range(10):
        assert np.allclose(batch[i], wedge_vectors(mats[i]).coords)


def test_simplicity_detection():
    simple = wedge_vectors(np.random.default_rng(8).standard_normal((2, 4)))
    assert simple.is_simple()
    # e12 + e34 is the classic non-simple bivector
    mixed = MultiVector.basis(4, (0, 1)) + MultiVector.basis(4, (2, 3))
    assert not mixed.is_simple()


def test_span_recovery():
    rng = np.random.default_rng(9)
    vs = rng.standard_normal((2, 4))
    span = wedge_vectors(vs).span()
    assert span.shape == (4, 2)
    # original vectors lie in the recovered span
    proj = span @ span.T
    assert np.allclose(proj @ vs.T, vs.T, atol=1e-9)


def test_multi_index_order_is_lexicographic():
    assert multi_indices(4, 2) == ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))


def test_coords_length_enforced():
    with pytest.raises(ValueError):
        MultiVector(3, 2, np.zeros(4))


def test_frame_orthonormality_enforced():
    with pytest.raises(ValueError):
        Frame(np.array([[1.0, 0.0], [1.0, 1.0]]))
    f = Frame(np.eye(3))
    assert f.ambient_dim == 3
