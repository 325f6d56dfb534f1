"""Dense exterior algebra over R^m in lexicographic multi-index coordinates.

A grade-k element of Lambda^k R^m is stored as a vector of C(m, k) reals,
one per strictly increasing multi-index, ordered lexicographically.  All
modules share this coordinatization; the basis induced by an orthonormal
basis of R^m is itself orthonormal, so inner products and norms reduce to
Euclidean operations on the coordinate vectors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from math import comb

import numpy as np

__all__ = [
    "MultiVector",
    "Frame",
    "multi_indices",
    "wedge",
    "wedge_vectors",
    "wedge_coords_batch",
    "inner",
    "compound_matrix",
    "wedge_table",
]

MAX_DIM = 8
SIMPLE_TOL = 1e-12


@lru_cache(maxsize=None)
def multi_indices(m: int, k: int) -> tuple[tuple[int, ...], ...]:
    """Strictly increasing k-multi-indices of {0..m-1} in lexicographic order."""
    if not (0 <= k <= m <= MAX_DIM):
        raise ValueError(f"unsupported ambient/grade pair (m={m}, k={k})")
    return tuple(combinations(range(m), k))


@lru_cache(maxsize=None)
def _index_positions(m: int, k: int) -> dict[tuple[int, ...], int]:
    return {idx: pos for pos, idx in enumerate(multi_indices(m, k))}


def _shuffle_sign(left: tuple[int, ...], right: tuple[int, ...]) -> int:
    # parity of the permutation sorting the concatenation of two sorted tuples
    inversions = sum(1 for i in left for j in right if i > j)
    return -1 if inversions % 2 else 1


@lru_cache(maxsize=None)
def wedge_table(m: int, k: int, l: int) -> np.ndarray:
    """Structure constants W with (a ^ b)[o] = sum_ij W[i, j, o] a[i] b[j]."""
    if k + l > m:
        raise ValueError(f"grade overflow: {k} + {l} > {m}")
    rows, cols, outs = multi_indices(m, k), multi_indices(m, l), _index_positions(m, k + l)
    W = np.zeros((len(rows), len(cols), comb(m, k + l)))
    for i, I in enumerate(rows):
        seen = set(I)
        for j, J in enumerate(cols):
            if seen.intersection(J):
                continue
            W[i, j, outs[tuple(sorted(I + J))]] = _shuffle_sign(I, J)
    W.setflags(write=False)
    return W


@dataclass(frozen=True)
class MultiVector:
    """Element of Lambda^k R^m in lexicographic coordinates."""

    m: int
    k: int
    coords: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not (0 <= self.k <= self.m <= MAX_DIM):
            raise ValueError(f"invalid grade {self.k} for ambient dimension {self.m}")
        coords = np.asarray(self.coords, dtype=float).reshape(-1)
        if coords.shape[0] != comb(self.m, self.k):
            raise ValueError(
                f"expected {comb(self.m, self.k)} coordinates for grade {self.k} "
                f"in dimension {self.m}, got {coords.shape[0]}"
            )
        coords = coords.copy()
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)

    # -- constructors ------------------------------------------------------
    @staticmethod
    def zero(m: int, k: int) -> "MultiVector":
        return MultiVector(m, k, np.zeros(comb(m, k)))

    @staticmethod
    def scalar(m: int, value: float) -> "MultiVector":
        return MultiVector(m, 0, np.array([value]))

    @staticmethod
    def basis(m: int, index: tuple[int, ...]) -> "MultiVector":
        """Basis element e_{i1} ^ ... ^ e_{ik} for a strictly increasing index."""
        index = tuple(index)
        k = len(index)
        coords = np.zeros(comb(m, k))
        coords[_index_positions(m, k)[index]] = 1.0
        return MultiVector(m, k, coords)

    @staticmethod
    def from_vector(v) -> "MultiVector":
        v = np.asarray(v, dtype=float).reshape(-1)
        return MultiVector(v.shape[0], 1, v)

    # -- arithmetic --------------------------------------------------------
    def _check_same_space(self, other: "MultiVector"):
        if self.m != other.m or self.k != other.k:
            raise ValueError(
                f"grade/dimension mismatch: ({self.m},{self.k}) vs ({other.m},{other.k})"
            )

    def __add__(self, other: "MultiVector") -> "MultiVector":
        self._check_same_space(other)
        return MultiVector(self.m, self.k, self.coords + other.coords)

    def __sub__(self, other: "MultiVector") -> "MultiVector":
        self._check_same_space(other)
        return MultiVector(self.m, self.k, self.coords - other.coords)

    def __mul__(self, t: float) -> "MultiVector":
        return MultiVector(self.m, self.k, self.coords * float(t))

    __rmul__ = __mul__

    def __neg__(self) -> "MultiVector":
        return MultiVector(self.m, self.k, -self.coords)

    def wedge(self, other: "MultiVector") -> "MultiVector":
        return wedge(self, other)

    def inner(self, other: "MultiVector") -> float:
        return inner(self, other)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coords))

    def is_zero(self, tol: float = SIMPLE_TOL) -> bool:
        return bool(np.all(np.abs(self.coords) <= tol))

    def allclose(self, other: "MultiVector", tol: float = 1e-12) -> bool:
        self._check_same_space(other)
        return bool(np.allclose(self.coords, other.coords, rtol=0.0, atol=tol))

    # -- simplicity --------------------------------------------------------
    def _vector_wedge_matrix(self) -> np.ndarray:
        # matrix of x -> x ^ self, mapping R^m to Lambda^{k+1}
        W = wedge_table(self.m, 1, self.k)
        return np.einsum("ijo,j->oi", W, self.coords)

    def is_simple(self, tol: float = SIMPLE_TOL) -> bool:
        """Whether the element factors as v_1 ^ ... ^ v_k."""
        if self.k in (0, 1, self.m - 1, self.m) or self.is_zero(tol):
            return True
        scale = self.norm()
        sv = np.linalg.svd(self._vector_wedge_matrix(), compute_uv=False)
        # simple iff the kernel of x -> x ^ w has dimension k
        return bool(np.sum(sv > tol * max(scale, 1.0)) <= self.m - self.k)

    def span(self, tol: float = 1e-9) -> np.ndarray:
        """Orthonormal basis (k columns) of the factor span of a simple element."""
        if self.is_zero(tol):
            raise ValueError("zero multivector has no well-defined span")
        if self.k == self.m:
            return np.eye(self.m)
        _, sv, vt = np.linalg.svd(self._vector_wedge_matrix())
        small = sv <= tol * self.norm()
        kernel = vt[np.concatenate([small, np.ones(vt.shape[0] - len(sv), dtype=bool)])]
        if kernel.shape[0] != self.k:
            raise ValueError("multivector is not simple within tolerance")
        return kernel.T


def wedge(a: MultiVector, b: MultiVector) -> MultiVector:
    """Exterior product; signs follow lexicographic shuffle parity."""
    if a.m != b.m:
        raise ValueError(f"ambient dimension mismatch: {a.m} vs {b.m}")
    W = wedge_table(a.m, a.k, b.k)
    return MultiVector(a.m, a.k + b.k, np.einsum("i,j,ijo->o", a.coords, b.coords, W))


def wedge_vectors(vs) -> MultiVector:
    """Simple element v_1 ^ ... ^ v_k from a list of m-vectors."""
    mat = np.asarray(vs, dtype=float)
    if mat.ndim != 2:
        raise ValueError("expected a nonempty list of equal-length vectors")
    k, m = mat.shape
    return MultiVector(m, k, wedge_coords_batch(mat[None, :, :])[0])


def wedge_coords_batch(mats: np.ndarray) -> np.ndarray:
    """Plucker coordinates of row wedges for a batch of (k, m) matrices.

    ``mats`` has shape (N, k, m); the result has shape (N, C(m, k)) with the
    J-th column equal to det(mats[:, :, J]).
    """
    mats = np.asarray(mats, dtype=float)
    n, k, m = mats.shape
    if k > m:
        raise ValueError(f"grade overflow: {k} vectors in dimension {m}")
    idx = multi_indices(m, k)
    if k == 0:
        return np.ones((n, 1))
    if k == 1:
        return mats[:, 0, :].copy()
    out = np.empty((n, len(idx)))
    if k == 2:
        for pos, (i, j) in enumerate(idx):
            out[:, pos] = mats[:, 0, i] * mats[:, 1, j] - mats[:, 0, j] * mats[:, 1, i]
        return out
    for pos, J in enumerate(idx):
        out[:, pos] = np.linalg.det(mats[:, :, J])
    return out


def inner(a: MultiVector, b: MultiVector) -> float:
    """Euclidean pairing; equals det(<v_i, w_j>) on simple arguments."""
    a._check_same_space(b)
    return float(np.dot(a.coords, b.coords))


def compound_matrix(T: np.ndarray, k: int) -> np.ndarray:
    """Matrix of the induced map Lambda^k T in lexicographic coordinates."""
    T = np.asarray(T, dtype=float)
    m_out, m_in = T.shape
    rows, cols = multi_indices(m_out, k), multi_indices(m_in, k)
    out = np.empty((len(rows), len(cols)))
    for i, I in enumerate(rows):
        for j, J in enumerate(cols):
            out[i, j] = np.linalg.det(T[np.ix_(I, J)])
    return out


@dataclass(frozen=True)
class Frame:
    """Orthonormal basis of R^m, stored as rows."""

    vectors: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.vectors, dtype=float)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError("a frame requires m vectors of dimension m")
        gram = mat @ mat.T
        if not np.allclose(gram, np.eye(mat.shape[0]), atol=1e-10):
            raise ValueError("frame vectors are not orthonormal within 1e-10")
        mat = mat.copy()
        mat.setflags(write=False)
        object.__setattr__(self, "vectors", mat)

    @property
    def ambient_dim(self) -> int:
        return self.vectors.shape[0]

    def expand(self, coefficients) -> np.ndarray:
        return np.asarray(coefficients, dtype=float) @ self.vectors
