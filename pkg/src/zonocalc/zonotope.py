"""Finite zonoid representation: weighted generators plus a nigiro vector.

A body ``K = sum_i w_i * underline(v_i) + 1/2 {e}`` is stored as the weight
vector ``w``, the generator coordinate matrix ``v`` (rows are grade-k
multivector coordinates) and the nigiro ``e``.  ``underline(v)`` is the
centered segment with endpoints ``+-v/2``, so the support function is

    h_K(u) = 1/2 sum_i w_i |<v_i, u>| + 1/2 <e, u>.

Empirical zonoids obtained by averaging random segments are exactly of this
form, which is why the representation is closed under every operation the
library needs (sums, scalings, linear images, wedge products).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .multivector import MultiVector, compound_matrix
from .rng import generator

__all__ = [
    "Zonotope",
    "GrassmannianMeasure",
    "from_samples",
    "sphere_probes",
    "MERGE_TOL",
]

MERGE_TOL = 1e-9


def _group_sums(values: np.ndarray, starts: np.ndarray) -> np.ndarray:
    """Per-segment sums with chunked accumulation.

    Splitting each segment into 64-element chunks keeps the rounding error of
    very large merge groups near the pairwise-summation level, which the
    exact cross-checks between wedge code paths rely on.
    """
    n = values.shape[0]
    if n == 0:
        return np.zeros(0)
    chunk_bounds = np.union1d(starts, np.arange(0, n, 64))
    chunk_sums = np.add.reduceat(values, chunk_bounds)
    return np.add.reduceat(chunk_sums, np.searchsorted(chunk_bounds, starts))


def _as_coords(x, m: int, k: int) -> np.ndarray:
    if isinstance(x, MultiVector):
        if (x.m, x.k) != (m, k):
            raise ValueError(f"expected grade {k} in dimension {m}, got ({x.m},{x.k})")
        return np.asarray(x.coords, dtype=float)
    arr = np.asarray(x, dtype=float).reshape(-1)
    if arr.shape[0] != comb(m, k):
        raise ValueError(f"expected {comb(m, k)} coordinates, got {arr.shape[0]}")
    return arr


@dataclass(frozen=True)
class Zonotope:
    """Zonotope in Lambda^k R^m; immutable value type."""

    m: int
    k: int
    weights: np.ndarray = field(repr=False)
    vectors: np.ndarray = field(repr=False)
    nigiro: np.ndarray = field(repr=False)

    def __post_init__(self):
        dim = comb(self.m, self.k)
        w = np.asarray(self.weights, dtype=float).reshape(-1).copy()
        v = np.asarray(self.vectors, dtype=float).reshape(-1, dim).copy()
        e = np.asarray(self.nigiro, dtype=float).reshape(-1).copy()
        if w.shape[0] != v.shape[0]:
            raise ValueError("weights and generator rows disagree")
        if e.shape[0] != dim:
            raise ValueError("nigiro has wrong dimension")
        if w.size and w.min() < 0:
            raise ValueError("generator weights must be nonnegative")
        for a in (w, v, e):
            a.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "vectors", v)
        object.__setattr__(self, "nigiro", e)

    # -- constructors ------------------------------------------------------
    @staticmethod
    def zero(m: int, k: int) -> "Zonotope":
        dim = comb(m, k)
        return Zonotope(m, k, np.zeros(0), np.zeros((0, dim)), np.zeros(dim))

    @staticmethod
    def point(c: MultiVector) -> "Zonotope":
        """The singleton {c}; its nigiro is 2c."""
        return Zonotope(c.m, c.k, np.zeros(0), np.zeros((0, comb(c.m, c.k))), 2.0 * np.asarray(c.coords))

    @staticmethod
    def segment(v: MultiVector, weight: float = 1.0) -> "Zonotope":
        """Centered segment weight * underline(v)."""
        return Zonotope(v.m, v.k, np.array([float(weight)]), np.asarray(v.coords)[None, :], np.zeros(comb(v.m, v.k)))

    @staticmethod
    def from_generators(m: int, k: int, generators, nigiro=None) -> "Zonotope":
        ws, vs = [], []
        for w, v in generators:
            ws.append(float(w))
            vs.append(_as_coords(v, m, k))
        dim = comb(m, k)
        nig = np.zeros(dim) if nigiro is None else _as_coords(nigiro, m, k)
        vmat = np.asarray(vs).reshape(-1, dim) if vs else np.zeros((0, dim))
        return Zonotope(m, k, np.asarray(ws), vmat, nig)

    # -- basic queries -----------------------------------------------------
    @property
    def n_generators(self) -> int:
        return self.weights.shape[0]

    @property
    def coord_dim(self) -> int:
        return comb(self.m, self.k)

    def generators(self):
        return [(float(w), MultiVector(self.m, self.k, v)) for w, v in zip(self.weights, self.vectors)]

    def nigiro_mv(self) -> MultiVector:
        return MultiVector(self.m, self.k, self.nigiro)

    def support(self, u) -> float:
        u = _as_coords(u, self.m, self.k)
        dots = self.vectors @ u
        return float(0.5 * np.dot(self.weights, np.abs(dots)) + 0.5 * np.dot(self.nigiro, u))

    def support_batch(self, U: np.ndarray) -> np.ndarray:
        """Support values for probe directions stacked as rows of ``U``."""
        U = np.asarray(U, dtype=float)
        return 0.5 * (np.abs(U @ self.vectors.T) @ self.weights) + 0.5 * (U @ self.nigiro)

    def length(self) -> float:
        """First intrinsic volume; translation invariant."""
        if not self.n_generators:
            return 0.0
        return float(np.dot(self.weights, np.linalg.norm(self.vectors, axis=1)))

    def centered(self) -> "Zonotope":
        return Zonotope(self.m, self.k, self.weights, self.vectors, np.zeros(self.coord_dim))

    def is_centered(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.nigiro) <= tol))

    # -- algebra -----------------------------------------------------------
    def _check_same_space(self, other: "Zonotope"):
        if (self.m, self.k) != (other.m, other.k):
            raise ValueError(f"ambient mismatch: ({self.m},{self.k}) vs ({other.m},{other.k})")

    def __add__(self, other: "Zonotope") -> "Zonotope":
        """Minkowski sum: generator lists concatenate, nigiros add."""
        self._check_same_space(other)
        return Zonotope(
            self.m,
            self.k,
            np.concatenate([self.weights, other.weights]),
            np.vstack([self.vectors, other.vectors]),
            self.nigiro + other.nigiro,
        )

    def scale(self, t: float) -> "Zonotope":
        t = float(t)
        if t < 0:
            raise ValueError("zonotope scaling requires t >= 0")
        if t == 0.0:
            return Zonotope.zero(self.m, self.k)
        return Zonotope(self.m, self.k, t * self.weights, self.vectors, t * self.nigiro)

    def convex_combine(self, other: "Zonotope", t: float) -> "Zonotope":
        if not 0.0 <= t <= 1.0:
            raise ValueError("convex combination requires t in [0, 1]")
        return self.scale(1.0 - t) + other.scale(t)

    def linear_image(self, T: np.ndarray) -> "Zonotope":
        """Image under the map Lambda^k T induced by T: R^m -> R^m'."""
        T = np.asarray(T, dtype=float)
        if T.shape[1] != self.m:
            raise ValueError(f"linear map expects {T.shape[1]} input dims, body lives in {self.m}")
        C = compound_matrix(T, self.k)
        return Zonotope(T.shape[0], self.k, self.weights, self.vectors @ C.T, C @ self.nigiro)

    def apply_coordinate_map(self, A: np.ndarray, m_out: int, k_out: int) -> "Zonotope":
        """Image under an explicit linear map on Lambda^k coordinates.

        ``A`` maps the C(m,k) coordinates of this body into the coordinate
        space of the target pair ``(m_out, k_out)``; unlike ``linear_image``
        the map need not come from a map of the underlying vectors.
        """
        A = np.asarray(A, dtype=float)
        if A.shape != (comb(m_out, k_out), self.coord_dim):
            raise ValueError("coordinate map shape does not match source/target spaces")
        return Zonotope(m_out, k_out, self.weights, self.vectors @ A.T, A @ self.nigiro)

    # -- generator management ---------------------------------------------
    def pruned(self, tol: float = 0.0) -> "Zonotope":
        """Drop zero-weight and zero-vector generators."""
        norms = np.linalg.norm(self.vectors, axis=1) if self.n_generators else np.zeros(0)
        keep = (self.weights > tol) & (norms > tol)
        return Zonotope(self.m, self.k, self.weights[keep], self.vectors[keep], self.nigiro)

    def merged(self, tol: float = MERGE_TOL) -> "Zonotope":
        """Coalesce parallel generators (projectively, within ``tol``).

        The merged form stores unit generator vectors carrying all the mass;
        it represents exactly the same body.
        """
        z = self.pruned()
        if z.n_generators == 0:
            return z
        norms = np.linalg.norm(z.vectors, axis=1)
        masses = z.weights * norms
        if z.coord_dim == 1:
            # one-dimensional coordinate space: every generator is parallel
            starts = np.zeros(1, dtype=np.intp)
            return Zonotope(z.m, z.k, _group_sums(masses, starts), np.ones((1, 1)), z.nigiro)
        units = z.vectors / norms[:, None]
        # canonical sign: first coordinate exceeding tol is positive
        lead = np.argmax(np.abs(units) > tol, axis=1)
        signs = np.sign(units[np.arange(len(lead)), lead])
        signs[signs == 0] = 1.0
        units = units * signs[:, None]
        keys = np.round(units / tol).astype(np.int64)
        _, inverse, counts = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
        order = np.argsort(inverse, kind="stable")
        starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
        merged_mass = _group_sums(masses[order], starts)
        first = order[starts]
        return Zonotope(z.m, z.k, merged_mass, units[first], z.nigiro)

    def subsample(self, max_generators: int, seed: int, stream: int = 0) -> "Zonotope":
        """Random generator subsampling with mass-preserving re-weighting.

        Optional approximation for stress tests; the default pipeline never
        calls it.
        """
        n = self.n_generators
        if n <= max_generators:
            return self
        rng = generator(seed, stream, n)
        masses = self.weights * np.linalg.norm(self.vectors, axis=1)
        probs = masses / masses.sum()
        idx = rng.choice(n, size=max_generators, replace=True, p=probs)
        total = masses.sum() / max_generators
        units = self.vectors[idx] / np.linalg.norm(self.vectors[idx], axis=1)[:, None]
        return Zonotope(self.m, self.k, np.full(max_generators, total), units, self.nigiro)

    # -- measures ----------------------------------------------------------
    def grassmannian_measure(self, tol: float = MERGE_TOL) -> "GrassmannianMeasure":
        """Atomic measure on the Grassmannian generating the centered body."""
        z = self.pruned()
        for i, (w, v) in enumerate(zip(z.weights, z.vectors)):
            if not MultiVector(z.m, z.k, v).is_simple(max(tol, 1e-12)):
                raise ValueError(f"generator {i} is not simple; body is not Grassmannian")
        norms = np.linalg.norm(z.vectors, axis=1)
        if z.n_generators == 0:
            return GrassmannianMeasure(z.m, z.k, np.zeros(0), np.zeros((0, z.coord_dim)))
        return GrassmannianMeasure(z.m, z.k, z.weights * norms, z.vectors / norms[:, None]).merged(tol)

    # -- metrics -----------------------------------------------------------
    def hausdorff_estimate(self, other: "Zonotope", probes: np.ndarray) -> float:
        """Lower bound on the Hausdorff distance from a probe direction set."""
        self._check_same_space(other)
        probes = np.asarray(probes, dtype=float)
        if probes.size == 0:
            raise ValueError("empty probe set")
        return float(np.max(np.abs(self.support_batch(probes) - other.support_batch(probes))))

    # -- serialization -----------------------------------------------------
    def to_json_dict(self) -> dict:
        return {
            "ambient": {"m": self.m, "k": self.k},
            "generators": [
                {"w": w, "coords": list(v)} for w, v in zip(self.weights.tolist(), self.vectors.tolist())
            ],
            "nigiro": self.nigiro.tolist(),
        }

    @staticmethod
    def from_json_dict(doc: dict) -> "Zonotope":
        m, k = int(doc["ambient"]["m"]), int(doc["ambient"]["k"])
        gens = doc.get("generators", [])
        dim = comb(m, k)
        w = np.array([g["w"] for g in gens], dtype=float)
        v = np.array([g["coords"] for g in gens], dtype=float).reshape(-1, dim)
        return Zonotope(m, k, w, v, np.asarray(doc["nigiro"], dtype=float))

    def dumps(self) -> str:
        return json.dumps(self.to_json_dict())

    @staticmethod
    def loads(text: str) -> "Zonotope":
        return Zonotope.from_json_dict(json.loads(text))


def _infer_space(dim: int, k: int) -> tuple[int, int]:
    for m in range(k, 9):
        if comb(m, k) == dim:
            return m, k
    raise ValueError(f"no ambient dimension with C(m,{k}) == {dim}")


def from_samples(samples, mode: str = "segment", m: int | None = None, k: int = 1) -> Zonotope:
    """Vitale zonotope of an empirical sample of grade-k multivectors.

    ``segment`` averages the segments [0, x_i]: generators (1/n, x_i) with
    nigiro mean(x_i).  ``centered`` keeps the same generators with nigiro 0.
    ``samples`` is a list of MultiVector or an (n, C(m,k)) coordinate array;
    raw arrays of vectors (k = 1) need no space annotation.
    """
    if isinstance(samples, np.ndarray):
        mat = np.asarray(samples, dtype=float)
        if mat.ndim != 2 or mat.shape[0] == 0:
            raise ValueError("expected a nonempty (n, coords) sample array")
        if m is None:
            if k != 1:
                raise ValueError("grade-k coordinate arrays need an explicit ambient dimension")
            m = mat.shape[1]
        if mat.shape[1] != comb(m, k):
            raise ValueError(f"expected {comb(m, k)} coordinates per sample")
    else:
        mvs = list(samples)
        if not mvs:
            raise ValueError("empty sample list")
        m, k = mvs[0].m, mvs[0].k
        mat = np.array([_as_coords(x, m, k) for x in mvs])
    n = mat.shape[0]
    if mode == "segment":
        nig = mat.mean(axis=0)
    elif mode == "centered":
        nig = np.zeros(mat.shape[1])
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return Zonotope(m, k, np.full(n, 1.0 / n), mat, nig)


@dataclass(frozen=True)
class GrassmannianMeasure:
    """Atomic even measure on the Grassmannian, encoded by unit simple lines."""

    m: int
    k: int
    masses: np.ndarray = field(repr=False)
    lines: np.ndarray = field(repr=False)

    def __post_init__(self):
        masses = np.asarray(self.masses, dtype=float).reshape(-1).copy()
        lines = np.asarray(self.lines, dtype=float).reshape(-1, comb(self.m, self.k)).copy()
        if masses.shape[0] != lines.shape[0]:
            raise ValueError("masses and lines disagree")
        masses.setflags(write=False)
        lines.setflags(write=False)
        object.__setattr__(self, "masses", masses)
        object.__setattr__(self, "lines", lines)

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())

    def integrate(self, fn) -> float:
        """Integral of an even function given on unit simple multivectors."""
        vals = np.array([fn(MultiVector(self.m, self.k, line)) for line in self.lines])
        return float(np.dot(self.masses, vals))

    def integrate_homogeneous(self, fn) -> float:
        """Integral of the 1-homogeneous even extension evaluated on atoms."""
        return self.integrate(fn)

    def merged(self, tol: float = MERGE_TOL) -> "GrassmannianMeasure":
        if self.masses.size == 0:
            return self
        lead = np.argmax(np.abs(self.lines) > tol, axis=1)
        signs = np.sign(self.lines[np.arange(len(lead)), lead])
        signs[signs == 0] = 1.0
        units = self.lines * signs[:, None]
        keys = np.round(units / tol).astype(np.int64)
        _, inverse, counts = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
        order = np.argsort(inverse, kind="stable")
        starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
        mass = _group_sums(self.masses[order], starts)
        first = order[starts]
        return GrassmannianMeasure(self.m, self.k, mass, units[first])


def sphere_probes(dim: int, n: int = 512) -> np.ndarray:
    """Deterministic, well-spread unit probe directions in R^dim.

    Exact grids in dimensions 1-2, a spherical Fibonacci set in dimension 3
    and seeded normalized Gaussians above that; reproducible in all cases.
    """
    if dim < 1:
        raise ValueError("probe dimension must be positive")
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        theta = np.arange(n) * (2.0 * np.pi / n)
        return np.column_stack([np.cos(theta), np.sin(theta)])
    if dim == 3:
        i = np.arange(n) + 0.5
        phi = np.pi * (1.0 + np.sqrt(5.0)) * i
        z = 1.0 - 2.0 * i / n
        r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    rng = generator(0x5EED, dim, n)
    pts = rng.standard_normal((n, dim))
    return pts / np.linalg.norm(pts, axis=1)[:, None]
