"""Finite-dimensional random field models X = sum_i c_i f_i on charts.

A model couples a jet-evaluating basis with a coefficient law and supplies
everything downstream consumers need: pointwise values and Jacobians for the
simulator, exact densities and conditional gradient laws at X(p) = 0 for the
section estimators, and seeded sampling.

Conditioning is exact for Gaussian coefficient laws (regression mean and
Schur-complement covariance).  Heavy-tailed laws are handled by importance
sampling on the kernel of the evaluation map; the conditional gradient draws
then carry importance weights.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb, lgamma, log, pi, sqrt
from typing import Callable, Optional

import numpy as np

from .manifolds import Chart
from .rng import generator

__all__ = [
    "TrigCircleBasis",
    "KostlanCircleBasis",
    "AmbientLinearBasis",
    "SolidHarmonicBasis",
    "TrigTorusBasis",
    "CustomBasis",
    "StackedBasis",
    "GaussianLaw",
    "StudentTLaw",
    "LinearFieldModel",
    "ShiftedFieldModel",
    "ConditionedJet",
    "normal_field",
    "model_from_config",
]

MIN_EIG = 1e-12


# -- scalar bases ------------------------------------------------------------

class TrigCircleBasis:
    """cos(j theta), sin(j theta) for j = 1..order, optionally the constant."""

    def __init__(self, order: int, include_constant: bool = False):
        if order < 1:
            raise ValueError("order must be >= 1")
        self.order = order
        self.include_constant = include_constant
        self.dim = 1
        self.n_basis = 2 * order + (1 if include_constant else 0)

    def jets(self, points: np.ndarray):
        th = np.atleast_2d(points)[:, 0]
        cols_v, cols_g = [], []
        if self.include_constant:
            cols_v.append(np.ones_like(th))
            cols_g.append(np.zeros_like(th))
        for j in range(1, self.order + 1):
            cols_v += [np.cos(j * th), np.sin(j * th)]
            cols_g += [-j * np.sin(j * th), j * np.cos(j * th)]
        vals = np.stack(cols_v, axis=1)
        grads = np.stack(cols_g, axis=1)[:, :, None]
        return vals, grads


class KostlanCircleBasis:
    """sqrt(C(d,j)) cos^j sin^(d-j) restricted to the circle, j = 0..d."""

    def __init__(self, degree: int):
        if degree < 1:
            raise ValueError("degree must be >= 1")
        self.degree = degree
        self.dim = 1
        self.n_basis = degree + 1

    def jets(self, points: np.ndarray):
        th = np.atleast_2d(points)[:, 0]
        c, s = np.cos(th), np.sin(th)
        d = self.degree
        vals = np.empty((th.shape[0], d + 1))
        grads = np.empty((th.shape[0], d + 1))
        for j in range(d + 1):
            w = sqrt(comb(d, j))
            vals[:, j] = w * c**j * s ** (d - j)
            term1 = -j * c ** (j - 1) * s ** (d - j + 1) if j >= 1 else 0.0
            term2 = (d - j) * c ** (j + 1) * s ** (d - j - 1) if j <= d - 1 else 0.0
            grads[:, j] = w * (term1 + term2)
        return vals, grads[:, :, None]


class AmbientLinearBasis:
    """Restrictions of the ambient coordinate functions through the embedding."""

    def __init__(self, chart: Chart):
        if chart.embedding is None:
            raise ValueError(f"chart {chart.name} has no embedding")
        self.chart = chart
        self.dim = chart.dim
        self.n_basis = chart.ambient_dim

    def jets(self, points: np.ndarray):
        pos, jac = self.chart.embedding(np.atleast_2d(points))
        # basis function i is p -> pos_i; its chart differential is jac[:, i, :]
        return pos, jac


class _Polynomial:
    """Sparse polynomial in ambient coordinates, exponent tuples -> coeffs."""

    def __init__(self, terms: Optional[dict] = None, n_vars: int = 3):
        self.terms = dict(terms or {})
        self.n_vars = n_vars

    @staticmethod
    def constant(c: float, n_vars: int = 3) -> "_Polynomial":
        return _Polynomial({(0,) * n_vars: c}, n_vars)

    @staticmethod
    def coordinate(i: int, n_vars: int = 3) -> "_Polynomial":
        e = [0] * n_vars
        e[i] = 1
        return _Polynomial({tuple(e): 1.0}, n_vars)

    def __add__(self, other):
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, 0.0) + c
        return _Polynomial(out, self.n_vars)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return _Polynomial({e: c * other for e, c in self.terms.items()}, self.n_vars)
        out = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0.0) + c1 * c2
        return _Polynomial(out, self.n_vars)

    __rmul__ = __mul__

    def gradient(self) -> list["_Polynomial"]:
        grads = []
        for i in range(self.n_vars):
            out = {}
            for e, c in self.terms.items():
                if e[i]:
                    e2 = list(e)
                    e2[i] -= 1
                    out[tuple(e2)] = out.get(tuple(e2), 0.0) + c * e[i]
            grads.append(_Polynomial(out, self.n_vars))
        return grads

    def evaluate(self, pos: np.ndarray) -> np.ndarray:
        out = np.zeros(pos.shape[0])
        for e, c in self.terms.items():
            term = np.full(pos.shape[0], c)
            for i, p in enumerate(e):
                if p:
                    term = term * pos[:, i] ** p
            out += term
        return out


def _solid_harmonics(lmax: int) -> list[_Polynomial]:
    """Real spherical harmonics Y_lm, l <= lmax, as ambient polynomials."""
    x, y, z = (_Polynomial.coordinate(i) for i in range(3))
    r2 = x * x + y * y + z * z
    cos_m = [_Polynomial.constant(1.0)]
    sin_m = [_Polynomial.constant(0.0)]
    for m in range(1, lmax + 1):
        cos_m.append(cos_m[m - 1] * x + sin_m[m - 1] * (-1.0) * y)
        sin_m.append(cos_m[m - 1] * y + sin_m[m - 1] * x)
    out = []
    for m in range(0, lmax + 1):
        # Legendre-type polynomials Pi_lm by upward recurrence in l
        doublefact = 1.0
        for i in range(1, 2 * m, 2):
            doublefact *= i
        pi_prev2 = _Polynomial.constant(doublefact)  # l = m
        pi_prev1 = (2 * m + 1.0) * z * pi_prev2 if m + 1 <= lmax else None
        for ell in range(m, lmax + 1):
            if ell == m:
                pil = pi_prev2
            elif ell == m + 1:
                pil = pi_prev1
            else:
                pil = ((2 * ell - 1.0) * z * pi_prev1 + (-(ell + m - 1.0)) * r2 * pi_prev2) * (
                    1.0 / (ell - m)
                )
                pi_prev2, pi_prev1 = pi_prev1, pil
            norm = sqrt(
                (2 * ell + 1)
                / (4.0 * pi)
                * (2.0 if m > 0 else 1.0)
                * np.exp(lgamma(ell - m + 1) - lgamma(ell + m + 1))
            )
            out.append(norm * (pil * cos_m[m]))
            if m > 0:
                out.append(norm * (pil * sin_m[m]))
    return out


class SolidHarmonicBasis:
    """Real spherical harmonics restricted to the sphere chart, l <= lmax."""

    def __init__(self, chart: Chart, lmax: int):
        if chart.embedding is None or chart.ambient_dim != 3:
            raise ValueError("solid harmonics need a 3-dimensional embedding")
        self.chart = chart
        self.lmax = lmax
        self.dim = chart.dim
        self.polys = _solid_harmonics(lmax)
        self.grads = [p.gradient() for p in self.polys]
        self.n_basis = len(self.polys)

    def jets(self, points: np.ndarray):
        pos, jac = self.chart.embedding(np.atleast_2d(points))
        vals = np.stack([p.evaluate(pos) for p in self.polys], axis=1)
        grads = np.empty((pos.shape[0], self.n_basis, self.dim))
        for b, gpolys in enumerate(self.grads):
            amb = np.stack([g.evaluate(pos) for g in gpolys], axis=1)
            grads[:, b, :] = np.einsum("na,nad->nd", amb, jac)
        return vals, grads


class TrigTorusBasis:
    """cos/sin(2 pi <a, x>) on the unit d-torus for frequencies |a|_inf <= order.

    One representative per antipodal frequency pair (first nonzero entry
    positive), zero excluded.
    """

    def __init__(self, order: int, dim: int = 2):
        if order < 1:
            raise ValueError("order must be >= 1")
        from itertools import product as iproduct

        freqs = []
        for a in iproduct(range(-order, order + 1), repeat=dim):
            nz = next((x for x in a if x != 0), 0)
            if nz > 0:
                freqs.append(a)
        self.freqs = np.array(freqs, dtype=float)
        self.order = order
        self.dim = dim
        self.n_basis = 2 * len(freqs)

    def jets(self, points: np.ndarray):
        pts = np.atleast_2d(points)
        phase = 2.0 * pi * (pts @ self.freqs.T)  # (N, F)
        cos_p, sin_p = np.cos(phase), np.sin(phase)
        n, F = phase.shape
        vals = np.empty((n, 2 * F))
        grads = np.empty((n, 2 * F, self.dim))
        vals[:, 0::2], vals[:, 1::2] = cos_p, sin_p
        coef = 2.0 * pi * self.freqs  # (F, dim)
        grads[:, 0::2, :] = -sin_p[:, :, None] * coef[None, :, :]
        grads[:, 1::2, :] = cos_p[:, :, None] * coef[None, :, :]
        return vals, grads


class SurfaceRestrictedBasis:
    """Scalar basis restricted to a parameterized surface patch.

    Evaluates the ambient-chart basis at the surface points and chain-rules
    the gradients through the surface Jacobian, giving jets in the (s, t)
    parameters.
    """

    def __init__(self, basis, surface):
        self.base = basis
        self.surface = surface
        self.dim = 2
        self.n_basis = basis.n_basis

    def jets(self, points: np.ndarray):
        st = np.atleast_2d(points)
        pts = np.array([self.surface.point(a, b) for a, b in st])
        jacs = np.array([self.surface.partials(a, b) for a, b in st])
        vals, grads = self.base.jets(pts)  # grads: (N, nb, ambient_dim)
        return vals, np.einsum("nba,nad->nbd", grads, jacs)


class CustomBasis:
    """User-supplied jets: fn(points) -> (values (N, nb), grads (N, nb, d))."""

    def __init__(self, fn: Callable, n_basis: int, dim: int):
        self.fn = fn
        self.n_basis = n_basis
        self.dim = dim

    def jets(self, points: np.ndarray):
        vals, grads = self.fn(np.atleast_2d(points))
        return np.asarray(vals, dtype=float), np.asarray(grads, dtype=float)


class StackedBasis:
    """Vector-valued basis with an independent scalar block per component."""

    def __init__(self, blocks):
        self.blocks = list(blocks)
        dims = {b.dim for b in self.blocks}
        if len(dims) != 1:
            raise ValueError("all blocks must share the chart dimension")
        self.dim = dims.pop()
        self.k = len(self.blocks)
        self.n_basis = sum(b.n_basis for b in self.blocks)

    def jets_vector(self, points: np.ndarray):
        pts = np.atleast_2d(points)
        n = pts.shape[0]
        A = np.zeros((n, self.k, self.n_basis))
        B = np.zeros((n, self.k, self.dim, self.n_basis))
        ofs = 0
        for i, b in enumerate(self.blocks):
            vals, grads = b.jets(pts)
            A[:, i, ofs : ofs + b.n_basis] = vals
            B[:, i, :, ofs : ofs + b.n_basis] = np.swapaxes(grads, 1, 2)
            ofs += b.n_basis
        return A, B


# -- coefficient laws --------------------------------------------------------

class GaussianLaw:
    """Centered Gaussian coefficients with covariance ``cov`` (default I)."""

    kind = "gaussian"

    def __init__(self, n: int, cov: Optional[np.ndarray] = None):
        self.n = n
        self.cov = np.eye(n) if cov is None else np.asarray(cov, dtype=float)
        if self.cov.shape != (n, n):
            raise ValueError("covariance shape mismatch")
        vals, vecs = np.linalg.eigh(self.cov)
        if vals.min() < -1e-10:
            raise ValueError("covariance is not positive semidefinite")
        self._factor = vecs * np.sqrt(np.clip(vals, 0.0, None))
        sign, logdet = np.linalg.slogdet(self.cov + np.eye(n) * 0.0)
        self._logdet = logdet if vals.min() > 1e-12 else None
        self._inv = np.linalg.pinv(self.cov)

    def sample(self, rng: np.random.Generator, size: int = 1) -> np.ndarray:
        return rng.standard_normal((size, self.n)) @ self._factor.T

    def log_density(self, c: np.ndarray) -> np.ndarray:
        if self._logdet is None:
            raise ValueError("degenerate covariance has no density")
        c = np.atleast_2d(c)
        quad = np.einsum("ni,ij,nj->n", c, self._inv, c)
        return -0.5 * (self.n * log(2.0 * pi) + self._logdet + quad)


class StudentTLaw:
    """Multivariate Student-t coefficients: c = z sqrt(dof / chi2) * scale."""

    kind = "student_t"

    def __init__(self, n: int, dof: float, scale: float = 1.0):
        if dof <= 0:
            raise ValueError("dof must be positive")
        self.n = n
        self.dof = float(dof)
        self.scale = float(scale)

    def sample(self, rng: np.random.Generator, size: int = 1) -> np.ndarray:
        z = rng.standard_normal((size, self.n))
        q = rng.chisquare(self.dof, size=size)
        return self.scale * z * np.sqrt(self.dof / q)[:, None]

    def log_density(self, c: np.ndarray) -> np.ndarray:
        c = np.atleast_2d(c)
        n, nu, s = self.n, self.dof, self.scale
        quad = np.sum((c / s) ** 2, axis=1)
        return (
            lgamma((nu + n) / 2.0)
            - lgamma(nu / 2.0)
            - 0.5 * n * log(nu * pi)
            - n * log(s)
            - 0.5 * (nu + n) * np.log1p(quad / nu)
        )


def _t_log_density_iso(y: np.ndarray, dof: float, scale: float) -> np.ndarray:
    d = y.shape[1]
    quad = np.sum((y / scale) ** 2, axis=1)
    return (
        lgamma((dof + d) / 2.0)
        - lgamma(dof / 2.0)
        - 0.5 * d * log(dof * pi)
        - d * log(scale)
        - 0.5 * (dof + d) * np.log1p(quad / dof)
    )


def _gauss_log_density_iso(y: np.ndarray, scale: float) -> np.ndarray:
    d = y.shape[1]
    return -0.5 * (d * log(2.0 * pi) + 2.0 * d * log(scale) + np.sum((y / scale) ** 2, axis=1))


# -- conditioned jets --------------------------------------------------------

@dataclass
class ConditionedJet:
    """Conditional law of the differential at a point given X(p) = 0.

    ``weighted_gradient_samples(rng, n)`` returns ``(weights, grads)`` with
    grads of shape (n', k, d) in chart coordinates; the induced zonotope of
    the conditioned wedge has exactly these weights as generator weights, so
    sum(weights) estimates (or equals) ``density_at_zero``.
    """

    k: int
    dim: int
    density_at_zero: float
    sampler: Callable[[np.random.Generator, int], tuple[np.ndarray, np.ndarray]]
    exact: bool = False
    diagnostics: dict = field(default_factory=dict)

    def weighted_gradient_samples(self, rng: Optional[np.random.Generator], n: int):
        if n <= 0 and not self.exact:
            raise ValueError("sample count must be positive")
        return self.sampler(rng, n)


# -- models ------------------------------------------------------------------

class LinearFieldModel:
    """X = sum_i c_i f_i with a Gaussian or Student-t coefficient law."""

    def __init__(self, basis, law, k: Optional[int] = None):
        if isinstance(basis, StackedBasis):
            self.k = basis.k
        else:
            self.k = 1 if k is None else k
            if self.k != 1:
                raise ValueError("scalar bases build k = 1 models; use StackedBasis")
        self.basis = basis
        self.dim = basis.dim
        self.n_coefficients = basis.n_basis
        if law.n != self.n_coefficients:
            raise ValueError("law dimension does not match the basis")
        if law.kind == "student_t" and law.dof <= self.k:
            raise ValueError("student-t dof must exceed the codomain dimension")
        self.law = law

    # jets ------------------------------------------------------------------
    def jets(self, points: np.ndarray):
        """(A, B) with values = A @ c and chart differentials = B @ c."""
        if isinstance(self.basis, StackedBasis):
            return self.basis.jets_vector(points)
        vals, grads = self.basis.jets(points)
        return vals[:, None, :], np.swapaxes(grads, 1, 2)[:, None, :, :]

    def jet(self, p: np.ndarray):
        """Per-point contract: A (k, n) and B (k*dim, n) with vec(dX) = B c."""
        A, B = self.jets(np.atleast_2d(p))
        return A[0], B[0].reshape(self.k * self.dim, self.n_coefficients)

    def evaluate(self, points: np.ndarray, c: np.ndarray) -> np.ndarray:
        A, _ = self.jets(points)
        return A @ c

    def jacobian(self, points: np.ndarray, c: np.ndarray) -> np.ndarray:
        _, B = self.jets(points)
        return B @ c

    def value_evaluator(self, points: np.ndarray):
        """Precompute basis values on fixed points; returns c -> (N, k)."""
        A, _ = self.jets(points)
        return lambda c: A @ c

    def jet_evaluator(self, points: np.ndarray):
        A, B = self.jets(points)
        return lambda c: (A @ c, B @ c)

    # sampling ----------------------------------------------------------------
    def sample_field(self, seed_or_rng, *path) -> np.ndarray:
        rng = seed_or_rng if isinstance(seed_or_rng, np.random.Generator) else generator(seed_or_rng, *path)
        return self.law.sample(rng, 1)[0]

    # conditioning --------------------------------------------------------------
    def value_covariance(self, p: np.ndarray) -> np.ndarray:
        A, _ = self.jet(p)
        if self.law.kind == "gaussian":
            return A @ self.law.cov @ A.T
        return self.law.scale**2 * (A @ A.T)

    def conditioned_jet(
        self,
        p: np.ndarray,
        n_importance: int = 4096,
        rng: Optional[np.random.Generator] = None,
        proposal: str = "student_t",
        proposal_scale: Optional[float] = None,
    ) -> ConditionedJet:
        if self.law.kind == "gaussian":
            return self._condition_gaussian(p)
        return self._condition_importance(p, n_importance, rng, proposal, proposal_scale)

    def _condition_gaussian(self, p: np.ndarray) -> ConditionedJet:
        A, Bf = self.jet(p)
        S = self.law.cov
        Sxx = A @ S @ A.T
        eigvals = np.linalg.eigvalsh(Sxx)
        if eigvals.min() <= MIN_EIG:
            raise ValueError(f"degenerate value covariance at p={np.asarray(p).tolist()}")
        Sdx = Bf @ S @ A.T
        Sdd = Bf @ S @ Bf.T
        Sxx_inv = np.linalg.inv(Sxx)
        cond_cov = Sdd - Sdx @ Sxx_inv @ Sdx.T
        vals, vecs = np.linalg.eigh(cond_cov)
        factor = vecs * np.sqrt(np.clip(vals, 0.0, None))
        rho0 = (2.0 * pi) ** (-self.k / 2.0) / sqrt(np.linalg.det(Sxx))
        k, d = self.k, self.dim

        def sampler(rng, n):
            z = rng.standard_normal((n, factor.shape[0]))
            grads = (z @ factor.T).reshape(n, k, d)
            return np.full(n, rho0 / n), grads

        return ConditionedJet(k=k, dim=d, density_at_zero=rho0, sampler=sampler, exact=False)

    def _condition_importance(self, p, n_importance, rng, proposal, proposal_scale):
        if rng is None:
            raise ValueError("importance-sampled conditioning needs an rng")
        if n_importance <= 0:
            raise ValueError("sample count must be positive")
        A, Bf = self.jet(p)
        k, d, nb = self.k, self.dim, self.n_coefficients
        u, sv, vt = np.linalg.svd(A, full_matrices=True)
        if sv.min() <= sqrt(MIN_EIG):
            raise ValueError(f"evaluation map is rank deficient at p={np.asarray(p).tolist()}")
        Q = vt[k:].T  # orthonormal basis of ker A, shape (nb, nb - k)
        jac_factor = 1.0 / np.prod(sv)
        law = self.law
        if proposal_scale is None:
            base = law.scale if law.kind == "student_t" else 1.0
            dof = getattr(law, "dof", 5.0)
            proposal_scale = base * sqrt(dof / (dof - 2.0)) if dof > 2.0 else 1.5 * base

        def draw(rng, n):
            dfree = nb - k
            if proposal == "student_t":
                dof = getattr(law, "dof", 5.0)
                z = rng.standard_normal((n, dfree))
                q = rng.chisquare(dof, size=n)
                y = proposal_scale * z * np.sqrt(dof / q)[:, None]
                logq = _t_log_density_iso(y, dof, proposal_scale)
            elif proposal == "gaussian":
                y = proposal_scale * rng.standard_normal((n, dfree))
                logq = _gauss_log_density_iso(y, proposal_scale)
            else:
                raise ValueError(f"unknown proposal {proposal!r}")
            cs = y @ Q.T
            logw = law.log_density(cs) - logq
            weights = jac_factor * np.exp(logw) / n
            grads = (cs @ Bf.T).reshape(n, k, d)
            return weights, grads

        first = draw(rng, n_importance)
        cache = [first]

        def sampler(rng, n):
            if cache and n == first[0].shape[0]:
                return cache.pop()
            return draw(rng, n)

        w0 = first[0]
        rho0 = float(w0.sum())
        ess = float(w0.sum() ** 2 / np.maximum((w0**2).sum(), 1e-300))
        se = float(np.std(w0 * n_importance, ddof=1) / sqrt(n_importance)) if n_importance > 1 else 0.0
        diag = {"ess": ess, "density_se": se}
        if ess < 0.05 * n_importance:
            diag["warning"] = "low effective sample size"
        return ConditionedJet(
            k=k, dim=d, density_at_zero=rho0, sampler=sampler, exact=False, diagnostics=diag
        )


class ShiftedFieldModel:
    """Random level sets X = phi - lambda for a fixed function phi.

    The conditional jet at p is deterministic (the differential of phi), and
    the density at zero is the shift density evaluated at phi(p).
    """

    def __init__(self, basis, phi_coefficients, lambda_log_density, lambda_sampler, k: int = 1):
        self.basis = basis
        self.k = k
        self.dim = basis.dim
        self.phi_coefficients = np.asarray(phi_coefficients, dtype=float)
        self._lambda_log_density = lambda_log_density
        self._lambda_sampler = lambda_sampler
        self.deterministic_jet = True

    @staticmethod
    def gaussian_shift(basis, phi_coefficients, std: float = 1.0, k: int = 1) -> "ShiftedFieldModel":
        def logdens(x):
            x = np.atleast_1d(x)
            return -0.5 * (x.size * log(2.0 * pi) + 2 * x.size * log(std) + np.sum((x / std) ** 2))

        return ShiftedFieldModel(
            basis, phi_coefficients, logdens, lambda rng: std * rng.standard_normal(k), k=k
        )

    def _phi_jets(self, points: np.ndarray):
        if isinstance(self.basis, StackedBasis):
            A, B = self.basis.jets_vector(points)
        else:
            vals, grads = self.basis.jets(points)
            A, B = vals[:, None, :], np.swapaxes(grads, 1, 2)[:, None, :, :]
        return A @ self.phi_coefficients, B @ self.phi_coefficients

    def evaluate(self, points: np.ndarray, c: np.ndarray) -> np.ndarray:
        vals, _ = self._phi_jets(points)
        return vals - np.asarray(c)[None, :]

    def jacobian(self, points: np.ndarray, c: np.ndarray) -> np.ndarray:
        _, grads = self._phi_jets(points)
        return grads

    def value_evaluator(self, points: np.ndarray):
        vals, _ = self._phi_jets(points)
        return lambda c: vals - np.asarray(c)[None, :]

    def jet_evaluator(self, points: np.ndarray):
        vals, grads = self._phi_jets(points)
        return lambda c: (vals - np.asarray(c)[None, :], grads)

    def sample_field(self, seed_or_rng, *path) -> np.ndarray:
        rng = seed_or_rng if isinstance(seed_or_rng, np.random.Generator) else generator(seed_or_rng, *path)
        return np.atleast_1d(self._lambda_sampler(rng))

    def conditioned_jet(self, p: np.ndarray, **_ignored) -> ConditionedJet:
        vals, grads = self._phi_jets(np.atleast_2d(p))
        rho0 = float(np.exp(self._lambda_log_density(vals[0])))
        grad = grads[0]

        def sampler(rng, n):
            return np.array([rho0]), grad[None, :, :]

        return ConditionedJet(
            k=self.k, dim=self.dim, density_at_zero=rho0, sampler=sampler, exact=True
        )


def normal_field(chart: Chart) -> LinearFieldModel:
    """Unit-variance Gaussian field whose induced metric is the chart metric.

    On the circle this is gamma_1 cos + gamma_2 sin; on the sphere it is the
    restriction of a standard Gaussian linear form on the ambient space.
    """
    if chart.name == "circle":
        basis = TrigCircleBasis(order=1)
    elif chart.name == "sphere2":
        basis = AmbientLinearBasis(chart)
    else:
        raise ValueError(f"no normal field construction for chart {chart.name!r}")
    return LinearFieldModel(basis, GaussianLaw(basis.n_basis))


# -- configuration -----------------------------------------------------------

def _basis_from_config(doc: dict, chart: Chart):
    kind = doc.get("basis")
    if kind == "fourier":
        return TrigCircleBasis(int(doc.get("order", 1)), bool(doc.get("constant", False)))
    if kind == "kostlan":
        return KostlanCircleBasis(int(doc["degree"]))
    if kind == "linear":
        return AmbientLinearBasis(chart)
    if kind == "spherical_harmonics":
        return SolidHarmonicBasis(chart, int(doc.get("lmax", 1)))
    if kind == "trig2d":
        return TrigTorusBasis(int(doc.get("order", 1)))
    raise ValueError(f"unknown basis family {kind!r}")


def model_from_config(doc: dict, chart: Chart):
    """Build a model from a config mapping (see the CLI schema)."""
    components = int(doc.get("components", 1))
    if components == 1:
        basis = _basis_from_config(doc, chart)
    else:
        basis = StackedBasis([_basis_from_config(doc, chart) for _ in range(components)])
    law_kind = doc.get("law", "gaussian")
    if law_kind == "gaussian":
        cov = doc.get("cov")
        law = GaussianLaw(basis.n_basis, None if cov is None else np.asarray(cov, dtype=float))
        return LinearFieldModel(basis, law)
    if law_kind == "student_t":
        law = StudentTLaw(basis.n_basis, float(doc.get("dof", 5.0)), float(doc.get("scale", 1.0)))
        return LinearFieldModel(basis, law)
    if law_kind == "shifted":
        phi = np.asarray(doc["phi"], dtype=float)
        return ShiftedFieldModel.gaussian_shift(
            basis, phi, std=float(doc.get("shift_std", 1.0)), k=components
        )
    raise ValueError(f"unknown coefficient law {law_kind!r}")
