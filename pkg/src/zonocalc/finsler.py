"""Semi-Finsler structures from scalar sections, lengths and Crofton checks.

The centered zonoid of a scalar section defines a seminorm on each tangent
space through its support function.  Curve lengths in this structure halve
expected intersection counts with the random hypersurface, and wedge powers
of the centered zonotopes give Holmes-Thompson densities for k-volumes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial, sqrt
from typing import Optional

import numpy as np

from .algebra import ball_volume, intrinsic_volume, volume, wedge_power
from .manifolds import Chart, Curve, Surface, builtin
from .multivector import MultiVector, wedge_coords_batch
from .rng import generator
from .sections import ZonoidSectionEstimate
from .zonotope import Zonotope

__all__ = [
    "FinslerStructure",
    "finsler_from_section",
    "finsler_length",
    "holmes_thompson_density",
    "ht_density_projection",
    "crofton_surface_check",
]

_CURVE_STREAM = 0xF1


@dataclass(frozen=True)
class FinslerStructure:
    """Per-node centered grade-1 zonotopes with F_p = support function."""

    chart: Chart
    nodes: np.ndarray
    zonotopes: list
    model: object = field(default=None, repr=False)
    n_samples: int = 0
    seed: Optional[int] = None
    stream: Optional[int] = None
    deterministic: bool = False

    def value(self, node: int, v_chart) -> float:
        """F_p(v) at a stored node, for a tangent vector in chart coordinates."""
        v_on = self.chart.vector_frame(self.nodes[node][None, :])[0] @ np.asarray(v_chart, float)
        return self.zonotopes[node].support(v_on)

    def zonotope_at(self, p: np.ndarray, key: int = 0) -> Zonotope:
        """Centered zonotope at an arbitrary point.

        Re-estimates from the generating model when one is attached
        (deterministically in ``key``); structures built from bare zonotope
        tables fall back to the nearest stored node.
        """
        p = np.asarray(p, dtype=float).reshape(-1)
        if self.model is None:
            i = int(np.argmin(np.linalg.norm(self.nodes - p[None, :], axis=1)))
            return self.zonotopes[i]
        rng = generator(self.seed, self.stream, _CURVE_STREAM, key)
        jet = self.model.conditioned_jet(p, n_importance=self.n_samples, rng=rng)
        weights, grads = jet.weighted_gradient_samples(rng, self.n_samples)
        rows_on = grads @ self.chart.coframe(p[None, :])[0].T
        return Zonotope(self.chart.dim, 1, weights, rows_on[:, 0, :], np.zeros(self.chart.dim))


def finsler_from_section(section: ZonoidSectionEstimate) -> FinslerStructure:
    """Semi-Finsler structure of a scalar section (the nigiro is discarded)."""
    if section.k != 1:
        raise ValueError("Finsler structures come from scalar (k = 1) sections")
    return FinslerStructure(
        chart=section.chart,
        nodes=section.rule.points,
        zonotopes=[z.centered() for z in section.zonotopes],
        model=section.model,
        n_samples=section.n_samples,
        seed=section.seed,
        stream=section.stream,
        deterministic=section.deterministic,
    )


def finsler_length(F: FinslerStructure, curve: Curve, n_t: int = 64) -> tuple[float, float]:
    """Curve length int F(gamma'(t)) dt by Gauss-Legendre in t.

    Zero-velocity nodes are tolerated since F(0) = 0; the returned standard
    error reflects the Monte Carlo noise of the per-node zonotopes.
    """
    _, t_rule = builtin("interval", a=0.0, b=1.0, n=n_t)
    total, var = 0.0, 0.0
    for i, (t, wq) in enumerate(zip(t_rule.points[:, 0], t_rule.weights)):
        p = np.asarray(curve.point(float(t)), dtype=float).reshape(-1)
        v = np.asarray(curve.velocity(float(t)), dtype=float).reshape(-1)
        v_on = F.chart.vector_frame(p[None, :])[0] @ v
        if not np.any(v_on):
            continue
        z = F.zonotope_at(p, key=i)
        dots = np.abs(z.vectors @ v_on)
        vals = 0.5 * z.weights * dots
        total += wq * float(vals.sum())
        n = z.n_generators
        if n > 1 and not F.deterministic:
            var += (wq * np.std(n * vals, ddof=1) / sqrt(n)) ** 2
    return total, sqrt(var)


def holmes_thompson_density(F: FinslerStructure, node: int, v: MultiVector) -> float:
    """k-th Holmes-Thompson density at a node via the wedge-power identity.

    Evaluates (2 / (k! b_k)) h_{zeta^(wedge k)}(v) on a simple grade-k
    tangent multivector ``v`` in orthonormal frame coordinates.
    """
    return ht_density_wedge(F.zonotopes[node], v)


def ht_density_wedge(zonotope: Zonotope, v: MultiVector) -> float:
    k = v.k
    if not v.is_simple(1e-9 * max(v.norm(), 1.0)):
        raise ValueError("Holmes-Thompson densities evaluate on simple multivectors")
    if v.is_zero():
        raise ValueError("direction multivector must be nonzero")
    if k == 1:
        return zonotope.centered().support(v)
    from math import comb

    if comb(zonotope.m, k) == 1 and comb(zonotope.n_generators, k) > 1_000_000:
        # top grade with a large body: the k-th power is an interval of mass
        # k! V_k, so the support function needs no subset enumeration
        mass = factorial(k) * intrinsic_volume(zonotope.centered(), k)
        return 2.0 / (factorial(k) * ball_volume(k)) * 0.5 * mass * v.norm()
    power = wedge_power(zonotope.centered(), k)
    return 2.0 / (factorial(k) * ball_volume(k)) * power.support(v)


def ht_density_projection(zonotope: Zonotope, v: MultiVector) -> float:
    """Same density through the projection-volume definition.

    Projects the centered body onto the factor span of ``v`` and multiplies
    the k-volume of the shadow by ||v|| / b_k; serves as the independent
    cross-check of the wedge-power formula.
    """
    k = v.k
    span = v.span()  # (m, k), orthonormal columns
    projected = zonotope.centered().linear_image(span.T)
    return v.norm() / ball_volume(k) * volume(projected)


def crofton_surface_check(
    model,
    chart: Chart,
    surface: Surface,
    n_surface: int = 6,
    n_samples: int = 1024,
    seed: int = 0,
    stream: int = 0,
) -> tuple[float, float]:
    """Both sides of the surface Crofton identity for k = 2 copies.

    lhs integrates the density of the pulled-back self-wedge over the
    surface (the pull-back route); rhs integrates the Holmes-Thompson
    2-density of the ambient centered zonotope on the surface tangent
    bivector (the projection route).  The two sides are algebraically equal
    per node, so their difference measures only floating-point error.
    """
    st, pts, areas = surface.quadrature(n_surface, n_surface)
    coframes = chart.coframe(pts)
    lhs = rhs = 0.0
    for i in range(pts.shape[0]):
        rng = generator(seed, stream, 0x5F, i)
        jet = model.conditioned_jet(pts[i], n_importance=n_samples, rng=rng)
        weights, grads = jet.weighted_gradient_samples(rng, n_samples)
        rows_on = grads @ coframes[i].T
        zeta = Zonotope(chart.dim, 1, weights, rows_on[:, 0, :], np.zeros(chart.dim))
        jac = np.asarray(surface.partials(st[i, 0], st[i, 1]), dtype=float)
        frame_vec = chart.vector_frame(pts[i][None, :])[0]
        jac_on = frame_vec @ jac  # tangent vectors in orthonormal coordinates
        q, _ = np.linalg.qr(jac_on)
        pulled = zeta.linear_image(q.T)
        lhs += areas[i] * 2.0 * intrinsic_volume(pulled, 2)
        bivector = MultiVector(chart.dim, 2, wedge_coords_batch(jac_on.T[None, :, :])[0])
        unit_bivector = bivector * (1.0 / bivector.norm())
        rhs += areas[i] * 2.0 * ball_volume(2) * ht_density_projection(zeta, unit_bivector)
    return lhs, rhs
