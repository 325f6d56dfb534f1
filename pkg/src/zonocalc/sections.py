"""Per-node zonotopes of conditioned gradient wedges, and what they predict.

At each quadrature node p the estimator draws conditional gradient samples,
wedges the k rows in orthonormal coframe coordinates and averages the
resulting segments scaled by the density of X(p) at 0.  The node zonotope
then carries every downstream quantity exactly: its length is the expected
volume density, its nigiro the expected current, its Grassmannian measure
the varifold slice, and wedges/convex mixtures of sections are nodewise
zonotope operations.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from math import comb, sqrt
from typing import Callable, Optional

import numpy as np

from .algebra import pair_length_with_se, wedge_zonotopes
from .manifolds import Chart, Curve, QuadratureRule, builtin, curve_pullback_frame
from .multivector import MultiVector, wedge_coords_batch, wedge_table
from .rng import generator
from .zonotope import Zonotope

__all__ = [
    "ZonoidSectionEstimate",
    "estimate_section",
    "kac_rice_volume",
    "expected_current_pairing",
    "alpha_expectation",
    "wedge_sections",
    "pair_density",
    "pullback_section",
    "bernoulli_mixture",
    "ConstantWeight",
    "TangentFunctional",
    "LinearFunctional",
]


@dataclass(frozen=True)
class ZonoidSectionEstimate:
    """Zonoid section sampled on a quadrature rule, in coframe coordinates."""

    chart: Chart
    rule: QuadratureRule
    k: int
    zonotopes: list
    rho0: np.ndarray
    delta: np.ndarray
    delta_se: np.ndarray
    current: np.ndarray
    current_se: np.ndarray
    n_samples: int
    seed: Optional[int]
    stream: Optional[int]
    deterministic: bool
    model: object = field(default=None, repr=False)

    @property
    def n_nodes(self) -> int:
        return self.rule.n_nodes

    @property
    def coord_dim(self) -> int:
        return comb(self.chart.dim, self.k)

    def node_zonotope(self, i: int) -> Zonotope:
        return self.zonotopes[i]

    # -- export -------------------------------------------------------------
    def export_json(self, path: str):
        doc = {
            "manifold": self.chart.name,
            "grade": self.k,
            "seed": self.seed,
            "stream": self.stream,
            "n_samples": self.n_samples,
            "nodes": [
                {
                    "point": self.rule.points[i].tolist(),
                    "weight": float(self.rule.weights[i]),
                    "rho0": float(self.rho0[i]),
                    "delta": float(self.delta[i]),
                    "delta_se": float(self.delta_se[i]),
                    "current": self.current[i].tolist(),
                    "current_se": self.current_se[i].tolist(),
                    "n_generators": self.zonotopes[i].n_generators,
                }
                for i in range(self.n_nodes)
            ],
        }
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=1)

    def export_csv(self, path: str, timestamp: Optional[str] = None):
        with open(path, "w", newline="") as fh:
            if timestamp is not None:
                fh.write(f"# generated {timestamp}\n")
            writer = csv.writer(fh)
            dim = self.chart.dim
            header = [f"p{j}" for j in range(dim)] + ["delta", "delta_se"]
            header += [f"e{j}" for j in range(self.coord_dim)]
            writer.writerow(["node"] + header)
            for i in range(self.n_nodes):
                row = [i] + [repr(float(x)) for x in self.rule.points[i]]
                row += [repr(float(self.delta[i])), repr(float(self.delta_se[i]))]
                row += [repr(float(x)) for x in self.current[i]]
                writer.writerow(row)


def _node_statistics(weights: np.ndarray, vectors: np.ndarray):
    """Length/nigiro of the weighted segment average plus Monte Carlo errors."""
    n = weights.shape[0]
    norms = np.linalg.norm(vectors, axis=1)
    delta = float(np.dot(weights, norms))
    nigiro = weights @ vectors
    if n > 1:
        a = n * weights * norms
        delta_se = float(np.std(a, ddof=1) / sqrt(n))
        b = n * weights[:, None] * vectors
        nigiro_se = np.std(b, axis=0, ddof=1) / sqrt(n)
    else:
        delta_se = 0.0
        nigiro_se = np.zeros(vectors.shape[1])
    return delta, nigiro, delta_se, nigiro_se


def estimate_section(
    model,
    chart: Chart,
    rule: QuadratureRule,
    n_samples: int = 4096,
    seed: int = 0,
    stream: int = 0,
) -> ZonoidSectionEstimate:
    """Empirical zonoid section of a model on a quadrature rule.

    Node i draws from the stream ``(seed, stream, i)``; distinct sections
    meant to be wedged together must use distinct streams.
    """
    k, d = model.k, chart.dim
    if d != getattr(model, "dim", d):
        raise ValueError("model and chart dimensions disagree")
    if k > d:
        raise ValueError(f"codomain dimension {k} exceeds manifold dimension {d}")
    deterministic = bool(getattr(model, "deterministic_jet", False))
    pts = rule.points
    coframes = chart.coframe(pts)
    zonos, rho0s = [], []
    deltas, delta_ses = [], []
    currents, current_ses = [], []
    for i in range(rule.n_nodes):
        rng = generator(seed, stream, i)
        try:
            jet = model.conditioned_jet(pts[i], n_importance=n_samples, rng=rng)
        except ValueError as exc:
            raise ValueError(f"conditioning failed at node {i} ({pts[i].tolist()}): {exc}") from exc
        weights, grads = jet.weighted_gradient_samples(rng, n_samples)
        rows_on = grads @ coframes[i].T
        wedges = wedge_coords_batch(rows_on)
        delta, nigiro, d_se, e_se = _node_statistics(weights, wedges)
        zonos.append(Zonotope(d, k, weights, wedges, nigiro))
        rho0s.append(jet.density_at_zero)
        deltas.append(delta)
        delta_ses.append(d_se)
        currents.append(nigiro)
        current_ses.append(e_se)
    return ZonoidSectionEstimate(
        chart=chart,
        rule=rule,
        k=k,
        zonotopes=zonos,
        rho0=np.array(rho0s),
        delta=np.array(deltas),
        delta_se=np.array(delta_ses),
        current=np.array(currents),
        current_se=np.array(current_ses),
        n_samples=n_samples,
        seed=seed,
        stream=stream,
        deterministic=deterministic,
        model=model,
    )


def _region_mask(section: ZonoidSectionEstimate, region) -> np.ndarray:
    if region is None:
        return np.ones(section.n_nodes, dtype=bool)
    mask = np.asarray(region(section.rule.points), dtype=bool).reshape(-1)
    if mask.shape[0] != section.n_nodes:
        raise ValueError("region predicate returned a mask of the wrong length")
    return mask


def kac_rice_volume(section: ZonoidSectionEstimate, region=None) -> tuple[float, float]:
    """Expected zero-set volume over a region: quadrature of the density."""
    mask = _region_mask(section, region)
    w = section.rule.weights[mask]
    value = float(np.dot(w, section.delta[mask]))
    se = float(np.sqrt(np.sum((w * section.delta_se[mask]) ** 2)))
    return value, se


# -- weight functionals -------------------------------------------------------

@dataclass(frozen=True)
class ConstantWeight:
    value: float = 1.0


@dataclass(frozen=True)
class TangentFunctional:
    """Even functional on unit simple grade-k covectors.

    ``fn`` maps an (n, C) array of unit lines to n values when
    ``vectorized`` is true, else a single MultiVector to a value.
    """

    fn: Callable
    vectorized: bool = True


@dataclass(frozen=True)
class LinearFunctional:
    """Fiberwise linear functional; coefficients per node or constant."""

    coefficients: np.ndarray | Callable


def _tangent_values(functional: TangentFunctional, lines: np.ndarray, m: int, k: int) -> np.ndarray:
    if functional.vectorized:
        return np.asarray(functional.fn(lines), dtype=float).reshape(-1)
    return np.array([functional.fn(MultiVector(m, k, line)) for line in lines])


def _check_even(functional: TangentFunctional, m: int, k: int):
    probe = generator(0xE7E7, m, k).standard_normal((8, comb(m, k)))
    probe /= np.linalg.norm(probe, axis=1)[:, None]
    plus = _tangent_values(functional, probe, m, k)
    minus = _tangent_values(functional, -probe, m, k)
    if np.max(np.abs(plus - minus)) > 1e-9 * max(1.0, np.max(np.abs(plus))):
        raise ValueError("tangent functionals must be even")


def alpha_expectation(section: ZonoidSectionEstimate, weight, region=None) -> tuple[float, float]:
    """Weighted Kac-Rice expectation over a region.

    Constant weights reduce to the expected volume; tangent functionals
    integrate against each node's Grassmannian measure; linear functionals
    evaluate on the expected current.
    """
    mask = _region_mask(section, region)
    if isinstance(weight, ConstantWeight):
        value, se = kac_rice_volume(section, region)
        return weight.value * value, abs(weight.value) * se
    if isinstance(weight, TangentFunctional):
        m, k = section.chart.dim, section.k
        _check_even(weight, m, k)
        total, var = 0.0, 0.0
        for i in np.nonzero(mask)[0]:
            z = section.zonotopes[i]
            if z.n_generators == 0:
                continue
            norms = np.linalg.norm(z.vectors, axis=1)
            keep = norms > 0
            vals = np.zeros(z.n_generators)
            vals[keep] = _tangent_values(weight, z.vectors[keep] / norms[keep, None], m, k)
            a = z.weights * norms * vals
            total += section.rule.weights[i] * float(a.sum())
            n = z.n_generators
            if n > 1 and not section.deterministic:
                var += (section.rule.weights[i] * np.std(n * a, ddof=1) / sqrt(n)) ** 2
        return total, sqrt(var)
    if isinstance(weight, LinearFunctional):
        coeffs = weight.coefficients
        if callable(coeffs):
            T = np.asarray(coeffs(section.rule.points), dtype=float)
        else:
            T = np.broadcast_to(np.asarray(coeffs, dtype=float), (section.n_nodes, section.coord_dim))
        w = section.rule.weights[mask]
        vals = np.einsum("nc,nc->n", T[mask], section.current[mask])
        value = float(np.dot(w, vals))
        se = float(np.sqrt(np.sum((w * np.linalg.norm(T[mask] * section.current_se[mask], axis=1)) ** 2)))
        return value, se
    raise TypeError(f"unsupported weight functional {weight!r}")


def expected_current_pairing(section: ZonoidSectionEstimate, omega) -> tuple[float, float]:
    """Pairing of a compactly supported (m-k)-form with the expected current.

    ``omega`` gives coframe coefficients per node (callable on points or a
    constant array); the pairing integrates omega ^ e_X against the
    Riemannian volume, which in coframe coordinates is the alternating
    coefficient product.
    """
    d, k = section.chart.dim, section.k
    W = wedge_table(d, d - k, k)[:, :, 0]  # (C(d,d-k), C(d,k)), top coefficient
    if callable(omega):
        om = np.asarray(omega(section.rule.points), dtype=float)
    else:
        om = np.broadcast_to(np.asarray(omega, dtype=float), (section.n_nodes, comb(d, d - k)))
    if om.shape != (section.n_nodes, comb(d, d - k)):
        raise ValueError(f"omega must supply {comb(d, d - k)} coefficients per node")
    return alpha_expectation(section, LinearFunctional(om @ W))


# -- section combinations -----------------------------------------------------

def _check_compatible(s1: ZonoidSectionEstimate, s2: ZonoidSectionEstimate):
    if s1.chart is not s2.chart and s1.chart.name != s2.chart.name:
        raise ValueError("sections live on different manifolds")
    if s1.rule.n_nodes != s2.rule.n_nodes or not np.allclose(s1.rule.points, s2.rule.points):
        raise ValueError("sections use different quadrature rules")


def _check_independent(s1: ZonoidSectionEstimate, s2: ZonoidSectionEstimate):
    if s1.deterministic or s2.deterministic:
        return
    if s1.stream is None or s2.stream is None:
        # derived sections (mixtures, wedges) vouch for their own streams
        return
    if s1.seed == s2.seed and s1.stream == s2.stream:
        raise ValueError(
            "sections share the RNG stream; wedge products require independent estimates"
        )


def wedge_sections(
    s1: ZonoidSectionEstimate, s2: ZonoidSectionEstimate, merge: bool = True
) -> ZonoidSectionEstimate:
    """Nodewise wedge product; the result's density is the intersection density."""
    _check_compatible(s1, s2)
    _check_independent(s1, s2)
    if s1.k + s2.k > s1.chart.dim:
        raise ValueError("grade overflow in section wedge")
    zonos, deltas, d_ses, curs, cur_ses = [], [], [], [], []
    W = wedge_table(s1.chart.dim, s1.k, s2.k)
    for i in range(s1.n_nodes):
        z1, z2 = s1.zonotopes[i], s2.zonotopes[i]
        prod = wedge_zonotopes(z1, z2, merge=merge)
        zonos.append(prod)
        deltas.append(prod.length())
        _, se = pair_length_with_se(z1, z2)
        d_ses.append(se)
        curs.append(prod.nigiro)
        e1, se1 = s1.current[i], s1.current_se[i]
        e2, se2 = s2.current[i], s2.current_se[i]
        term1 = np.einsum("p,q,pqo->o", se1, np.abs(e2), np.abs(W))
        term2 = np.einsum("p,q,pqo->o", np.abs(e1), se2, np.abs(W))
        cur_ses.append(np.sqrt(term1**2 + term2**2))
    return ZonoidSectionEstimate(
        chart=s1.chart,
        rule=s1.rule,
        k=s1.k + s2.k,
        zonotopes=zonos,
        rho0=s1.rho0 * s2.rho0,
        delta=np.array(deltas),
        delta_se=np.array(d_ses),
        current=np.array(curs),
        current_se=np.array(cur_ses),
        n_samples=s1.n_samples * s2.n_samples,
        seed=s1.seed,
        stream=None,
        deterministic=s1.deterministic and s2.deterministic,
        model=None,
    )


def pair_density(s1: ZonoidSectionEstimate, s2: ZonoidSectionEstimate):
    """Nodewise intersection density ell(zeta_1 ^ zeta_2) with standard errors.

    Equivalent to the density of ``wedge_sections`` but computed without
    materializing product generators.
    """
    _check_compatible(s1, s2)
    _check_independent(s1, s2)
    vals = np.empty(s1.n_nodes)
    ses = np.empty(s1.n_nodes)
    for i in range(s1.n_nodes):
        vals[i], ses[i] = pair_length_with_se(s1.zonotopes[i], s2.zonotopes[i])
    return vals, ses


def pullback_section(
    section: ZonoidSectionEstimate, curve: Curve, n_t: int = 64
) -> ZonoidSectionEstimate:
    """Zonoid section of the restricted field along a curve.

    Re-estimates the ambient section at the curve points with the stored
    model and RNG contract, then applies the exact pull-back (pairing each
    generator with the curve velocity), so node i reuses the conditional
    samples of stream ``(seed, stream, i)`` bit for bit.
    """
    if section.model is None:
        raise ValueError("pull-back needs a section that remembers its model")
    if section.k != 1:
        raise ValueError("curve pull-backs apply to scalar (k = 1) sections")
    t_chart, t_rule = builtin("interval", a=0.0, b=1.0, n=n_t)
    zonos, rho0s = [], []
    deltas, d_ses, curs, cur_ses = [], [], [], []
    for i, t in enumerate(t_rule.points[:, 0]):
        p, unit, speed = curve_pullback_frame(section.chart, curve, float(t))
        rng = generator(section.seed, section.stream, i)
        jet = section.model.conditioned_jet(p, n_importance=section.n_samples, rng=rng)
        weights, grads = jet.weighted_gradient_samples(rng, section.n_samples)
        rows_on = grads @ section.chart.coframe(p[None, :])[0].T
        pulled = (rows_on[:, 0, :] @ unit) * speed  # d(X o gamma)/dt
        vecs = pulled[:, None]
        delta, nigiro, d_se, e_se = _node_statistics(weights, vecs)
        zonos.append(Zonotope(1, 1, weights, vecs, nigiro))
        rho0s.append(jet.density_at_zero)
        deltas.append(delta)
        d_ses.append(d_se)
        curs.append(nigiro)
        cur_ses.append(e_se)
    return ZonoidSectionEstimate(
        chart=t_chart,
        rule=t_rule,
        k=1,
        zonotopes=zonos,
        rho0=np.array(rho0s),
        delta=np.array(deltas),
        delta_se=np.array(d_ses),
        current=np.array(curs),
        current_se=np.array(cur_ses),
        n_samples=section.n_samples,
        seed=section.seed,
        stream=section.stream,
        deterministic=section.deterministic,
        model=None,
    )


def bernoulli_mixture(
    s1: ZonoidSectionEstimate, s2: ZonoidSectionEstimate, t: float
) -> ZonoidSectionEstimate:
    """Nodewise convex combination (1-t) s1 + t s2 of two sections.

    Requires that no node has vanishing value density for both fields.
    """
    _check_compatible(s1, s2)
    if not 0.0 <= t <= 1.0:
        raise ValueError("mixture parameter must lie in [0, 1]")
    if s1.k != s2.k:
        raise ValueError("mixtures need sections of equal grade")
    bad = np.nonzero((s1.rho0 <= 0.0) & (s2.rho0 <= 0.0))[0]
    if bad.size:
        raise ValueError(
            f"mixture hypothesis violated: both densities vanish at nodes {bad.tolist()}"
        )
    zonos = [z1.convex_combine(z2, t) for z1, z2 in zip(s1.zonotopes, s2.zonotopes)]
    return ZonoidSectionEstimate(
        chart=s1.chart,
        rule=s1.rule,
        k=s1.k,
        zonotopes=zonos,
        rho0=(1.0 - t) * s1.rho0 + t * s2.rho0,
        delta=(1.0 - t) * s1.delta + t * s2.delta,
        delta_se=np.sqrt(((1.0 - t) * s1.delta_se) ** 2 + (t * s2.delta_se) ** 2),
        current=(1.0 - t) * s1.current + t * s2.current,
        current_se=np.sqrt(((1.0 - t) * s1.current_se) ** 2 + (t * s2.current_se) ** 2),
        n_samples=s1.n_samples + s2.n_samples,
        seed=s1.seed,
        stream=None,
        deterministic=s1.deterministic and s2.deterministic,
        model=None,
    )
