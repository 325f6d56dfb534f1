"""Model manifolds: charts, orthonormal (co)frames, quadrature, curves.

Every built-in manifold is described by a single chart with an explicit
metric and an orthonormal coframe.  Sections of Lambda^k T*M are stored in
coframe coordinates throughout the library, so lengths and norms of
multivectors reduce to Euclidean norms; the coframe matrix C(p) maps chart
covector components to orthonormal components and satisfies
C(p)^T C(p) = g(p)^{-1}.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import pi
from typing import Callable, Optional

import numpy as np

__all__ = [
    "Chart",
    "QuadratureRule",
    "Curve",
    "Surface",
    "builtin",
    "integrate",
    "curve_pullback_frame",
    "cubic_table_curve",
    "sphere_arc",
    "torus_line",
    "interval_segment",
]


@dataclass(frozen=True)
class Chart:
    """Single coordinate chart with metric, frames and optional embedding."""

    name: str
    dim: int
    lo: np.ndarray
    hi: np.ndarray
    periodic: np.ndarray
    metric: Callable[[np.ndarray], np.ndarray]
    coframe: Callable[[np.ndarray], np.ndarray]
    embedding: Optional[Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]] = None
    ambient_dim: int = 0

    def wrap(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float)).copy()
        span = self.hi - self.lo
        for j in range(self.dim):
            if self.periodic[j]:
                pts[:, j] = self.lo[j] + np.mod(pts[:, j] - self.lo[j], span[j])
        return pts

    def vector_frame(self, points: np.ndarray) -> np.ndarray:
        """Per-point matrix sending chart vector components to orthonormal ones."""
        C = self.coframe(np.atleast_2d(points))
        return np.linalg.inv(np.swapaxes(C, 1, 2))

    def volume_density(self, points: np.ndarray) -> np.ndarray:
        return np.sqrt(np.linalg.det(self.metric(np.atleast_2d(points))))

    def distance(self, p: np.ndarray, q: np.ndarray) -> float:
        """Metric-aware separation used for zero deduplication."""
        p = np.asarray(p, dtype=float).reshape(-1)
        q = np.asarray(q, dtype=float).reshape(-1)
        if self.embedding is not None:
            (pe, _), (qe, _) = self.embedding(p[None, :]), self.embedding(q[None, :])
            return float(np.linalg.norm(pe[0] - qe[0]))
        d = p - q
        span = self.hi - self.lo
        for j in range(self.dim):
            if self.periodic[j]:
                d[j] = d[j] - span[j] * np.round(d[j] / span[j])
        return float(np.linalg.norm(d))


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and positive weights summing to the Riemannian volume."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float)).copy()
        w = np.asarray(self.weights, dtype=float).reshape(-1).copy()
        if pts.shape[0] != w.shape[0]:
            raise ValueError("points and weights disagree")
        if w.size and w.min() <= 0:
            raise ValueError("quadrature weights must be positive")
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def n_nodes(self) -> int:
        return self.weights.shape[0]


def integrate(rule: QuadratureRule, f) -> float:
    """Apply the rule to a callable on points or to per-node values."""
    if callable(f):
        vals = np.array([f(p) for p in rule.points], dtype=float)
    else:
        vals = np.asarray(f, dtype=float)
    return float(np.dot(rule.weights, vals))


# -- builtin manifolds -----------------------------------------------------

def _interval(a: float, b: float, n: int) -> tuple[Chart, QuadratureRule]:
    if b <= a:
        raise ValueError("interval needs a < b")
    dim_id = lambda pts: np.broadcast_to(np.eye(1), (pts.shape[0], 1, 1))
    chart = Chart(
        name=f"interval({a},{b})",
        dim=1,
        lo=np.array([a]),
        hi=np.array([b]),
        periodic=np.array([False]),
        metric=dim_id,
        coframe=dim_id,
    )
    x, w = np.polynomial.legendre.leggauss(n)
    pts = (0.5 * (b - a) * (x + 1.0) + a)[:, None]
    return chart, QuadratureRule(pts, 0.5 * (b - a) * w)


def _circle(n: int) -> tuple[Chart, QuadratureRule]:
    def embed(pts):
        th = pts[:, 0]
        pos = np.column_stack([np.cos(th), np.sin(th)])
        jac = np.stack([-np.sin(th), np.cos(th)], axis=1)[:, :, None]
        return pos, jac

    dim_id = lambda pts: np.broadcast_to(np.eye(1), (pts.shape[0], 1, 1))
    chart = Chart(
        name="circle",
        dim=1,
        lo=np.array([0.0]),
        hi=np.array([2.0 * pi]),
        periodic=np.array([True]),
        metric=dim_id,
        coframe=dim_id,
        embedding=embed,
        ambient_dim=2,
    )
    theta = np.arange(n) * (2.0 * pi / n)
    return chart, QuadratureRule(theta[:, None], np.full(n, 2.0 * pi / n))


def _flat_torus(dims: tuple[int, ...]) -> tuple[Chart, QuadratureRule]:
    d = len(dims)
    eye = np.eye(d)
    dim_id = lambda pts: np.broadcast_to(eye, (pts.shape[0], d, d))
    chart = Chart(
        name=f"torus{d}",
        dim=d,
        lo=np.zeros(d),
        hi=np.ones(d),
        periodic=np.ones(d, dtype=bool),
        metric=dim_id,
        coframe=dim_id,
    )
    axes = [(np.arange(nj) + 0.5) / nj for nj in dims]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.column_stack([g.reshape(-1) for g in mesh])
    w = np.full(pts.shape[0], 1.0 / pts.shape[0])
    return chart, QuadratureRule(pts, w)


def _sphere2(n_theta: int, n_phi: int) -> tuple[Chart, QuadratureRule]:
    def metric(pts):
        g = np.zeros((pts.shape[0], 2, 2))
        g[:, 0, 0] = 1.0
        g[:, 1, 1] = np.sin(pts[:, 0]) ** 2
        return g

    def coframe(pts):
        C = np.zeros((pts.shape[0], 2, 2))
        C[:, 0, 0] = 1.0
        C[:, 1, 1] = 1.0 / np.sin(pts[:, 0])
        return C

    def embed(pts):
        th, ph = pts[:, 0], pts[:, 1]
        st, ct, sp, cp = np.sin(th), np.cos(th), np.sin(ph), np.cos(ph)
        pos = np.column_stack([st * cp, st * sp, ct])
        jac = np.empty((pts.shape[0], 3, 2))
        jac[:, 0, 0], jac[:, 1, 0], jac[:, 2, 0] = ct * cp, ct * sp, -st
        jac[:, 0, 1], jac[:, 1, 1], jac[:, 2, 1] = -st * sp, st * cp, 0.0
        return pos, jac

    chart = Chart(
        name="sphere2",
        dim=2,
        lo=np.array([0.0, 0.0]),
        hi=np.array([pi, 2.0 * pi]),
        periodic=np.array([False, True]),
        metric=metric,
        coframe=coframe,
        embedding=embed,
        ambient_dim=3,
    )
    # Gauss-Legendre in cos(theta) never places nodes at the poles
    u, wu = np.polynomial.legendre.leggauss(n_theta)
    theta = np.arccos(u[::-1])
    wtheta = wu[::-1]
    phi = np.arange(n_phi) * (2.0 * pi / n_phi)
    T, P = np.meshgrid(theta, phi, indexing="ij")
    pts = np.column_stack([T.reshape(-1), P.reshape(-1)])
    w = np.repeat(wtheta, n_phi) * (2.0 * pi / n_phi)
    return chart, QuadratureRule(pts, w)


def builtin(name: str, **sizes) -> tuple[Chart, QuadratureRule]:
    """Built-in manifold charts with their quadrature rules.

    interval(a, b, n) | circle(n) | torus2(nx, ny) | torus3(nx, ny, nz) |
    sphere2(n_theta, n_phi).
    """
    if name == "interval":
        return _interval(sizes.get("a", 0.0), sizes.get("b", 1.0), sizes.get("n", 64))
    if name == "circle":
        return _circle(sizes.get("n", 128))
    if name == "torus2":
        return _flat_torus((sizes.get("nx", 16), sizes.get("ny", sizes.get("nx", 16))))
    if name == "torus3":
        n = sizes.get("nx", 8)
        return _flat_torus((n, sizes.get("ny", n), sizes.get("nz", n)))
    if name == "sphere2":
        return _sphere2(sizes.get("n_theta", 16), sizes.get("n_phi", 32))
    raise ValueError(f"unknown manifold {name!r}")


# -- curves ----------------------------------------------------------------

@dataclass(frozen=True)
class Curve:
    """Parameterized curve t in [0,1] -> chart coordinates, with derivative."""

    chart: Chart
    point: Callable[[float], np.ndarray]
    velocity: Callable[[float], np.ndarray]

    def check_velocity(self, n: int = 32, h: float = 1e-6, tol: float = 1e-3) -> float:
        """Max finite-difference defect of the velocity on a probe grid."""
        worst = 0.0
        for t in np.linspace(h, 1.0 - h, n):
            fd = (np.asarray(self.point(t + h)) - np.asarray(self.point(t - h))) / (2.0 * h)
            worst = max(worst, float(np.max(np.abs(fd - np.asarray(self.velocity(t))))))
        if worst > tol:
            raise ValueError(f"velocity disagrees with finite differences by {worst:.3e}")
        return worst


def curve_pullback_frame(chart: Chart, curve: Curve, t: float):
    """Point, unit tangent in orthonormal frame coordinates, and speed at t."""
    p = np.asarray(curve.point(t), dtype=float).reshape(-1)
    v = np.asarray(curve.velocity(t), dtype=float).reshape(-1)
    F = chart.vector_frame(p[None, :])[0]
    v_on = F @ v
    speed = float(np.linalg.norm(v_on))
    if speed == 0.0:
        raise ValueError(f"zero velocity at t={t}")
    return p, v_on / speed, speed


def cubic_table_curve(chart: Chart, knots, coeffs) -> Curve:
    """Piecewise-cubic curve from a coefficient table.

    ``knots`` is an increasing array t_0 < ... < t_S spanning [0, 1] and
    ``coeffs`` has shape (S, dim, 4): on [t_s, t_{s+1}] the j-th coordinate
    is sum_r coeffs[s, j, r] * (t - t_s)^r.
    """
    knots = np.asarray(knots, dtype=float)
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape[0] != knots.shape[0] - 1 or coeffs.shape[1] != chart.dim:
        raise ValueError("coefficient table does not match knots/chart")

    def locate(t):
        s = int(np.clip(np.searchsorted(knots, t, side="right") - 1, 0, len(knots) - 2))
        return s, t - knots[s]

    def point(t):
        s, dt = locate(t)
        powers = np.array([1.0, dt, dt * dt, dt**3])
        return coeffs[s] @ powers

    def velocity(t):
        s, dt = locate(t)
        powers = np.array([0.0, 1.0, 2.0 * dt, 3.0 * dt * dt])
        return coeffs[s] @ powers

    return Curve(chart=chart, point=point, velocity=velocity)


def sphere_arc(chart: Chart, length: float, kind: str = "equator", colatitude: float = pi / 2) -> Curve:
    """Stock arcs on the sphere chart: equator, meridian, or a small circle.

    ``length`` is the Riemannian arc length; small circles at colatitude c
    sweep an azimuth range length / sin(c).
    """
    if kind == "equator":
        return Curve(
            chart=chart,
            point=lambda t: np.array([pi / 2.0, length * t]),
            velocity=lambda t: np.array([0.0, length]),
        )
    if kind == "meridian":
        if length > pi - 0.2:
            raise ValueError("meridian arcs must stay away from the poles")
        start = (pi - length) / 2.0
        return Curve(
            chart=chart,
            point=lambda t: np.array([start + length * t, 0.0]),
            velocity=lambda t: np.array([length, 0.0]),
        )
    if kind == "small_circle":
        dphi = length / np.sin(colatitude)
        return Curve(
            chart=chart,
            point=lambda t: np.array([colatitude, dphi * t]),
            velocity=lambda t: np.array([0.0, dphi]),
        )
    raise ValueError(f"unknown arc kind {kind!r}")


def torus_line(chart: Chart, start, direction) -> Curve:
    start = np.asarray(start, dtype=float)
    direction = np.asarray(direction, dtype=float)
    return Curve(
        chart=chart,
        point=lambda t: start + t * direction,
        velocity=lambda t: direction.copy(),
    )


def interval_segment(chart: Chart, a: float, b: float) -> Curve:
    return Curve(
        chart=chart,
        point=lambda t: np.array([a + (b - a) * t]),
        velocity=lambda t: np.array([b - a]),
    )


# -- surfaces (for volume Crofton checks in 3-manifolds) --------------------

@dataclass(frozen=True)
class Surface:
    """Parameterized 2-surface (s, t) in [0,1]^2 -> chart coordinates."""

    chart: Chart
    point: Callable[[float, float], np.ndarray]
    partials: Callable[[float, float], np.ndarray]  # (dim, 2) Jacobian

    def quadrature(self, ns: int = 8, nt: int = 8) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Midpoint nodes, their chart points and induced area weights."""
        s = (np.arange(ns) + 0.5) / ns
        t = (np.arange(nt) + 0.5) / nt
        S, T = np.meshgrid(s, t, indexing="ij")
        st = np.column_stack([S.reshape(-1), T.reshape(-1)])
        pts = np.array([self.point(a, b) for a, b in st])
        jacs = np.array([self.partials(a, b) for a, b in st])
        g = self.chart.metric(pts)
        gram = np.einsum("nia,nij,njb->nab", jacs, g, jacs)
        areas = np.sqrt(np.linalg.det(gram)) / (ns * nt)
        return st, pts, areas
