"""Independent Monte Carlo oracle: locate and count zeros of sampled fields.

Nothing here touches the zonotope machinery.  Fields are sampled from their
coefficient law, zero sets are located by sign scanning plus bisection (1D),
cell screening plus Newton polishing (2D point counting) or marching squares
(2D level curves), and the per-trial statistics aggregate into a report that
the Kac-Rice predictions are tested against.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import pi, sqrt
from typing import Callable, Optional

import numpy as np

from .manifolds import Chart, Curve
from .rng import generator

__all__ = [
    "CountReport",
    "count_zeros_1d",
    "count_zeros_2d",
    "measure_zero_length_2d",
]

BISECT_TOL = 1e-12
NEWTON_TOL = 1e-10
DEDUP_1D = 1e-9
DEDUP_2D = 1e-6
COND_CAP = 1e8


@dataclass(frozen=True)
class CountReport:
    """Aggregated per-trial statistics of a zero-counting experiment."""

    trials: int
    mean: float
    variance: float
    standard_error: float
    mode: str
    warnings: dict = field(default_factory=dict)
    counts: Optional[np.ndarray] = None

    @staticmethod
    def from_counts(values: np.ndarray, mode: str, warnings: dict, keep: bool) -> "CountReport":
        values = np.asarray(values, dtype=float)
        n = values.shape[0]
        var = float(np.var(values, ddof=1)) if n > 1 else 0.0
        return CountReport(
            trials=n,
            mean=float(values.mean()),
            variance=var,
            standard_error=sqrt(var / n) if n else 0.0,
            mode=mode,
            warnings=warnings,
            counts=values.copy() if keep else None,
        )

    def to_json_dict(self) -> dict:
        doc = {
            "trials": self.trials,
            "mean": self.mean,
            "variance": self.variance,
            "standard_error": self.standard_error,
            "mode": self.mode,
            "warnings": self.warnings,
        }
        if self.counts is not None:
            doc["counts"] = self.counts.tolist()
        return doc


def _run_trials(trials: int, worker: Callable[[int], float], threads: int = 1) -> np.ndarray:
    out = np.empty(trials)
    if threads <= 1:
        for t in range(trials):
            out[t] = worker(t)
        return out
    with ThreadPoolExecutor(max_workers=threads) as pool:
        for t, val in zip(range(trials), pool.map(worker, range(trials))):
            out[t] = val
    return out


# -- 1D domains ---------------------------------------------------------------

class _Domain1D:
    """Common view of circles, intervals and curves for the 1D counter."""

    def __init__(self, chart_or_curve, closed: Optional[bool] = None):
        if isinstance(chart_or_curve, Curve):
            curve = chart_or_curve
            self.points = lambda ts: np.array([curve.point(float(t)) for t in ts])
            self.velocity = lambda ts: np.array([curve.velocity(float(t)) for t in ts])
            self.lo, self.hi = 0.0, 1.0
            if closed is None:
                closed = curve.chart.distance(curve.point(0.0), curve.point(1.0)) < 1e-9
            self.closed = closed
        else:
            chart: Chart = chart_or_curve
            if chart.dim != 1:
                raise ValueError("1D counting needs a 1-dimensional chart or a curve")
            self.points = lambda ts: np.asarray(ts, dtype=float)[:, None]
            self.velocity = lambda ts: np.ones((len(ts), 1))
            self.lo, self.hi = float(chart.lo[0]), float(chart.hi[0])
            self.closed = bool(chart.periodic[0])


def count_zeros_1d(
    model,
    domain,
    trials: int,
    seed: int,
    grid_n: int = 256,
    mode: str = "count",
    weight_fn: Optional[Callable] = None,
    stream: int = 1,
    keep_trials: bool = False,
    threads: int = 1,
) -> CountReport:
    """Count zeros of the scalar field along a 1D domain, trial by trial.

    A sign scan on ``grid_n`` cells brackets the zeros, bisection refines
    them to 1e-12 in the parameter and near-duplicates merge within 1e-9.
    Modes: plain count, signed count (sign of the derivative along the
    domain), or weighted count via ``weight_fn(t, point, slope)``.
    """
    if model.k != 1:
        raise ValueError("1D zero counting needs a scalar model")
    if mode not in ("count", "signed", "weighted"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "weighted" and weight_fn is None:
        raise ValueError("weighted mode needs a weight function")
    dom = _Domain1D(domain)
    if dom.closed:
        ts = np.linspace(dom.lo, dom.hi, grid_n, endpoint=False)
    else:
        ts = np.linspace(dom.lo, dom.hi, grid_n + 1)
    grid_pts = dom.points(ts)
    evaluate = model.value_evaluator(grid_pts)
    span = dom.hi - dom.lo
    warn = {"under_resolved": 0}

    def zeros_of(c) -> np.ndarray:
        vals = evaluate(c)[:, 0]
        if dom.closed:
            nxt = np.roll(vals, -1)
            t_hi = np.concatenate([ts[1:], [dom.hi]])
        else:
            nxt = vals[1:]
            t_hi = ts[1:]
            vals = vals[:-1]
        bracket = np.sign(vals) * np.sign(nxt) < 0
        idx = np.nonzero(bracket)[0]
        if idx.size > 1 and np.any(np.diff(idx) == 1):
            warn["under_resolved"] += int(np.sum(np.diff(idx) == 1))
        if idx.size == 0:
            return np.zeros(0)
        lo = ts[idx].copy()
        hi = t_hi[idx].copy()
        flo = vals[idx].copy()
        for _ in range(64):
            mid = 0.5 * (lo + hi)
            fmid = model.evaluate(dom.points(mid), c)[:, 0]
            left = flo * fmid > 0
            lo = np.where(left, mid, lo)
            flo = np.where(left, fmid, flo)
            hi = np.where(left, hi, mid)
            if np.max(hi - lo) < BISECT_TOL:
                break
        roots = 0.5 * (lo + hi)
        roots = np.sort(roots)
        if roots.size > 1:
            keep = np.concatenate([[True], np.diff(roots) > DEDUP_1D])
            roots = roots[keep]
        if dom.closed and roots.size > 1 and (roots[-1] - roots[0]) > span - DEDUP_1D:
            roots = roots[:-1]
        return roots

    def worker(trial: int) -> float:
        c = model.sample_field(generator(seed, stream, trial))
        roots = zeros_of(c)
        if mode == "count":
            return float(roots.size)
        if roots.size == 0:
            return 0.0
        pts = dom.points(roots)
        jac = model.jacobian(pts, c)  # (n, 1, d)
        vel = dom.velocity(roots)
        slopes = np.einsum("nd,nd->n", jac[:, 0, :], vel)
        if mode == "signed":
            return float(np.sum(np.sign(slopes)))
        return float(sum(weight_fn(t, p, s) for t, p, s in zip(roots, pts, slopes)))

    values = _run_trials(trials, worker, threads)
    return CountReport.from_counts(values, mode, warn, keep_trials)


# -- 2D point counting ----------------------------------------------------------

def _grid_2d(chart: Chart, grid_n: int):
    # half-cell offsets on periodic axes keep grid lines off the lattice
    # zeros of stock deterministic examples
    if chart.name == "sphere2":
        eps = pi / (4.0 * grid_n)
        xs = np.linspace(eps, pi - eps, grid_n + 1)
        hphi = 2.0 * pi / grid_n
        ys = np.arange(grid_n + 1) * hphi + 0.5 * hphi
    else:
        hx = (chart.hi[0] - chart.lo[0]) / grid_n
        hy = (chart.hi[1] - chart.lo[1]) / grid_n
        ox = 0.5 * hx if chart.periodic[0] else 0.0
        oy = 0.5 * hy if chart.periodic[1] else 0.0
        xs = chart.lo[0] + ox + np.arange(grid_n + 1) * hx
        ys = chart.lo[1] + oy + np.arange(grid_n + 1) * hy
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    return xs, ys, np.column_stack([X.reshape(-1), Y.reshape(-1)])


def _dedup_points(chart: Chart, pts: list, radius: float) -> list:
    out = []
    for p in pts:
        if all(chart.distance(p, q) > radius for q in out):
            out.append(p)
    return out


def count_zeros_2d(
    model,
    chart: Chart,
    trials: int,
    seed: int,
    grid_n: int = 48,
    stream: int = 2,
    keep_trials: bool = False,
    threads: int = 1,
) -> CountReport:
    """Count common zeros of a two-component field on a 2D chart.

    Cells where both components change sign seed Newton iterations from the
    cell center; diverging cells are subdivided once and then flagged, and
    converged roots deduplicate within an embedding distance of 1e-6.
    Ill-conditioned Jacobians increment a transversality warning counter.
    """
    if model.k != 2:
        raise ValueError("2D point counting needs a two-component model")
    xs, ys, grid_pts = _grid_2d(chart, grid_n)
    evaluate = model.value_evaluator(grid_pts)
    nx, ny = xs.size, ys.size
    hx = xs[1] - xs[0]
    hy = ys[1] - ys[0]
    # generous step cap: Newton may legitimately travel to a distant zero,
    # and deduplication absorbs repeated finds
    max_step = 0.5 * max(xs[-1] - xs[0], ys[-1] - ys[0])
    warn = {"newton_flagged": 0, "ill_conditioned": 0}

    def newton(c, starts):
        pts = np.asarray(starts, dtype=float)
        if pts.size == 0:
            return np.zeros((0, 2)), np.zeros(0, dtype=bool)
        alive = np.ones(pts.shape[0], dtype=bool)
        for _ in range(40):
            vals, jacs = model.jet_evaluator(pts)(c)
            try:
                steps = np.linalg.solve(jacs, vals[:, :, None])[:, :, 0]
            except np.linalg.LinAlgError:
                steps = np.array([np.linalg.lstsq(j, v, rcond=None)[0] for j, v in zip(jacs, vals)])
            bad = ~np.isfinite(steps).all(axis=1) | (np.linalg.norm(steps, axis=1) > max_step)
            alive &= ~bad
            steps[~alive] = 0.0
            pts = pts - steps
            if not alive.any() or np.max(np.linalg.norm(steps[alive], axis=1)) < NEWTON_TOL:
                break
        vals, jacs = model.jet_evaluator(pts)(c)
        resid = np.linalg.norm(vals, axis=1)
        good = alive & (resid < 1e-8)
        conds = np.linalg.cond(jacs[good]) if good.any() else np.zeros(0)
        warn["ill_conditioned"] += int(np.sum(conds > COND_CAP))
        return pts[good], ~good

    def worker(trial: int) -> float:
        c = model.sample_field(generator(seed, stream, trial))
        V = evaluate(c).reshape(nx, ny, 2)
        a, b = V[:-1, :-1], V[1:, :-1]
        d, e = V[:-1, 1:], V[1:, 1:]
        corner_stack = np.stack([a, b, d, e])
        has_both = np.ones((nx - 1, ny - 1), dtype=bool)
        for comp in range(2):
            mn = corner_stack[..., comp].min(axis=0)
            mx = corner_stack[..., comp].max(axis=0)
            has_both &= (mn < 0) & (mx > 0)
        ii, jj = np.nonzero(has_both)
        starts = np.column_stack([0.5 * (xs[ii] + xs[ii + 1]), 0.5 * (ys[jj] + ys[jj + 1])])
        roots, failed = newton(c, starts)
        if failed.any():
            # subdivide only the cells whose center start diverged, once
            subs = []
            for i, j in zip(ii[failed], jj[failed]):
                for dx in (0.25, 0.75):
                    for dy in (0.25, 0.75):
                        subs.append([xs[i] + dx * hx, ys[j] + dy * hy])
            roots2, failed2 = newton(c, np.asarray(subs))
            if roots2.size:
                roots = np.vstack([roots, roots2])
            # a cell is flagged when all four sub-starts still diverge
            warn["newton_flagged"] += int(np.sum(failed2.reshape(-1, 4).all(axis=1)))
        uniques = _dedup_points(chart, [chart.wrap(p[None, :])[0] for p in roots], DEDUP_2D)
        return float(len(uniques))

    values = _run_trials(trials, worker, threads)
    return CountReport.from_counts(values, "count", warn, keep_trials)


# -- 2D level-curve length -------------------------------------------------------

_EDGE_CORNERS = {  # edge id -> (corner pair) in cell-local indexing a,b,c,d
    0: (0, 1),  # bottom: (i,j)-(i+1,j), along x
    1: (1, 2),  # right:  (i+1,j)-(i+1,j+1), along y
    2: (3, 2),  # top:    (i,j+1)-(i+1,j+1), along x
    3: (0, 3),  # left:   (i,j)-(i,j+1), along y
}


def measure_zero_length_2d(
    model,
    chart: Chart,
    trials: int,
    seed: int,
    grid_n: int = 128,
    tangent_fn: Optional[Callable] = None,
    stream: int = 3,
    keep_trials: bool = False,
    threads: int = 1,
) -> CountReport:
    """Riemannian length of the zero level curve of a scalar field.

    Marching squares with linear interpolation on a ``grid_n`` grid; segment
    lengths use the metric at segment midpoints.  With ``tangent_fn`` the
    per-trial value becomes sum of length * fn(midpoint, unit tangent in
    orthonormal coordinates), an empirical varifold integral.
    """
    if model.k != 1:
        raise ValueError("level-curve length needs a scalar model")
    xs, ys, grid_pts = _grid_2d(chart, grid_n)
    evaluate = model.value_evaluator(grid_pts)
    nx, ny = xs.size, ys.size

    def worker(trial: int) -> float:
        c = model.sample_field(generator(seed, stream, trial))
        V = evaluate(c).reshape(nx, ny)
        corners = [V[:-1, :-1], V[1:, :-1], V[1:, 1:], V[:-1, 1:]]  # a, b, c, d
        crossings = {}
        fracs = {}
        for eid, (c0, c1) in _EDGE_CORNERS.items():
            v0, v1 = corners[c0], corners[c1]
            cross = np.sign(v0) * np.sign(v1) < 0
            with np.errstate(divide="ignore", invalid="ignore"):
                frac = np.where(cross, v0 / (v0 - v1), 0.0)
            crossings[eid] = cross
            fracs[eid] = frac
        ii, jj = np.nonzero(sum(crossings[e].astype(int) for e in range(4)) >= 2)
        total = 0.0
        if ii.size == 0:
            return 0.0
        hx, hy = xs[1] - xs[0], ys[1] - ys[0]
        seg_a, seg_b = [], []
        for i, j in zip(ii, jj):
            pts = []
            for eid in range(4):
                if not crossings[eid][i, j]:
                    continue
                f = fracs[eid][i, j]
                if eid == 0:
                    pts.append((xs[i] + f * hx, ys[j]))
                elif eid == 1:
                    pts.append((xs[i + 1], ys[j] + f * hy))
                elif eid == 2:
                    pts.append((xs[i] + f * hx, ys[j + 1]))
                else:
                    pts.append((xs[i], ys[j] + f * hy))
            if len(pts) == 2:
                seg_a.append(pts[0])
                seg_b.append(pts[1])
            elif len(pts) == 4:
                # saddle cell: pair crossings by the sign of the center average
                center = 0.25 * (corners[0][i, j] + corners[1][i, j] + corners[2][i, j] + corners[3][i, j])
                order = [(0, 1), (3, 2)] if center * corners[0][i, j] >= 0 else [(0, 3), (1, 2)]
                edges_present = [e for e in range(4) if crossings[e][i, j]]
                emap = {e: p for e, p in zip(edges_present, pts)}
                for e1, e2 in order:
                    seg_a.append(emap[e1])
                    seg_b.append(emap[e2])
        if not seg_a:
            return 0.0
        A = np.asarray(seg_a)
        B = np.asarray(seg_b)
        mids = 0.5 * (A + B)
        deltas = B - A
        g = chart.metric(mids)
        lengths = np.sqrt(np.einsum("ni,nij,nj->n", deltas, g, deltas))
        if tangent_fn is None:
            return float(lengths.sum())
        frames = chart.vector_frame(mids)
        dirs = np.einsum("nij,nj->ni", frames, deltas)
        norms = np.linalg.norm(dirs, axis=1)
        keep = norms > 0
        vals = np.array(
            [tangent_fn(m, d / n) for m, d, n in zip(mids[keep], dirs[keep], norms[keep])]
        )
        return float(np.dot(lengths[keep], vals))

    values = _run_trials(trials, worker, threads)
    return CountReport.from_counts(values, "length" if tangent_fn is None else "weighted", {}, keep_trials)
