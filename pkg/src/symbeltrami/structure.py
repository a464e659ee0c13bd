"""Level-set structure of the first integral of a symmetric Beltrami field.

For ``curl X = lam X`` and a Killing field ``Y`` with ``[Y, X] = 0`` the
function ``f = g(X, Y) / lam`` satisfies ``grad f = Y x X``, so it is
constant along the field lines of ``X`` and ``Y``. Away from the critical
values of ``f`` its level sets split into invariant tori on which ``X`` and
``Y`` are linearly independent. This module samples that picture:

* :func:`critical_scan` finds near-critical grid cells, clusters their
  values and marks the cells close to a critical level (the sampled
  singular set);
* :func:`level_components` flood-fills a level shell on a periodic grid and
  reports, per connected piece, ``min |X x Y|`` and the drift of ``f``
  along a few field lines;
* :func:`chamber_fibration` transports points along
  ``grad f / |grad f|^2``, along which ``f`` grows with unit speed.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import ndimage
from scipy.optimize import brentq

from . import chartcalc as cc
from . import fieldline as fl
from .chartcalc import ChartedField, FlatTorus3, PointField, RoundSphere3
from .errors import PreconditionError, SeedRejected
from .spectral import SpectralField, cross_const, dot_const, grad_spec

SCHEMA = "symbeltrami.structure_report/1"
DEFAULT_REL_GRAD = 1e-3
DEFAULT_REL_LEVEL = 1e-3
DEFAULT_REL_CLUSTER = 1e-2


# ---------------------------------------------------------------------------
# scalar helpers


class _Scalar:
    """Vectorised value and metric gradient of a scalar field on a model."""

    def __init__(self, model, f, cfg: cc.FDConfig = cc.DEFAULT_FD):
        self.model = model
        self.f = f
        self.cfg = cfg

    def value(self, p, chart=None):
        p = np.asarray(p, dtype=float)
        if isinstance(self.f, SpectralField):
            return self.f(p)
        if callable(self.f) and not isinstance(self.f, (PointField, ChartedField)):
            return np.asarray(self.f(p), dtype=float)
        m = self._chart_model(chart)
        q = m.wrap(p) if isinstance(m, FlatTorus3) and cc.field_on(self.f, m).domain is None else p
        return cc.evaluate(m, self.f, q)

    def grad(self, p, chart=None):
        p = np.asarray(p, dtype=float)
        if isinstance(self.f, SpectralField):
            return self.f.jacobian(p)
        m = self._chart_model(chart)
        q = m.wrap(p) if isinstance(m, FlatTorus3) and cc.field_on(self.f, m).domain is None else p
        return cc.grad(m, self.f, q, self.cfg)

    def grad_norm(self, p, chart=None):
        m = self._chart_model(chart)
        return cc.norm(m, np.asarray(p, float), self.grad(p, chart))

    def _chart_model(self, chart):
        if chart is None or not isinstance(self.model, RoundSphere3):
            return self.model
        return RoundSphere3(chart)


# ---------------------------------------------------------------------------
# first integral


@dataclass(frozen=True)
class FirstIntegral:
    """``f = g(X, Y) / lam`` together with its gradient-identity check."""

    f: object
    lam: float
    model: object = field(repr=False)
    X: object = field(repr=False)
    Y: object = field(repr=False)

    def gradient_residual(self, points=None, cfg: cc.FDConfig = cc.DEFAULT_FD) -> float:
        """``max |grad f - Y x X|``; exact coefficient bound for spectral fields."""
        if isinstance(self.f, SpectralField):
            v = np.asarray(self.Y, dtype=float)
            diff = grad_spec(self.f) - cross_const(v, self.X)
            return float(np.sum(np.abs(diff.coeffs)))
        if points is None:
            raise ValueError("points are required for pointwise fields")
        p = cc.as_points(points)
        m = self.model
        Yv, Xv = cc.evaluate(m, self.Y, p), cc.evaluate(m, self.X, p)
        return float(np.max(np.abs(cc.grad(m, self.f, p, cfg) - cc.cross(m, p, Yv, Xv))))


def first_integral_of_pair(model, X, Y, lam: float) -> FirstIntegral:
    """``f = g(X, Y) / lam``.

    Args:
        model: manifold model.
        X: Beltrami field with ``curl X = lam X``; spectral on the torus or
            a point/charted field.
        Y: Killing field commuting with ``X``; a constant vector when ``X``
            is spectral.
        lam: the curl eigenvalue (non-zero).
    """
    if lam == 0:
        raise PreconditionError("lam must be non-zero")
    if isinstance(X, SpectralField):
        v = np.asarray(Y.func(np.zeros((1, 3)))[0] if isinstance(Y, PointField) else Y, dtype=float)
        return FirstIntegral(dot_const(v, X) / lam, float(lam), model, X, v)

    def build(m, Xpf, Ypf):
        return PointField(
            lambda p: cc.inner(m, p, Xpf(p), Ypf(p)) / lam, rank=0, domain=Xpf.domain, name="g(X,Y)/lam"
        )

    if isinstance(X, ChartedField) or isinstance(Y, ChartedField):
        charts = sorted((X if isinstance(X, ChartedField) else Y).fields)
        pieces = {}
        for ch in charts:
            m = RoundSphere3(ch) if isinstance(model, RoundSphere3) else model
            pieces[ch] = build(m, cc.field_on(X, m), cc.field_on(Y, m))
        f = ChartedField(pieces, name="g(X,Y)/lam")
    else:
        f = build(model, X, Y)
    return FirstIntegral(f, float(lam), model, X, Y)


# ---------------------------------------------------------------------------
# scan grids


@dataclass(frozen=True)
class ScanGrid:
    """Sample nodes for a scan.

    On the torus: ``n^3`` nodes ``i / n``, periodic. On the sphere: an
    ``n^3`` grid of ``[-1, 1]^3`` in each chart; nodes with ``|u| <= 1``
    cover the sphere exactly once up to the equator ``x4 = 0``.
    """

    model: object
    n: int
    charts: tuple[str, ...]
    points: np.ndarray = field(repr=False)  # (C, n, n, n, 3)
    valid: np.ndarray = field(repr=False)  # (C, n, n, n)

    @property
    def periodic(self) -> bool:
        return isinstance(self.model, FlatTorus3)

    @property
    def spacing(self) -> float:
        return 1.0 / self.n if self.periodic else 2.0 / (self.n - 1)


def make_grid(model, n: int) -> ScanGrid:
    if n < 2:
        raise ValueError("grid needs at least 2 nodes per axis")
    if isinstance(model, FlatTorus3):
        axes = [np.arange(n) * (L / n) for L in model.L]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)[None]
        return ScanGrid(model, n, ("torus",), pts, np.ones(pts.shape[:-1], bool))
    r = np.linspace(-1.0, 1.0, n)
    one = np.stack(np.meshgrid(r, r, r, indexing="ij"), axis=-1)
    pts = np.stack([one, one])
    valid = np.sum(pts * pts, axis=-1) <= 1.0 + 1e-12
    return ScanGrid(model, n, ("north", "south"), pts, valid)


# ---------------------------------------------------------------------------
# critical scan


@dataclass(frozen=True)
class Thresholds:
    eps_grad: float
    delta_level: float
    delta_cluster: float

    def to_dict(self) -> dict:
        return {"eps_grad": self.eps_grad, "delta_level": self.delta_level, "delta_cluster": self.delta_cluster}


@dataclass(frozen=True)
class CriticalScan:
    """Sampled critical data of ``f`` on a grid.

    Attributes:
        critical_values: one value per cluster of near-critical cells.
        gamma_mask: cells with ``f`` within ``delta_level`` of a critical value,
            shape ``(C, n, n, n)`` (``C`` charts).
        critical_mask: cells with ``|grad f| < eps_grad``.
        values, grad_norms: sampled ``f`` and ``|grad f|_g``.
        degenerate: ``f`` is constant (``X`` and ``Y`` collinear everywhere).
    """

    grid: ScanGrid = field(repr=False)
    thresholds: Thresholds
    critical_values: tuple[float, ...]
    gamma_mask: np.ndarray = field(repr=False)
    critical_mask: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    grad_norms: np.ndarray = field(repr=False)
    degenerate: bool = False
    warnings: tuple[str, ...] = ()

    @property
    def gamma_count(self) -> int:
        return int(np.count_nonzero(self.gamma_mask & self.grid.valid))

    @property
    def f_range(self) -> tuple[float, float]:
        v = self.values[self.grid.valid]
        return float(v.min()), float(v.max())


def _sample(scalar: _Scalar, grid: ScanGrid, batch: int = 1 << 16):
    vals = np.zeros(grid.points.shape[:-1])
    gn = np.zeros(grid.points.shape[:-1])
    for c, chart in enumerate(grid.charts):
        flat = grid.points[c].reshape(-1, 3)
        ok = grid.valid[c].reshape(-1)
        v = np.zeros(len(flat))
        g = np.zeros(len(flat))
        idx = np.nonzero(ok)[0]
        for s in range(0, len(idx), batch):
            sel = idx[s : s + batch]
            v[sel] = scalar.value(flat[sel], chart)
            g[sel] = scalar.grad_norm(flat[sel], chart)
        vals[c] = v.reshape(grid.points.shape[1:-1])
        gn[c] = g.reshape(grid.points.shape[1:-1])
    return vals, gn


def _cluster(values: np.ndarray, grads: np.ndarray, gap: float) -> list[float]:
    if len(values) == 0:
        return []
    order = np.argsort(values, kind="stable")
    v, g = values[order], grads[order]
    breaks = np.nonzero(np.diff(v) > gap)[0] + 1
    out = []
    for chunk in np.split(np.arange(len(v)), breaks):
        best = chunk[int(np.argmin(g[chunk]))]
        out.append(float(v[best]))
    return out


def critical_scan(
    f,
    grid_n: int = 64,
    eps_grad: float | None = None,
    delta_level: float | None = None,
    delta_cluster: float | None = None,
    model=None,
    cfg: cc.FDConfig = cc.DEFAULT_FD,
) -> CriticalScan:
    """Locate near-critical cells of ``f`` and the sampled singular set.

    Threshold defaults scale with the data: ``eps_grad = 1e-3 max|grad f|``,
    ``delta_level = 1e-3 range(f)``, ``delta_cluster = 1e-2 range(f)``.

    Args:
        f: scalar field (spectral, point or charted).
        grid_n: nodes per axis.
        eps_grad, delta_level, delta_cluster: absolute thresholds.
        model: manifold model (the flat torus when omitted).
        cfg: finite-difference settings for fields without derivatives.
    """
    model = FlatTorus3() if model is None else model
    grid = make_grid(model, grid_n)
    vals, gn = _sample(_Scalar(model, f, cfg), grid)
    valid = grid.valid
    vrange = float(vals[valid].max() - vals[valid].min())
    gmax = float(gn[valid].max())
    scale = max(1.0, float(np.max(np.abs(vals[valid]))))
    if vrange <= 1e-13 * scale:
        th = Thresholds(eps_grad or 0.0, delta_level or 0.0, delta_cluster or 0.0)
        msg = "f is constant on the grid: X and Y are collinear everywhere, no level structure"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        return CriticalScan(grid, th, (float(vals[valid][0]),), valid.copy(), valid.copy(), vals, gn, True, (msg,))
    th = Thresholds(
        DEFAULT_REL_GRAD * gmax if eps_grad is None else float(eps_grad),
        DEFAULT_REL_LEVEL * vrange if delta_level is None else float(delta_level),
        DEFAULT_REL_CLUSTER * vrange if delta_cluster is None else float(delta_cluster),
    )
    crit = (gn < th.eps_grad) & valid
    cvals = _cluster(vals[crit], gn[crit], th.delta_cluster)
    gamma = np.zeros_like(valid)
    for c in cvals:
        gamma |= np.abs(vals - c) < th.delta_level
    gamma &= valid
    return CriticalScan(grid, th, tuple(cvals), gamma, crit, vals, gn)


# ---------------------------------------------------------------------------
# level components


@dataclass(frozen=True)
class ComponentRecord:
    """One connected piece of a regular level set.

    ``min_cross`` is the smallest ``|X x Y|_g`` over the projected samples,
    ``drift`` the largest ``|f - c|`` met along field lines started from up
    to five samples, ``f_variation`` the largest ``|f - c|`` over the
    projected samples.
    """

    level: float
    label: int
    seed: np.ndarray
    n_cells: int
    n_samples: int
    min_cross: float
    drift: float
    f_variation: float
    samples: np.ndarray = field(repr=False, default=None)

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "label": self.label,
            "seed": [float(x) for x in self.seed],
            "n_cells": self.n_cells,
            "n_samples": self.n_samples,
            "min_cross": self.min_cross,
            "drift": self.drift,
            "f_variation": self.f_variation,
        }


def _periodic_label(shell: np.ndarray) -> tuple[np.ndarray, int]:
    """6-connected labels of a periodic boolean grid, relabelled 1..n in scan order."""
    lab, n = ndimage.label(shell)
    if n == 0:
        return lab, 0
    parent = list(range(n + 1))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for ax in range(3):
        first = np.take(lab, 0, axis=ax)
        last = np.take(lab, -1, axis=ax)
        both = (first > 0) & (last > 0)
        for a, b in zip(first[both].tolist(), last[both].tolist()):
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
    roots = np.array([find(i) for i in range(n + 1)])
    merged = roots[lab]
    # relabel in order of first appearance
    uniq, first_idx = np.unique(merged.reshape(-1), return_index=True)
    order = [u for _, u in sorted(zip(first_idx, uniq)) if u != 0]
    remap = np.zeros(n + 1, dtype=np.int64)
    for new, old in enumerate(order, start=1):
        remap[old] = new
    return remap[merged], len(order)


def level_shell(scan: CriticalScan, c: float) -> np.ndarray:
    """Nodes with ``|f - c| < delta_level`` or a sign change of ``f - c`` to a 6-neighbour."""
    if not scan.grid.periodic:
        raise PreconditionError("level components are computed on the periodic torus grid")
    d = scan.values[0] - c
    shell = np.abs(d) < scan.thresholds.delta_level
    for ax in range(3):
        nb = np.roll(d, -1, axis=ax)
        change = np.signbit(d) != np.signbit(nb)
        shell |= change | np.roll(change, 1, axis=ax)
    return shell


def _project(scalar: _Scalar, p: np.ndarray, c: float, eps_grad: float, iters: int = 30):
    """Newton steps along ``grad f`` onto ``f = c``; returns points and a usable mask."""
    p = np.array(p, dtype=float)
    ok = np.ones(len(p), dtype=bool)
    for _ in range(iters):
        g = scalar.grad(p)
        g2 = np.sum(g * g, axis=-1)
        ok &= np.sqrt(g2) > eps_grad
        r = scalar.value(p) - c
        step = np.where(ok, r / np.where(ok, g2, 1.0), 0.0)
        p = p - step[:, None] * g
        if np.all(np.abs(r[ok]) < 1e-14):
            break
    return p, ok


def _component_record(
    scan, scalar, model, X, Y, c, label, nodes, seed, n_drift, arc, tol
) -> ComponentRecord:
    eps = scan.thresholds.eps_grad
    seed_p, seed_ok = _project(scalar, seed[None, :], c, eps)
    cand, ok = _project(scalar, nodes, c, eps)
    samples = np.concatenate([seed_p[seed_ok], cand[ok]])
    if len(samples) == 0:
        raise SeedRejected("no regular sample on the component")
    Xv = _eval_vector(model, X, samples)
    Yv = _eval_vector(model, Y, samples)
    cross = cc.norm(model, samples, cc.cross(model, samples, Xv, Yv))
    fvar = float(np.max(np.abs(scalar.value(samples) - c)))
    picks = samples[np.unique(np.linspace(0, len(samples) - 1, min(n_drift, len(samples))).astype(int))]
    drift = 0.0
    for q in picks:
        tr = fl.integrate(model, X, q, arc, tol=tol, arc_length=True)
        drift = max(drift, float(np.max(np.abs(scalar.value(tr.unwrapped) - c))))
    return ComponentRecord(
        float(c), int(label), samples[0], int(len(nodes)), int(len(samples)), float(np.min(cross)), drift, fvar, samples
    )


def _eval_vector(model, V, p):
    if isinstance(V, SpectralField):
        return V(p)
    V = np.asarray(V, dtype=float) if not isinstance(V, (PointField, ChartedField)) else V
    if isinstance(V, np.ndarray):
        return np.broadcast_to(V, p.shape).copy()
    return cc.evaluate(model, V, model.wrap(p) if isinstance(model, FlatTorus3) and cc.field_on(V, model).domain is None else p)


def level_components(
    scan: CriticalScan,
    f,
    X,
    Y,
    c: float,
    n_drift: int = 5,
    arc: float = 100.0,
    tol: float = fl.DEFAULT_TOL,
) -> list[ComponentRecord]:
    """All connected components of the level ``f = c`` on the scan grid."""
    model = scan.grid.model
    scalar = _Scalar(model, f)
    shell = level_shell(scan, c)
    labels, n = _periodic_label(shell)
    pts = scan.grid.points[0]
    out = []
    for lab in range(1, n + 1):
        nodes = pts[labels == lab]
        gn = scan.grad_norms[0][labels == lab]
        seed = nodes[int(np.argmax(gn))]
        out.append(_component_record(scan, scalar, model, X, Y, c, lab, nodes, seed, n_drift, arc, tol))
    return out


def level_component(
    scan: CriticalScan,
    f,
    X,
    Y,
    c: float,
    seed,
    n_drift: int = 5,
    arc: float = 100.0,
    tol: float = fl.DEFAULT_TOL,
) -> ComponentRecord:
    """The component of ``f = c`` through ``seed``.

    Raises:
        SeedRejected: ``|f(seed) - c| >= delta_level``, ``|grad f(seed)| <= eps_grad``,
            or the seed is not next to the sampled level shell.
    """
    model = scan.grid.model
    scalar = _Scalar(model, f)
    seed = cc.as_points(seed).reshape(3)
    th = scan.thresholds
    if abs(float(scalar.value(seed[None])[0]) - c) >= th.delta_level:
        raise SeedRejected(f"seed is not on the level f = {c}")
    if float(scalar.grad_norm(seed[None])[0]) <= th.eps_grad:
        raise SeedRejected("seed is (near) critical: |grad f| <= eps_grad")
    shell = level_shell(scan, c)
    labels, _ = _periodic_label(shell)
    n = scan.grid.n
    base = np.rint(np.asarray(model.wrap(seed[None])[0]) * n).astype(int)
    label = 0
    # nearest shell node among the 27 cells around the seed
    best = np.inf
    for off in np.ndindex(3, 3, 3):
        idx = tuple((base + np.array(off) - 1) % n)
        node = scan.grid.points[0][idx]
        d = np.linalg.norm(((node - seed + 0.5) % 1.0) - 0.5)
        if labels[idx] and d < best:
            best, label = d, int(labels[idx])
    if label == 0:
        raise SeedRejected("seed is not adjacent to the sampled level shell")
    nodes = scan.grid.points[0][labels == label]
    return _component_record(scan, scalar, model, X, Y, c, label, nodes, seed, n_drift, arc, tol)


# ---------------------------------------------------------------------------
# chamber fibration


@dataclass(frozen=True)
class ChamberRecord:
    """Transport of base points along ``grad f / |grad f|^2``.

    Attributes:
        base_points: starting points, all on one regular level.
        t_requested: the requested ``(t_lo, t_hi)``.
        t_reached: the common range actually reached; the flow is stopped
            where ``|grad f| < eps_grad``, so a truncated range locates the
            chamber boundary.
        truncated: whether each end was cut short.
        t_eval: parameters at which the transported points are stored.
        transported: points ``psi(t, p)``, shape ``(m, len(t_eval), 3)``.
        linearity_residual: ``max |f(psi(t, p)) - t - f(p)|``.
        ring_spread: ``max_t (max_p f - min_p f)`` over the transported points.
        end_values: ``f`` at the reached ends for the first base point.
    """

    base_points: np.ndarray
    t_requested: tuple[float, float]
    t_reached: tuple[float, float]
    truncated: tuple[bool, bool]
    t_eval: np.ndarray
    transported: np.ndarray = field(repr=False)
    linearity_residual: float = 0.0
    ring_spread: float = 0.0
    end_values: tuple[float, float] = (float("nan"), float("nan"))

    def to_dict(self) -> dict:
        return {
            "base_points": self.base_points.tolist(),
            "t_requested": list(self.t_requested),
            "t_reached": list(self.t_reached),
            "truncated": list(self.truncated),
            "linearity_residual": self.linearity_residual,
            "ring_spread": self.ring_spread,
            "end_values": list(self.end_values),
        }


def _transport_one(model, scalar, p, t_target, eps_grad, tol, max_step):
    """One-sided transport; returns (steps, reached t, truncated)."""
    sign = 1.0 if t_target > 0 else -1.0

    def field_(q):
        g = scalar.grad(q)
        g2 = np.sum(g * g, axis=-1, keepdims=True)
        return sign * g / np.maximum(g2, 1e-300)

    st = fl.DormandPrince(model, field_, p, tol=tol, max_step=max_step)
    steps = []
    limit = abs(t_target)
    while st.t < limit - 1e-14 * max(1.0, limit):
        step = st.step(limit)
        gend = float(scalar.grad_norm(step.y1[None, :3])[0])
        if gend < eps_grad:
            def h(theta):
                return float(scalar.grad_norm(fl.dense_state(step, theta)[None, :3])[0]) - eps_grad

            theta = brentq(h, 0.0, 1.0, xtol=1e-12) if h(0.0) > 0 else 0.0
            steps.append((step, theta))
            return steps, sign * (step.t0 + theta * step.h), True
        steps.append((step, 1.0))
    return steps, sign * st.t, False


def _dense_at(steps, t_abs):
    """Point at flow parameter ``t_abs`` (non-negative, one-sided)."""
    for step, theta in steps:
        if t_abs <= step.t0 + theta * step.h + 1e-15:
            local = (t_abs - step.t0) / step.h
            return fl.dense_state(step, min(max(local, 0.0), 1.0))[:3]
    step, theta = steps[-1]
    return fl.dense_state(step, theta)[:3]


def chamber_fibration(
    model,
    f,
    base_points,
    t_span: tuple[float, float] = (-0.1, 0.1),
    eps_grad: float | None = None,
    n_eval: int = 21,
    tol: float = fl.DEFAULT_TOL,
    max_step: float = 0.01,
) -> ChamberRecord:
    """Transport points along ``grad f / |grad f|^2`` so that ``f`` grows at unit rate.

    Args:
        model: the flat torus or a chart model.
        f: scalar field.
        base_points: ``(m, 3)`` points on one regular level (or a single point).
        t_span: requested ``(t_lo, t_hi)`` with ``t_lo <= 0 <= t_hi``.
        eps_grad: the flow stops where ``|grad f|`` drops below this value.
        n_eval: number of stored parameters across the reached range.
    """
    lo, hi = float(t_span[0]), float(t_span[1])
    if not lo <= 0.0 <= hi:
        raise ValueError("t_span must contain 0")
    scalar = _Scalar(model, f)
    P = cc.as_points(base_points).reshape(-1, 3)
    if eps_grad is None:
        eps_grad = 0.0
    if np.any(scalar.grad_norm(P) <= eps_grad):
        raise SeedRejected("base point is (near) critical")
    runs = []
    reach_lo, reach_hi, cut_lo, cut_hi = lo, hi, False, False
    for p in P:
        fwd = _transport_one(model, scalar, p, hi, eps_grad, tol, max_step) if hi > 0 else ([], 0.0, False)
        bwd = _transport_one(model, scalar, p, lo, eps_grad, tol, max_step) if lo < 0 else ([], 0.0, False)
        runs.append((fwd, bwd))
        reach_hi, cut_hi = min(reach_hi, fwd[1]), cut_hi or fwd[2]
        reach_lo, cut_lo = max(reach_lo, bwd[1]), cut_lo or bwd[2]
    t_eval = np.linspace(reach_lo, reach_hi, n_eval)
    pts = np.empty((len(P), n_eval, 3))
    for i, (p, (fwd, bwd)) in enumerate(zip(P, runs)):
        for j, t in enumerate(t_eval):
            if t > 0:
                pts[i, j] = _dense_at(fwd[0], t)
            elif t < 0:
                pts[i, j] = _dense_at(bwd[0], -t)
            else:
                pts[i, j] = p
    fvals = scalar.value(pts.reshape(-1, 3)).reshape(len(P), n_eval)
    f0 = scalar.value(P)
    resid = float(np.max(np.abs(fvals - t_eval[None, :] - f0[:, None])))
    spread = float(np.max(np.ptp(fvals, axis=0)))
    ends = (float(fvals[0, 0]), float(fvals[0, -1]))
    return ChamberRecord(P, (lo, hi), (float(reach_lo), float(reach_hi)), (cut_lo, cut_hi), t_eval, pts, resid, spread, ends)


# ---------------------------------------------------------------------------
# report


@dataclass(frozen=True)
class StructureReport:
    """Everything a structure scan produced, ready for serialisation."""

    scan: CriticalScan
    components: tuple[ComponentRecord, ...] = ()
    chambers: tuple[ChamberRecord, ...] = ()
    gradient_residual: float | None = None

    @property
    def degenerate(self) -> bool:
        return self.scan.degenerate

    def to_dict(self) -> dict:
        s = self.scan
        out = {
            "schema": SCHEMA,
            "status": "DegenerateCollinear" if s.degenerate else "ok",
            "warnings": list(s.warnings),
            "grid": {"n": s.grid.n, "charts": list(s.grid.charts), "model": s.grid.model.to_dict()},
            "thresholds": s.thresholds.to_dict(),
            "cluster_note": "critical values are clusters of near-critical cells split at gaps larger than delta_cluster",
            "critical_values": list(s.critical_values),
            "gamma_cells": s.gamma_count,
            "total_cells": int(np.count_nonzero(s.grid.valid)),
            "f_range": list(s.f_range),
            "components": [c.to_dict() for c in self.components],
            "chambers": [c.to_dict() for c in self.chambers],
        }
        if self.gradient_residual is not None:
            out["gradient_residual"] = self.gradient_residual
        return out


def components_csv_rows(components: Sequence[ComponentRecord]):
    header = ["level", "label", "seed_x1", "seed_x2", "seed_x3", "n_cells", "n_samples", "min_cross", "drift", "f_variation"]
    rows = [
        [c.level, c.label, *[float(x) for x in c.seed], c.n_cells, c.n_samples, c.min_cross, c.drift, c.f_variation]
        for c in components
    ]
    return header, rows


def write_gamma_mask(scan: CriticalScan, path, extra: dict | None = None) -> None:
    """Raw byte mask (one byte per cell, C order) preceded by a JSON header line."""
    header = {
        "schema": "symbeltrami.gamma_mask/1",
        "shape": list(scan.gamma_mask.shape),
        "charts": list(scan.grid.charts),
        "thresholds": scan.thresholds.to_dict(),
        "critical_values": list(scan.critical_values),
        "order": "C",
    }
    if extra:
        header.update(extra)
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        fh.write(np.ascontiguousarray(scan.gamma_mask, dtype=np.uint8).tobytes())


def read_gamma_mask(path):
    with open(path, "rb") as fh:
        header = json.loads(fh.readline())
        data = np.frombuffer(fh.read(), dtype=np.uint8)
    return header, data.reshape(header["shape"]).astype(bool)
