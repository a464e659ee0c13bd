"""Pointwise Riemannian vector calculus in coordinate charts.

Two closed model manifolds are supported: the flat 3-torus and the round
3-sphere seen through stereographic charts. Every operation accepts a
single point of shape ``(3,)`` or a batch ``(..., 3)`` and broadcasts.

Derivatives of fields come from the field's closed-form Jacobian when it
ships one (and ``FDConfig.analytic`` is set), otherwise from central
differences. Metric derivatives are always closed form.

Orientation: in every chart the Levi-Civita symbol has ``eps[0, 1, 2] = +1``.
The south sphere chart is the north chart precomposed with the ambient
isometry ``(x1, x2, x3, x4) -> (x1, x2, -x3, -x4)`` so both charts induce the
same orientation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import DomainError

LEVI_CIVITA = np.zeros((3, 3, 3))
for _i, _j, _k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    LEVI_CIVITA[_i, _j, _k] = 1.0
    LEVI_CIVITA[_i, _k, _j] = -1.0

# radius beyond which a sphere chart point is moved to the antipodal chart
SPHERE_CHART_RADIUS = 2.0


@dataclass(frozen=True)
class FDConfig:
    """Finite-difference settings.

    Attributes:
        h: step in chart units.
        order: 2 or 4 (central stencils).
        analytic: use closed-form Jacobians when a field provides them.
    """

    h: float = 1e-3
    order: int = 2
    analytic: bool = True

    def __post_init__(self):
        if not (np.isfinite(self.h) and self.h > 0):
            raise ValueError(f"FD step must be positive, got {self.h}")
        if self.order not in (2, 4):
            raise ValueError(f"FD order must be 2 or 4, got {self.order}")


DEFAULT_FD = FDConfig()


def as_points(p) -> np.ndarray:
    arr = np.asarray(p, dtype=float)
    if arr.shape[-1:] != (3,):
        raise DomainError(f"chart points need a trailing axis of length 3, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("non-finite chart point")
    return arr


# ---------------------------------------------------------------------------
# models


class FlatTorus3:
    """Flat torus R^3 / (L1 Z x L2 Z x L3 Z); the metric is the identity."""

    kind = "flat_torus3"
    charts = ("torus",)

    def __init__(self, L: Sequence[float] = (1.0, 1.0, 1.0)):
        L = tuple(float(x) for x in L)
        if len(L) != 3 or any(not (x > 0) for x in L):
            raise ValueError(f"periods must be three positive numbers, got {L}")
        self.L = L
        self.chart = "torus"

    def __repr__(self):
        return f"FlatTorus3(L={self.L})"

    def __eq__(self, other):
        return isinstance(other, FlatTorus3) and other.L == self.L

    def __hash__(self):
        return hash((self.kind, self.L))

    def wrap(self, p):
        return np.mod(p, self.L)

    def metric(self, p):
        return np.broadcast_to(np.eye(3), np.shape(p)[:-1] + (3, 3)).copy()

    def metric_inverse(self, p):
        return self.metric(p)

    def metric_grad(self, p):
        """``out[..., k, i, j] = d_k g_ij``."""
        return np.zeros(np.shape(p)[:-1] + (3, 3, 3))

    def sqrt_det(self, p):
        return np.ones(np.shape(p)[:-1])

    def log_sqrt_det_grad(self, p):
        return np.zeros(np.shape(p))

    def to_dict(self):
        return {"kind": self.kind, "L": list(self.L)}


class RoundSphere3:
    """Unit round 3-sphere in one of two stereographic charts.

    North chart: projection from (0, 0, 0, 1), ``u = x[:3] / (1 - x4)``.
    South chart: ``u = (x1, x2, -x3) / (1 + x4)``. Both carry the conformal
    metric ``4 / (1 + |u|^2)^2 * I``.
    """

    kind = "round_sphere3"
    charts = ("north", "south")
    _SIGMA = np.array([1.0, 1.0, -1.0])

    def __init__(self, chart: str = "north"):
        if chart not in self.charts:
            raise ValueError(f"unknown sphere chart {chart!r}")
        self.chart = chart

    def __repr__(self):
        return f"RoundSphere3(chart={self.chart!r})"

    def __eq__(self, other):
        return isinstance(other, RoundSphere3) and other.chart == self.chart

    def __hash__(self):
        return hash((self.kind, self.chart))

    def other(self) -> "RoundSphere3":
        return RoundSphere3("south" if self.chart == "north" else "north")

    @staticmethod
    def conformal_factor(p):
        r2 = np.sum(np.square(p), axis=-1)
        return 4.0 / (1.0 + r2) ** 2

    def metric(self, p):
        return self.conformal_factor(p)[..., None, None] * np.eye(3)

    def metric_inverse(self, p):
        return np.eye(3) / self.conformal_factor(p)[..., None, None]

    def metric_grad(self, p):
        r2 = np.sum(np.square(p), axis=-1)
        dphi = -16.0 * p / ((1.0 + r2) ** 3)[..., None]
        return dphi[..., :, None, None] * np.eye(3)

    def sqrt_det(self, p):
        r2 = np.sum(np.square(p), axis=-1)
        return 8.0 / (1.0 + r2) ** 3

    def log_sqrt_det_grad(self, p):
        r2 = np.sum(np.square(p), axis=-1)
        return -6.0 * p / (1.0 + r2)[..., None]

    def to_ambient(self, p):
        p = np.asarray(p, dtype=float)
        r2 = np.sum(np.square(p), axis=-1)[..., None]
        if self.chart == "north":
            return np.concatenate([2 * p / (1 + r2), (r2 - 1) / (1 + r2)], axis=-1)
        return np.concatenate([2 * self._SIGMA * p / (1 + r2), (1 - r2) / (1 + r2)], axis=-1)

    def from_ambient(self, x):
        x = np.asarray(x, dtype=float)
        if self.chart == "north":
            return x[..., :3] / (1.0 - x[..., 3:4])
        return self._SIGMA * x[..., :3] / (1.0 + x[..., 3:4])

    def pushforward(self, x, w):
        """Chart components of an ambient tangent vector ``w`` at ambient point ``x``."""
        x = np.asarray(x, dtype=float)
        w = np.asarray(w, dtype=float)
        x4, w4 = x[..., 3:4], w[..., 3:4]
        if self.chart == "north":
            d = 1.0 - x4
            return w[..., :3] / d + x[..., :3] * w4 / d**2
        d = 1.0 + x4
        return self._SIGMA * (w[..., :3] / d - x[..., :3] * w4 / d**2)

    def ambient_velocity(self, p, v):
        """Ambient components of the chart tangent vector ``v`` at chart point ``p``."""
        p = np.asarray(p, dtype=float)
        v = np.asarray(v, dtype=float)
        D = 1.0 + np.sum(np.square(p), axis=-1)[..., None]
        pv = np.sum(p * v, axis=-1)[..., None]
        head = 2.0 * v / D - 4.0 * p * pv / D**2
        tail = 4.0 * pv / D**2
        if self.chart == "north":
            return np.concatenate([head, tail], axis=-1)
        return np.concatenate([self._SIGMA * head, -tail], axis=-1)

    def transition(self, p):
        """Coordinates of chart point ``p`` in the other chart (``sigma * p / |p|^2``)."""
        p = np.asarray(p, dtype=float)
        r2 = np.sum(np.square(p), axis=-1)[..., None]
        return self._SIGMA * p / r2

    def transition_jacobian(self, p):
        p = np.asarray(p, dtype=float)
        r2 = np.sum(np.square(p), axis=-1)[..., None, None]
        outer = p[..., :, None] * p[..., None, :]
        return self._SIGMA[:, None] * (np.eye(3) / r2 - 2.0 * outer / r2**2)

    def to_dict(self):
        return {"kind": self.kind, "chart": self.chart}


ManifoldModel = FlatTorus3 | RoundSphere3


def model_from_dict(d: Mapping) -> ManifoldModel:
    if d["kind"] == FlatTorus3.kind:
        return FlatTorus3(d.get("L", (1.0, 1.0, 1.0)))
    if d["kind"] == RoundSphere3.kind:
        return RoundSphere3(d.get("chart", "north"))
    raise ValueError(f"unknown model kind {d['kind']!r}")


# ---------------------------------------------------------------------------
# fields


class PointField:
    """Scalar (rank 0) or vector (rank 1) field on chart coordinates.

    ``func`` maps points ``(..., 3)`` to ``(...)`` or ``(..., 3)``. The
    optional ``jac`` returns partial derivatives: ``(..., 3)`` with entries
    ``d_j f`` for scalars, ``(..., 3, 3)`` with entries ``d_j X^i`` for
    vectors.
    """

    def __init__(
        self,
        func: Callable[[np.ndarray], np.ndarray],
        jac: Callable[[np.ndarray], np.ndarray] | None = None,
        *,
        rank: int = 1,
        tag: str = "analytic",
        domain: tuple[Sequence[float], Sequence[float]] | None = None,
        name: str = "",
    ):
        if rank not in (0, 1):
            raise ValueError("rank must be 0 (scalar) or 1 (vector)")
        if tag not in ("analytic", "sampled"):
            raise ValueError("tag must be 'analytic' or 'sampled'")
        self.func = func
        self.jac = jac
        self.rank = rank
        self.tag = tag
        self.domain = None if domain is None else (np.asarray(domain[0], float), np.asarray(domain[1], float))
        self.name = name

    def __repr__(self):
        kind = "scalar" if self.rank == 0 else "vector"
        return f"PointField({self.name or '<anonymous>'}, {kind}, {self.tag})"

    def check_domain(self, p):
        if self.domain is None:
            return
        lo, hi = self.domain
        if np.any(p < lo) or np.any(p > hi):
            raise DomainError(f"{self!r} evaluated outside its domain [{lo}, {hi}]")

    def __call__(self, p):
        p = as_points(p)
        self.check_domain(p)
        return np.asarray(self.func(p), dtype=float)

    @classmethod
    def constant(cls, value, name: str = "") -> "PointField":
        value = np.asarray(value, dtype=float)
        if value.shape == ():
            return cls(
                lambda p: np.full(np.shape(p)[:-1], float(value)),
                lambda p: np.zeros(np.shape(p)),
                rank=0,
                name=name,
            )
        return cls(
            lambda p: np.broadcast_to(value, np.shape(p)).copy(),
            lambda p: np.zeros(np.shape(p)[:-1] + (3, 3)),
            rank=1,
            name=name,
        )

    @classmethod
    def from_samples(cls, axes: Sequence[np.ndarray], values: np.ndarray, name: str = "") -> "PointField":
        """Cubic interpolant of gridded samples; evaluation outside the grid is a domain error."""
        from scipy.interpolate import RegularGridInterpolator

        values = np.asarray(values, dtype=float)
        shape = tuple(len(a) for a in axes)
        rank = 0 if values.shape == shape else 1
        interp = RegularGridInterpolator(tuple(axes), values, method="cubic", bounds_error=True)
        lo = [a[0] for a in axes]
        hi = [a[-1] for a in axes]
        return cls(lambda p: interp(p), rank=rank, tag="sampled", domain=(lo, hi), name=name)


class ChartedField:
    """A global field on a multi-chart model: one ``PointField`` per chart."""

    def __init__(self, fields: Mapping[str, PointField], name: str = ""):
        if not fields:
            raise ValueError("ChartedField needs at least one chart")
        ranks = {f.rank for f in fields.values()}
        if len(ranks) != 1:
            raise ValueError("all chart representatives must share a rank")
        self.fields = dict(fields)
        self.rank = ranks.pop()
        self.name = name

    def __repr__(self):
        return f"ChartedField({self.name or '<anonymous>'}, charts={sorted(self.fields)})"

    def on(self, chart: str) -> PointField:
        try:
            return self.fields[chart]
        except KeyError:
            raise DomainError(f"{self!r} has no representative in chart {chart!r}") from None


FieldLike = PointField | ChartedField


def field_on(field: FieldLike, model: ManifoldModel) -> PointField:
    if isinstance(field, ChartedField):
        return field.on(model.chart)
    return field


def evaluate(model: ManifoldModel, field: FieldLike, p) -> np.ndarray:
    return field_on(field, model)(p)


def _fd_weights(order: int):
    if order == 2:
        return (1, -1), (0.5, -0.5)
    return (2, 1, -1, -2), (-1 / 12, 8 / 12, -8 / 12, 1 / 12)


def partials(model: ManifoldModel, field: FieldLike, p, cfg: FDConfig = DEFAULT_FD) -> np.ndarray:
    """Coordinate partial derivatives of a field.

    Returns ``(..., 3)`` (``d_j f``) for scalars and ``(..., 3, 3)``
    (``[..., i, j] = d_j X^i``) for vectors.
    """
    f = field_on(field, model)
    p = as_points(p)
    if cfg.analytic and f.jac is not None:
        f.check_domain(p)
        return np.asarray(f.jac(p), dtype=float)
    shifts, weights = _fd_weights(cfg.order)
    cols = []
    for j in range(3):
        e = np.zeros(3)
        e[j] = cfg.h
        acc = 0.0
        for s, w in zip(shifts, weights):
            acc = acc + w * f(p + s * e)
        cols.append(acc / cfg.h)
    return np.stack(cols, axis=-1)


# ---------------------------------------------------------------------------
# pointwise algebra


def metric_at(model: ManifoldModel, p) -> np.ndarray:
    """Metric matrix ``g_ij`` at chart point(s) ``p``."""
    p = as_points(p)
    if isinstance(model, FlatTorus3):
        p = model.wrap(p)
    return model.metric(p)


def inner(model: ManifoldModel, p, u, v) -> np.ndarray:
    g = metric_at(model, p)
    return np.einsum("...ij,...i,...j->...", g, np.asarray(u, float), np.asarray(v, float))


def norm(model: ManifoldModel, p, u) -> np.ndarray:
    return np.sqrt(np.maximum(inner(model, p, u, u), 0.0))


def cross(model: ManifoldModel, p, u, v) -> np.ndarray:
    """Riemannian cross product ``(u x v)^i = g^{il} sqrt(det g) eps_{ljk} u^j v^k``."""
    p = as_points(p)
    w = np.einsum("ljk,...j,...k->...l", LEVI_CIVITA, np.asarray(u, float), np.asarray(v, float))
    w = model.sqrt_det(p)[..., None] * w
    return np.einsum("...il,...l->...i", model.metric_inverse(p), w)


# ---------------------------------------------------------------------------
# differential operators


def grad(model: ManifoldModel, f: FieldLike, p, cfg: FDConfig = DEFAULT_FD) -> np.ndarray:
    """Gradient ``g^{ij} d_j f``."""
    p = as_points(p)
    df = partials(model, f, p, cfg)
    return np.einsum("...ij,...j->...i", model.metric_inverse(p), df)


def grad_field(model: ManifoldModel, f: FieldLike, cfg: FDConfig = DEFAULT_FD) -> PointField:
    f = field_on(f, model)
    return PointField(lambda q: grad(model, f, q, cfg), rank=1, domain=f.domain, name=f"grad({f.name})")


def div(model: ManifoldModel, X: FieldLike, p, cfg: FDConfig = DEFAULT_FD) -> np.ndarray:
    """Divergence ``(1/sqrt g) d_i (sqrt g X^i)``."""
    p = as_points(p)
    J = partials(model, X, p, cfg)
    Xv = evaluate(model, X, p)
    return np.trace(J, axis1=-2, axis2=-1) + np.sum(Xv * model.log_sqrt_det_grad(p), axis=-1)


def _lowered_partials(model, X, p, cfg):
    """``D[..., j, k] = d_j (g_kl X^l)``."""
    J = partials(model, X, p, cfg)
    Xv = evaluate(model, X, p)
    return np.einsum("...jkl,...l->...jk", model.metric_grad(p), Xv) + np.einsum(
        "...kl,...lj->...jk", model.metric(p), J
    )


def curl(model: ManifoldModel, X: FieldLike, p, cfg: FDConfig = DEFAULT_FD) -> np.ndarray:
    """Curl ``(1/sqrt g) eps^{ijk} d_j (g_kl X^l)``."""
    p = as_points(p)
    D = _lowered_partials(model, X, p, cfg)
    return np.einsum("ijk,...jk->...i", LEVI_CIVITA, D) / model.sqrt_det(p)[..., None]


def laplacian(model: ManifoldModel, f: FieldLike, p, cfg: FDConfig = DEFAULT_FD) -> np.ndarray:
    """Positive Laplacian ``-div grad f`` (the negative Euclidean Laplacian on flat charts)."""
    return -div(model, grad_field(model, f, cfg), p, cfg)


def lie_bracket(model: ManifoldModel, X: FieldLike, Y: FieldLike, p, cfg: FDConfig = DEFAULT_FD) -> np.ndarray:
    """``[X, Y]^i = X^j d_j Y^i - Y^j d_j X^i`` (metric independent)."""
    p = as_points(p)
    Xv, Yv = evaluate(model, X, p), evaluate(model, Y, p)
    JX, JY = partials(model, X, p, cfg), partials(model, Y, p, cfg)
    return np.einsum("...ij,...j->...i", JY, Xv) - np.einsum("...ij,...j->...i", JX, Yv)


def grad_inner(model: ManifoldModel, X: FieldLike, Y: FieldLike, p, cfg: FDConfig = DEFAULT_FD) -> np.ndarray:
    """Gradient of the function ``g(X, Y)`` by the product rule."""
    p = as_points(p)
    Xv, Yv = evaluate(model, X, p), evaluate(model, Y, p)
    JX, JY = partials(model, X, p, cfg), partials(model, Y, p, cfg)
    g = model.metric(p)
    d = (
        np.einsum("...jkl,...k,...l->...j", model.metric_grad(p), Xv, Yv)
        + np.einsum("...kl,...kj,...l->...j", g, JX, Yv)
        + np.einsum("...kl,...k,...lj->...j", g, Xv, JY)
    )
    return np.einsum("...ij,...j->...i", model.metric_inverse(p), d)


def killing_residual(model: ManifoldModel, Y: FieldLike, p, cfg: FDConfig = DEFAULT_FD) -> np.ndarray:
    """Lie derivative of the metric, ``Y^k d_k g_ij + g_kj d_i Y^k + g_ik d_j Y^k``."""
    p = as_points(p)
    Yv = evaluate(model, Y, p)
    J = partials(model, Y, p, cfg)
    g = model.metric(p)
    return (
        np.einsum("...kij,...k->...ij", model.metric_grad(p), Yv)
        + np.einsum("...kj,...ki->...ij", g, J)
        + np.einsum("...ik,...kj->...ij", g, J)
    )


def covariant_accel(model: ManifoldModel, Y: FieldLike, p, cfg: FDConfig = DEFAULT_FD) -> np.ndarray:
    """``nabla_Y Y = 1/2 grad g(Y, Y) - Y x curl Y``."""
    p = as_points(p)
    Yv = evaluate(model, Y, p)
    return 0.5 * grad_inner(model, Y, Y, p, cfg) - cross(model, p, Yv, curl(model, Y, p, cfg))


def identity_residual(
    model: ManifoldModel, X: FieldLike, Y: FieldLike, p, cfg: FDConfig = DEFAULT_FD, grad_route: str = "product"
) -> np.ndarray:
    """``grad g(X, Y) - Y x curl X - [Y, X]``; vanishes when ``Y`` is Killing.

    Args:
        grad_route: ``"product"`` differentiates ``g(X, Y)`` by the product
            rule, sharing the Jacobian of ``X`` with the other two terms, so
            their truncation errors cancel when ``Y`` has exact derivatives.
            ``"scalar"`` differentiates the function ``g(X, Y)`` itself by
            finite differences, which keeps the three errors independent and
            exposes the ``O(h^order)`` convergence.
    """
    p = as_points(p)
    Yv = evaluate(model, Y, p)
    if grad_route == "product":
        g_term = grad_inner(model, X, Y, p, cfg)
    elif grad_route == "scalar":
        Xf, Yf = field_on(X, model), field_on(Y, model)
        s = PointField(lambda q: inner(model, q, Xf(q), Yf(q)), rank=0, domain=Xf.domain)
        g_term = grad(model, s, p, cfg)
    else:
        raise ValueError("grad_route must be 'product' or 'scalar'")
    return g_term - cross(model, p, Yv, curl(model, X, p, cfg)) - lie_bracket(model, Y, X, p, cfg)
