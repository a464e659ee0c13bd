"""Symmetric Beltrami fields from scalar Laplace eigenfunctions and back.

Given a Killing field ``Y`` with ``curl Y = kappa Y`` and constant
``g(Y, Y) = c``, and a scalar ``f`` with ``Y(f) = 0`` and ``Delta f = lambda f``
(positive Laplacian, ``Delta = -div grad``), the field

    X = Yhat x grad f - mu f Yhat,   Yhat = Y / sqrt(c),
    mu = kappa / 2 + sqrt(kappa^2 / 4 + lambda)

satisfies ``curl X = mu X`` and ``[Y, X] = 0``. Conversely
``f = -g(Yhat, X) / mu`` recovers the scalar from a symmetric eigenfield.

On the flat torus everything is carried out exactly on Fourier
coefficients. On the round sphere fields are pointwise and checked by
finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from . import chartcalc as cc
from .catalog import HOPF_INVARIANT, KillingEntry, catalog_get, sample_points, translation_entry
from .chartcalc import ChartedField, FDConfig, FlatTorus3, PointField, RoundSphere3
from .errors import DegenerateScalar, NoFirstIntegral, NotBeltramiKilling, PreconditionError
from .spectral import (
    SpectralField,
    cross_const,
    dot_const,
    directional_derivative,
    grad_spec,
    laplacian_spec,
    scale_const,
    symmetric_mask,
)

AnyField = Union[SpectralField, PointField, ChartedField]

HOPF_GOLDEN_LAMBDA = 8.0


@dataclass(frozen=True)
class ScalarEigenpair:
    """Scalar eigenfunction ``Delta f = lam f`` invariant under ``symmetry.Y``.

    ``wavevector`` records the Fourier mode chosen on the torus.
    """

    f: AnyField
    lam: float
    symmetry: KillingEntry
    mean_free: bool = True
    wavevector: tuple[int, int, int] | None = None


@dataclass(frozen=True)
class ConstructionResult:
    """Output of :func:`beltrami_from_scalar`.

    Attributes:
        X: the constructed field, spectral on the torus, charted on the sphere.
        mu: curl eigenvalue.
        source: the scalar eigenpair that was used.
        Y_scale: factor applied to the Killing field so that ``g(Y, Y) = 1``.
        Y: the rescaled Killing field.
    """

    X: AnyField
    mu: float
    source: ScalarEigenpair
    Y_scale: float
    Y: AnyField = field(repr=False)

    @property
    def kappa(self) -> float:
        return float(self.source.symmetry.kappa)

    @property
    def lam(self) -> float:
        return float(self.source.lam)

    def quadratic_residual(self) -> float:
        """``|mu^2 - mu kappa - lambda|``."""
        return abs(self.mu**2 - self.mu * self.kappa - self.lam)

    def to_dict(self) -> dict:
        entry = self.source.symmetry
        out = {
            "symmetry": entry.name,
            "model": entry.model.to_dict(),
            "lambda": self.lam,
            "kappa": self.kappa,
            "mu": self.mu,
            "Y_scale": self.Y_scale,
        }
        if isinstance(self.X, SpectralField):
            out["representation"] = "spectral"
            out["X"] = self.X.to_dict()
            out["f"] = self.source.f.to_dict()
            out["wavevector"] = list(self.source.wavevector) if self.source.wavevector else None
        else:
            out["representation"] = "analytic"
            out["X"] = {
                "expression": "X = Yhat x grad f - mu f Yhat",
                "Yhat": entry.Y.name,
                "f": getattr(self.source.f, "name", ""),
                "charts": sorted(getattr(self.X, "fields", {"chart": None})),
            }
        return out


# ---------------------------------------------------------------------------
# eigenproblem


def solve_constrained_laplacian(v, N: int, model=None) -> ScalarEigenpair:
    """Lowest symmetric mean-free Laplace eigenpair on the unit torus.

    The Rayleigh quotient over band-limited functions invariant under the
    translation ``v`` is minimised by enumeration, ``lambda(k) = 4 pi^2 |k|^2``
    over admitted ``k``. Among minimisers the lexicographically smallest
    ``k`` is taken, in cosine phase: ``f = 2 cos(2 pi k.x)``, so that
    ``||f||^2 = 2``.

    Raises:
        NoFirstIntegral: no admitted wavevector at truncation ``N``.
    """
    if model is not None and not isinstance(model, FlatTorus3):
        raise PreconditionError("the enumerated eigenproblem is only available on the flat torus")
    sub = symmetric_mask(v, N)
    if sub.is_empty:
        raise NoFirstIntegral(
            f"no non-constant band-limited function is invariant under {sub.direction.label} "
            f"at N = {N}; the symmetry admits no first integral"
        )
    k2 = np.sum(sub.modes * sub.modes, axis=1)
    k = tuple(int(x) for x in sub.modes[int(np.argmin(k2))])  # argmin picks the first, i.e. lexicographic
    f = SpectralField.real_mode(N, k, 1.0, rank=0)
    lam = 4.0 * np.pi**2 * int(np.min(k2))
    return ScalarEigenpair(f, float(lam), translation_entry(sub.direction), True, k)


def hopf_golden_pair() -> ScalarEigenpair:
    """``f = x1^2 + x2^2 - 1/2`` on the round sphere with ``Delta f = 8 f``."""
    pieces = {}
    for chart, pf in HOPF_INVARIANT.fields.items():
        pieces[chart] = PointField(
            (lambda base: lambda p: base(p) - 0.5)(pf.func), pf.jac, rank=0, name="x1^2+x2^2-1/2"
        )
    return ScalarEigenpair(ChartedField(pieces, name="x1^2+x2^2-1/2"), HOPF_GOLDEN_LAMBDA, catalog_get("s3_hopf"))


def curl_eigenvalue(kappa: float, lam: float) -> float:
    """Positive root of ``mu^2 - kappa mu - lam = 0``."""
    return kappa / 2.0 + np.sqrt(kappa * kappa / 4.0 + lam)


# ---------------------------------------------------------------------------
# constructor


def _require_beltrami_killing(entry: KillingEntry):
    if entry.kappa is None:
        raise NotBeltramiKilling(f"{entry.name}: curl Y is not a constant multiple of Y")
    if entry.c is None or entry.c <= 0:
        raise NotBeltramiKilling(f"{entry.name}: g(Y, Y) is not a positive constant")


def _unit_direction(entry: KillingEntry) -> np.ndarray:
    return entry.direction.to_float() / np.sqrt(entry.c)


def _scaled_field(Y: AnyField, s: float) -> AnyField:
    def scale(pf: PointField) -> PointField:
        jac = None if pf.jac is None else (lambda q, j=pf.jac: s * j(q))
        return PointField(lambda q, fn=pf.func: s * fn(q), jac, rank=pf.rank, domain=pf.domain, name=pf.name)

    if isinstance(Y, ChartedField):
        return ChartedField({ch: scale(pf) for ch, pf in Y.fields.items()}, name=Y.name)
    return scale(Y)


def beltrami_from_scalar(
    entry: KillingEntry,
    pair: ScalarEigenpair,
    cfg: FDConfig = cc.DEFAULT_FD,
    tol: float = 1e-8,
) -> ConstructionResult:
    """Build ``X = Yhat x grad f - mu f Yhat`` with ``curl X = mu X``.

    Args:
        entry: Killing field with constant ``kappa`` and ``c``.
        pair: scalar eigenpair invariant under ``entry.Y``.
        cfg: finite-difference settings for the pointwise checks.
        tol: tolerance of the invariance and degeneracy checks, relative to
            the size of ``f``.

    Raises:
        NotBeltramiKilling: ``kappa`` or ``c`` missing.
        DegenerateScalar: ``f`` is constant.
        PreconditionError: ``f`` is not invariant under ``Y``, or has a mean.
    """
    _require_beltrami_killing(entry)
    mu = float(curl_eigenvalue(float(entry.kappa), float(pair.lam)))
    s = 1.0 / np.sqrt(entry.c)
    f = pair.f

    if isinstance(f, SpectralField):
        if entry.direction is None:
            raise PreconditionError("spectral scalars need a translation symmetry")
        yhat = _unit_direction(entry)
        scale = f.max_abs_coeff()
        nonconst = f.coeffs.copy()
        nonconst[f.N, f.N, f.N] = 0
        if np.max(np.abs(nonconst)) <= tol * max(scale, np.finfo(float).tiny):
            raise DegenerateScalar("f is constant; the construction gives X = -mu f Yhat, not an eigenfield")
        if abs(f.mean()) > tol * scale:
            raise PreconditionError("f must be mean-free on a closed manifold")
        if directional_derivative(yhat, f).max_abs_coeff() > tol * scale * 2 * np.pi * f.N:
            raise PreconditionError("f is not invariant under the symmetry (Y(f) != 0)")
        X = cross_const(yhat, grad_spec(f)) - mu * scale_const(yhat, f)
        return ConstructionResult(X, mu, pair, s, PointField.constant(yhat, name="Yhat"))

    Yhat = _scaled_field(entry.Y, s)
    _check_pointwise(entry, Yhat, f, cfg, tol)
    charts = [entry.model.chart] if not isinstance(f, ChartedField) else sorted(f.fields)
    pieces = {}
    for chart in charts:
        model = RoundSphere3(chart) if isinstance(entry.model, RoundSphere3) else entry.model
        pieces[chart] = _pointwise_X(model, Yhat, f, mu, cfg)
    X = ChartedField(pieces, name=f"beltrami({entry.name})") if isinstance(f, ChartedField) else pieces[charts[0]]
    return ConstructionResult(X, mu, pair, s, Yhat)


def _pointwise_X(model, Yhat, f, mu, cfg) -> PointField:
    Ypf, fpf = cc.field_on(Yhat, model), cc.field_on(f, model)

    def X(p):
        Yv = Ypf(p)
        return cc.cross(model, p, Yv, cc.grad(model, fpf, p, cfg)) - mu * fpf(p)[..., None] * Yv

    return PointField(X, rank=1, domain=fpf.domain, name="X")


def _check_pointwise(entry, Yhat, f, cfg, tol):
    pts = sample_points(entry, 5)
    model = entry.model
    fv = cc.evaluate(model, f, pts)
    spread = float(np.ptp(fv))
    if spread <= tol * max(1.0, float(np.max(np.abs(fv)))):
        raise DegenerateScalar("f is constant on the sample set")
    Yv = cc.evaluate(model, Yhat, pts)
    gf = cc.grad(model, f, pts, cfg)
    drift = float(np.max(np.abs(cc.inner(model, pts, Yv, gf))))
    if drift > max(tol, 10 * cfg.h**cfg.order) * max(1.0, float(np.max(cc.norm(model, pts, gf)))):
        raise PreconditionError(f"f is not invariant under the symmetry: max |Y(f)| = {drift:.3e}")


# ---------------------------------------------------------------------------
# inverse


@dataclass(frozen=True)
class Recovery:
    """Scalar recovered from a symmetric eigenfield plus its residuals.

    ``reconstruction`` is ``max |X - (Yhat x grad f - mu f Yhat)|`` and
    ``eigen`` is ``max |Delta f - mu (mu - kappa) f|``. On the torus both are
    bounds on the sup norm (sum of absolute Fourier coefficients); on charted
    models they are maxima over the entry's sample grid.
    """

    f: AnyField
    reconstruction: float
    eigen: float
    constant: bool

    def to_dict(self) -> dict:
        return {"reconstruction_residual": self.reconstruction, "eigen_residual": self.eigen, "f_constant": self.constant}


def _coeff_l1(F: SpectralField) -> float:
    return float(np.sum(np.abs(F.coeffs)))


def recover_scalar(entry: KillingEntry, X: AnyField, mu: float, cfg: FDConfig = cc.DEFAULT_FD) -> Recovery:
    """Recover ``f = -g(Yhat, X) / mu`` from a symmetric field with ``curl X = mu X``.

    ``Yhat = Y / sqrt(c)`` is the unit-length Killing field used by
    :func:`beltrami_from_scalar`, which makes the two maps exact inverses.

    Raises:
        PreconditionError: ``mu == 0``.
        NotBeltramiKilling: ``kappa`` or ``c`` missing.
    """
    if mu == 0:
        raise PreconditionError("mu must be non-zero")
    _require_beltrami_killing(entry)
    kappa = float(entry.kappa)
    s = 1.0 / np.sqrt(entry.c)

    if isinstance(X, SpectralField):
        yhat = _unit_direction(entry)
        f = dot_const(yhat, X) * (-1.0 / mu)
        recon = X - (cross_const(yhat, grad_spec(f)) - mu * scale_const(yhat, f))
        eig = laplacian_spec(f) - mu * (mu - kappa) * f
        nonconst = f.coeffs.copy()
        nonconst[f.N, f.N, f.N] = 0
        constant = bool(np.max(np.abs(nonconst)) <= 1e-12 * max(f.max_abs_coeff(), 1e-300))
        return Recovery(f, _coeff_l1(recon), _coeff_l1(eig), constant)

    Yhat = _scaled_field(entry.Y, s)
    charts = sorted(X.fields) if isinstance(X, ChartedField) else [entry.model.chart]
    pieces = {}
    for chart in charts:
        model = RoundSphere3(chart) if isinstance(entry.model, RoundSphere3) else entry.model
        Ypf, Xpf = cc.field_on(Yhat, model), cc.field_on(X, model)
        pieces[chart] = PointField(
            (lambda m, Yp, Xp: lambda p: -cc.inner(m, p, Yp(p), Xp(p)) / mu)(model, Ypf, Xpf),
            rank=0,
            domain=Xpf.domain,
            name="f_recovered",
        )
    f = ChartedField(pieces, name="f_recovered") if isinstance(X, ChartedField) else pieces[charts[0]]
    pts = sample_points(entry, 5)
    model = entry.model
    Yv = cc.evaluate(model, Yhat, pts)
    fv = cc.evaluate(model, f, pts)
    rebuilt = cc.cross(model, pts, Yv, cc.grad(model, f, pts, cfg)) - mu * fv[..., None] * Yv
    recon = float(np.max(np.abs(cc.evaluate(model, X, pts) - rebuilt)))
    eig = float(np.max(np.abs(cc.laplacian(model, f, pts, cfg) - mu * (mu - kappa) * fv)))
    constant = bool(np.ptp(fv) <= 1e-10 * max(1.0, float(np.max(np.abs(fv)))))
    return Recovery(f, recon, eig, constant)


def construct_on_torus(v, N: int) -> ConstructionResult:
    """Lowest symmetric eigenpair for the translation ``v``, then the constructor."""
    pair = solve_constrained_laplacian(v, N)
    return beltrami_from_scalar(pair.symmetry, pair)
