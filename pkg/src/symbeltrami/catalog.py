"""Closed-form Killing fields and their first integrals.

Entries:

``t3_e1``, ``t3_e2``, ``t3_e3``
    unit translations of the flat torus.
``t3_irrational``
    the translation ``e1 + sqrt2 e2 + sqrt6 e3``; its orbits are dense, so it
    has no non-constant first integral and no symmetric Beltrami field.
``s3_hopf``
    the Hopf field ``(x1, x2, x3, x4) -> (-x2, x1, -x4, x3)`` on the round
    3-sphere; unit length, Killing, and ``curl H = 2 H``.
``r3_rotation_patch``
    the rotation generator ``(-y, x, 0)`` on a flat cube away from the
    z-axis. Killing but not Beltrami; used only to exercise identities.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .chartcalc import ChartedField, FieldLike, FlatTorus3, ManifoldModel, PointField, RoundSphere3
from .directions import Direction
from .errors import UnknownEntry
from .spectral import symmetric_mask


@dataclass(frozen=True)
class KillingEntry:
    name: str
    model: ManifoldModel
    Y: FieldLike
    kappa: float | None
    c: float | None
    first_integrals: tuple[tuple[str, FieldLike], ...] = ()
    description: str = ""
    direction: Direction | None = None
    patch: tuple[tuple[float, ...], tuple[float, ...]] | None = field(default=None)

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "model": self.model.to_dict(),
            "kappa": self.kappa,
            "c": self.c,
            "first_integrals": [label for label, _ in self.first_integrals],
            "description": self.description,
        }
        if self.direction is not None:
            out["direction"] = self.direction.to_dict()
        if self.patch is not None:
            out["patch"] = {"lo": list(self.patch[0]), "hi": list(self.patch[1])}
        return out


# ---------------------------------------------------------------------------
# flat torus


def _constant_vector(v, name):
    return PointField.constant(np.asarray(v, dtype=float), name=name)


def _cos_coordinate(j: int) -> PointField:
    def f(p):
        return np.cos(2 * np.pi * p[..., j])

    def df(p):
        out = np.zeros(np.shape(p))
        out[..., j] = -2 * np.pi * np.sin(2 * np.pi * p[..., j])
        return out

    return PointField(f, df, rank=0, name=f"cos(2 pi x{j + 1})")


def translation_entry(v) -> KillingEntry:
    """Killing entry for the translation ``Y = v`` of the unit torus."""
    direction = Direction.parse(v)
    for name in ("t3_e1", "t3_e2", "t3_e3", "t3_irrational"):
        if _CATALOG[name].direction == direction:
            return _CATALOG[name]
    return _translation(direction, f"t3_translation{direction.label}")


def _translation(direction: Direction, name: str, description: str = "") -> KillingEntry:
    vf = direction.to_float()
    firsts = []
    if direction.is_rational():
        # two independent admitted modes give independent first integrals; integer
        # vectors orthogonal to v exist with entries up to max |v_i|
        reach = max(1, int(np.max(np.abs(direction._integer_matrix()[0]))))
        modes = symmetric_mask(direction, reach).modes
        for k in modes[np.argsort(np.sum(modes * modes, axis=1), kind="stable")]:
            if len(firsts) == 2:
                break
            if all(np.linalg.matrix_rank(np.stack([k, q])) == 2 for q in firsts):
                firsts.append(k)
        firsts = [_cos_mode(k) for k in firsts]
    return KillingEntry(
        name=name,
        model=FlatTorus3(),
        Y=_constant_vector(vf, name),
        kappa=0.0,
        c=direction.norm_sq(),
        first_integrals=tuple((pf.name, pf) for pf in firsts),
        description=description or f"translation along {direction.label}",
        direction=direction,
    )


def _cos_mode(k) -> PointField:
    k = np.asarray(k, dtype=float)
    K = 2 * np.pi * k

    def f(p):
        return np.cos(p @ K)

    def df(p):
        return -np.sin(p @ K)[..., None] * K

    label = "cos(2 pi (" + ",".join(str(int(x)) for x in k) + ").x)"
    return PointField(f, df, rank=0, name=label)


def _axis_entry(i: int) -> KillingEntry:
    v = np.zeros(3)
    v[i] = 1.0
    firsts = tuple((pf.name, pf) for pf in (_cos_coordinate(j) for j in range(3) if j != i))
    return KillingEntry(
        name=f"t3_e{i + 1}",
        model=FlatTorus3(),
        Y=_constant_vector(v, f"e{i + 1}"),
        kappa=0.0,
        c=1.0,
        first_integrals=firsts,
        description=f"unit translation along the x{i + 1} axis of the flat torus",
        direction=Direction.axis(i),
    )


# ---------------------------------------------------------------------------
# round sphere


def _hopf_value(p):
    u1, u2, u3 = p[..., 0], p[..., 1], p[..., 2]
    return np.stack([u1 * u3 - u2, u2 * u3 + u1, 0.5 * (1.0 + u3**2 - u1**2 - u2**2)], axis=-1)


def _hopf_jac(p):
    u1, u2, u3 = p[..., 0], p[..., 1], p[..., 2]
    one = np.ones_like(u1)
    return np.stack(
        [
            np.stack([u3, -one, u1], axis=-1),
            np.stack([one, u3, u2], axis=-1),
            np.stack([-u1, -u2, u3], axis=-1),
        ],
        axis=-2,
    )


def _hopf_invariant(p):
    """``x1^2 + x2^2`` pulled back to a stereographic chart."""
    r2 = np.sum(p * p, axis=-1)
    return 4.0 * (p[..., 0] ** 2 + p[..., 1] ** 2) / (1.0 + r2) ** 2


def _hopf_invariant_grad(p):
    r2 = np.sum(p * p, axis=-1)
    s = p[..., 0] ** 2 + p[..., 1] ** 2
    D = 1.0 + r2
    ds = 2.0 * p * np.array([1.0, 1.0, 0.0])
    return 4.0 * ds / (D**2)[..., None] - (16.0 * s / D**3)[..., None] * p


def both_sphere_charts(pf: PointField) -> ChartedField:
    """Use one chart expression in both sphere charts.

    Valid for fields invariant under the ambient isometry
    ``(x1, x2, x3, x4) -> (x1, x2, -x3, -x4)`` that relates the charts.
    """
    return ChartedField({"north": pf, "south": pf}, name=pf.name)


HOPF_FIELD = both_sphere_charts(PointField(_hopf_value, _hopf_jac, rank=1, name="hopf"))
HOPF_INVARIANT = both_sphere_charts(PointField(_hopf_invariant, _hopf_invariant_grad, rank=0, name="x1^2+x2^2"))


def hopf_ambient(x):
    x = np.asarray(x, dtype=float)
    return np.stack([-x[..., 1], x[..., 0], -x[..., 3], x[..., 2]], axis=-1)


# ---------------------------------------------------------------------------
# rotation patch

ROTATION_PATCH = ((0.5, 0.5, 0.0), (1.5, 1.5, 1.0))


def _rotation_field() -> PointField:
    def f(p):
        return np.stack([-p[..., 1], p[..., 0], np.zeros(p.shape[:-1])], axis=-1)

    def jac(p):
        return np.broadcast_to(np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]), p.shape[:-1] + (3, 3)).copy()

    return PointField(f, jac, rank=1, domain=ROTATION_PATCH, name="rotation(-y,x,0)")


def _patch_scalars():
    z = PointField(lambda p: p[..., 2], lambda p: np.broadcast_to([0.0, 0.0, 1.0], p.shape).copy(),
                   rank=0, domain=ROTATION_PATCH, name="z")
    rho2 = PointField(
        lambda p: p[..., 0] ** 2 + p[..., 1] ** 2,
        lambda p: np.stack([2 * p[..., 0], 2 * p[..., 1], np.zeros(p.shape[:-1])], axis=-1),
        rank=0,
        domain=ROTATION_PATCH,
        name="x^2+y^2",
    )
    return ((z.name, z), (rho2.name, rho2))


# ---------------------------------------------------------------------------


def _build() -> dict[str, KillingEntry]:
    cat = {f"t3_e{i + 1}": _axis_entry(i) for i in range(3)}
    irr = Direction.irrational_example()
    cat["t3_irrational"] = KillingEntry(
        name="t3_irrational",
        model=FlatTorus3(),
        Y=_constant_vector(irr.to_float(), "e1+sqrt2 e2+sqrt6 e3"),
        kappa=0.0,
        c=irr.norm_sq(),
        first_integrals=(),
        description="translation with rationally independent components; dense orbits",
        direction=irr,
    )
    cat["s3_hopf"] = KillingEntry(
        name="s3_hopf",
        model=RoundSphere3("north"),
        Y=HOPF_FIELD,
        kappa=2.0,
        c=1.0,
        first_integrals=(("x1^2+x2^2", HOPF_INVARIANT),),
        description="Hopf field (-x2, x1, -x4, x3) on the round unit 3-sphere, stereographic charts",
    )
    cat["r3_rotation_patch"] = KillingEntry(
        name="r3_rotation_patch",
        model=FlatTorus3(),
        Y=_rotation_field(),
        kappa=None,
        c=None,
        first_integrals=_patch_scalars(),
        description="rotation generator (-y, x, 0) on the flat cube [0.5,1.5]^2 x [0,1]; Killing, not Beltrami",
        patch=ROTATION_PATCH,
    )
    return cat


_CATALOG = _build()


def catalog_names() -> list[str]:
    return list(_CATALOG)


def catalog_get(name: str) -> KillingEntry:
    try:
        return _CATALOG[name]
    except KeyError:
        raise UnknownEntry(f"unknown catalog entry {name!r}; known: {', '.join(_CATALOG)}") from None


def first_integral_existence(v, N: int) -> int:
    """Number of band-limited scalar modes ``exp(2 pi i k.x)``, ``k != 0``, invariant under ``v``."""
    return len(symmetric_mask(v, N))


def sample_points(entry: KillingEntry, n: int = 5, margin: float = 0.05) -> np.ndarray:
    """Deterministic ``n^3`` grid of chart points suited to the entry's model."""
    if entry.patch is not None:
        lo, hi = np.asarray(entry.patch[0]), np.asarray(entry.patch[1])
    elif isinstance(entry.model, RoundSphere3):
        lo, hi = -np.ones(3) * 1.2, np.ones(3) * 1.2
    else:
        lo, hi = np.zeros(3), np.ones(3)
    span = hi - lo
    axes = [np.linspace(lo[i] + margin * span[i], hi[i] - margin * span[i], n) for i in range(3)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)


def entry_sample_points(entries: Sequence[KillingEntry], n: int = 5):
    return {e.name: sample_points(e, n) for e in entries}
