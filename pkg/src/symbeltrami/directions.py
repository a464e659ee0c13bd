"""Exact symmetry directions with components in Q(sqrt2, sqrt3).

A translation field ``Y = v`` on the unit 3-torus commutes with the Fourier
mode ``k`` iff ``k . v = 0``. For irrational ``v`` that test must be exact;
a floating-point dot product would invent spurious resonances. Each
component of ``v`` is stored as rational coordinates in the Q-basis
``(1, sqrt2, sqrt3, sqrt6)``, so ``k . v = 0`` for integer ``k`` reduces to
four integer equations.
"""

from __future__ import annotations

import math
import numbers
from fractions import Fraction
from functools import reduce
from typing import Sequence

import numpy as np

from .errors import UnsupportedDirection

BASIS_LABELS = ("1", "sqrt2", "sqrt3", "sqrt6")
_BASIS_VALUES = (1.0, math.sqrt(2.0), math.sqrt(3.0), math.sqrt(6.0))

# product table in the basis (1, r2, r3, r6): e_a * e_b = coeff * e_c
_MUL = {
    (0, 0): (1, 0), (0, 1): (1, 1), (0, 2): (1, 2), (0, 3): (1, 3),
    (1, 1): (2, 0), (1, 2): (1, 3), (1, 3): (2, 2),
    (2, 2): (3, 0), (2, 3): (3, 1),
    (3, 3): (6, 0),
}


def _mul(a, b):
    out = [Fraction(0)] * 4
    for i in range(4):
        for j in range(4):
            if a[i] and b[j]:
                c, t = _MUL[(min(i, j), max(i, j))]
                out[t] += c * a[i] * b[j]
    return out


def _rational(x) -> Fraction:
    if isinstance(x, bool) or not isinstance(x, (numbers.Rational, np.integer)):
        raise UnsupportedDirection(
            f"direction components must be exact (int or Fraction), got {x!r}; "
            "floating-point directions are rejected rather than approximated"
        )
    return Fraction(int(x)) if isinstance(x, np.integer) else Fraction(x)


class Direction:
    """Translation direction with exact components.

    ``components[j][b]`` is the rational coefficient of basis element ``b``
    in component ``j``.
    """

    def __init__(self, components: Sequence[Sequence], label: str | None = None):
        comps = tuple(tuple(_rational(c) for c in comp) for comp in components)
        if len(comps) != 3 or any(len(c) != 4 for c in comps):
            raise UnsupportedDirection("direction needs 3 components of 4 basis coefficients")
        if all(c == 0 for comp in comps for c in comp):
            raise UnsupportedDirection("zero direction")
        self.components = comps
        self.label = label or self._auto_label()

    @classmethod
    def rational(cls, v: Sequence, label: str | None = None) -> "Direction":
        return cls([(x, 0, 0, 0) for x in v], label)

    @classmethod
    def axis(cls, i: int) -> "Direction":
        v = [0, 0, 0]
        v[i] = 1
        return cls.rational(v, f"e{i + 1}")

    @classmethod
    def irrational_example(cls) -> "Direction":
        """``(1, sqrt2, sqrt6)``, rationally independent components."""
        return cls([(1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 0, 1)], "(1,sqrt2,sqrt6)")

    @classmethod
    def parse(cls, v) -> "Direction":
        """Accept a ``Direction``, a name (``e1``, ``e2``, ``e3``, ``irrational``) or exact components."""
        if isinstance(v, Direction):
            return v
        if isinstance(v, str):
            key = v.strip().lower()
            if key in ("e1", "e2", "e3"):
                return cls.axis(int(key[1]) - 1)
            if key in ("irrational", "(1,sqrt2,sqrt6)"):
                return cls.irrational_example()
            raise UnsupportedDirection(f"unknown direction name {v!r}")
        try:
            items = list(v)
        except TypeError:
            raise UnsupportedDirection(f"cannot interpret {v!r} as a direction") from None
        if len(items) != 3:
            raise UnsupportedDirection("direction must have 3 components")
        return cls.rational(items)

    def _auto_label(self) -> str:
        parts = []
        for comp in self.components:
            terms = []
            for c, name in zip(comp, BASIS_LABELS):
                if c:
                    terms.append(str(c) if name == "1" else f"{c}*{name}")
            parts.append("+".join(terms) if terms else "0")
        return "(" + ",".join(parts) + ")"

    def __repr__(self):
        return f"Direction({self.label})"

    def __eq__(self, other):
        return isinstance(other, Direction) and other.components == self.components

    def __hash__(self):
        return hash(self.components)

    def is_rational(self) -> bool:
        return all(c == 0 for comp in self.components for c in comp[1:])

    def to_float(self) -> np.ndarray:
        return np.array([sum(float(c) * b for c, b in zip(comp, _BASIS_VALUES)) for comp in self.components])

    def norm_sq_exact(self) -> tuple[Fraction, ...]:
        total = [Fraction(0)] * 4
        for comp in self.components:
            total = [a + b for a, b in zip(total, _mul(comp, comp))]
        return tuple(total)

    def norm_sq(self) -> float:
        return float(sum(float(c) * b for c, b in zip(self.norm_sq_exact(), _BASIS_VALUES)))

    def _integer_matrix(self) -> np.ndarray:
        """``(4, 3)`` integer matrix ``B`` with ``k . v = 0  <=>  B @ k == 0``."""
        denoms = [c.denominator for comp in self.components for c in comp]
        lcm = reduce(lambda a, b: a * b // math.gcd(a, b), denoms, 1)
        return np.array([[int(self.components[j][b] * lcm) for j in range(3)] for b in range(4)])

    def annihilates(self, k) -> np.ndarray:
        """Exact test ``k . v == 0`` for integer wavevector(s) ``k`` of shape ``(..., 3)``."""
        k = np.asarray(k)
        if not np.issubdtype(k.dtype, np.integer):
            raise TypeError("wavevectors must be integer arrays")
        B = self._integer_matrix()
        # int64 stays exact while |B| * |k| * 3 < 2**62
        if k.size and int(np.max(np.abs(B))) * int(np.max(np.abs(k))) * 3 >= 2**62:
            raise UnsupportedDirection("direction coefficients too large for exact int64 test")
        dots = np.einsum("bj,...j->...b", B, k.astype(np.int64))
        return np.all(dots == 0, axis=-1)

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "basis": list(BASIS_LABELS),
            "components": [[str(c) for c in comp] for comp in self.components],
        }

    @classmethod
    def from_dict(cls, d) -> "Direction":
        return cls([[Fraction(c) for c in comp] for comp in d["components"]], d.get("label"))
