"""Band-limited calculus on the flat unit 3-torus.

Fields are truncated Fourier series ``X(x) = sum_k c(k) exp(2 pi i k.x)``
with ``k`` in ``{-N..N}^3``. Coefficients live in a dense array indexed
``k + N``; the trailing axis holds vector components (absent for scalars).

The module also realises the discrete existence mechanism for symmetric
Beltrami fields: ``curl^{-1}`` on mean-free divergence-free fields, the
orthogonal projection onto fields commuting with a translation symmetry,
and the eigen-decomposition of their composition.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .chartcalc import PointField
from .directions import Direction
from .errors import AliasingError, NoSymmetricFields, PreconditionError
from .jacobi import jacobi_eigh

TWO_PI = 2.0 * np.pi
SCHEMA = "symbeltrami.spectral_field/1"


class SpectralField:
    """Truncated Fourier series on the unit 3-torus.

    Args:
        coeffs: complex array of shape ``(2N+1,)*3`` (scalar) or
            ``(2N+1,)*3 + (3,)`` (vector), indexed by ``k + N``.
    """

    L = (1.0, 1.0, 1.0)

    def __init__(self, coeffs):
        c = np.array(coeffs, dtype=complex)
        if c.ndim not in (3, 4) or len(set(c.shape[:3])) != 1 or c.shape[0] % 2 != 1:
            raise ValueError(f"bad coefficient array shape {c.shape}")
        if c.ndim == 4 and c.shape[3] != 3:
            raise ValueError("vector fields need 3 components")
        c.setflags(write=False)
        self.coeffs = c
        self.N = (c.shape[0] - 1) // 2
        self.rank = 0 if c.ndim == 3 else 1
        self._sparse = None

    # -- construction -----------------------------------------------------

    @classmethod
    def zeros(cls, N: int, rank: int = 1) -> "SpectralField":
        n = 2 * N + 1
        return cls(np.zeros((n, n, n) + ((3,) if rank == 1 else ()), dtype=complex))

    @classmethod
    def from_modes(cls, N: int, modes: Mapping[tuple, object], rank: int = 1) -> "SpectralField":
        """Build from ``{k: coefficient}``; Hermitian partners are *not* added."""
        n = 2 * N + 1
        c = np.zeros((n, n, n) + ((3,) if rank == 1 else ()), dtype=complex)
        for k, v in modes.items():
            if max(abs(int(x)) for x in k) > N:
                raise ValueError(f"mode {k} exceeds truncation N={N}")
            c[tuple(int(x) + N for x in k)] = v
        return cls(c)

    @classmethod
    def real_mode(cls, N: int, k, amplitude, rank: int = 1) -> "SpectralField":
        """The real field ``Re(2 a exp(2 pi i k.x))`` = ``a e^{ikx} + conj(a) e^{-ikx}``."""
        a = np.asarray(amplitude, dtype=complex)
        k = tuple(int(x) for x in k)
        mk = tuple(-x for x in k)
        if k == mk:
            return cls.from_modes(N, {k: a.real}, rank)
        return cls.from_modes(N, {k: a, mk: np.conj(a)}, rank)

    def with_coeffs(self, coeffs) -> "SpectralField":
        return SpectralField(coeffs)

    # -- bookkeeping ------------------------------------------------------

    def wavevectors(self) -> np.ndarray:
        r = np.arange(-self.N, self.N + 1)
        return np.stack(np.meshgrid(r, r, r, indexing="ij"), axis=-1)

    def coeff(self, k):
        return self.coeffs[tuple(int(x) + self.N for x in k)]

    def _nonzero(self):
        if self._sparse is None:
            mag = np.abs(self.coeffs) if self.rank == 0 else np.max(np.abs(self.coeffs), axis=-1)
            idx = np.argwhere(mag > 0)
            self._sparse = (idx - self.N, self.coeffs[tuple(idx.T)])
        return self._sparse

    def support(self) -> np.ndarray:
        """Wavevectors with a non-zero coefficient, in lexicographic order."""
        return self._nonzero()[0]

    def hermitian_residual(self) -> float:
        flipped = self.coeffs[::-1, ::-1, ::-1]
        return float(np.max(np.abs(self.coeffs - np.conj(flipped)), initial=0.0))

    def divergence_residual(self) -> float:
        """``max_k |2 pi k . c(k)|`` (vector fields only)."""
        self._require_rank(1)
        K = TWO_PI * self.wavevectors()
        return float(np.max(np.abs(np.sum(K * self.coeffs, axis=-1)), initial=0.0))

    def mean(self):
        return self.coeffs[self.N, self.N, self.N]

    def _require_rank(self, rank):
        if self.rank != rank:
            kind = "vector" if rank == 1 else "scalar"
            raise PreconditionError(f"operation needs a {kind} field")

    # -- arithmetic -------------------------------------------------------

    def _match(self, other):
        if not isinstance(other, SpectralField) or other.N != self.N or other.rank != self.rank:
            raise ValueError("fields must share truncation and rank")

    def __add__(self, other):
        self._match(other)
        return SpectralField(self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._match(other)
        return SpectralField(self.coeffs - other.coeffs)

    def __neg__(self):
        return SpectralField(-self.coeffs)

    def __mul__(self, s):
        return SpectralField(self.coeffs * s)

    __rmul__ = __mul__

    def __truediv__(self, s):
        return SpectralField(self.coeffs / s)

    def inner(self, other) -> float:
        """Real L2 inner product over the unit cube (Parseval)."""
        self._match(other)
        return float(np.real(np.sum(np.conj(self.coeffs) * other.coeffs)))

    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.coeffs) ** 2))

    def norm(self) -> float:
        return float(np.sqrt(self.norm_sq()))

    def max_abs_coeff(self) -> float:
        return float(np.max(np.abs(self.coeffs), initial=0.0))

    # -- evaluation -------------------------------------------------------

    def __call__(self, p):
        return synthesize(self, p)

    def jacobian(self, p):
        """Analytic partials: ``(..., 3)`` for scalars, ``(..., 3, 3)`` (``d_j X^i``) for vectors."""
        ks, cs = self._nonzero()
        p = np.asarray(p, dtype=float)
        phase = np.exp(1j * TWO_PI * (p @ ks.T))  # (..., M)
        dk = 1j * TWO_PI * ks  # (M, 3)
        if self.rank == 0:
            return np.real(np.einsum("...m,m,mj->...j", phase, cs, dk))
        return np.real(np.einsum("...m,mi,mj->...ij", phase, cs, dk))

    def as_pointfield(self, name: str = "") -> PointField:
        return PointField(self.__call__, self.jacobian, rank=self.rank, name=name or "spectral")

    def grid_values(self, M: int | None = None) -> np.ndarray:
        """Samples on the ``M^3`` grid ``x_j = j / M`` (exact for ``M >= 2N+1``)."""
        M = 2 * self.N + 1 if M is None else M
        if M < 2 * self.N + 1:
            raise AliasingError(f"grid {M} too coarse for truncation N={self.N}")
        shape = (M, M, M) + self.coeffs.shape[3:]
        full = np.zeros(shape, dtype=complex)
        r = np.arange(-self.N, self.N + 1) % M
        full[np.ix_(r, r, r)] = self.coeffs
        return np.real(np.fft.ifftn(full, axes=(0, 1, 2)) * M**3)

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        ks, cs = self._nonzero()
        rows = []
        for k, c in zip(ks.tolist(), cs):
            c = np.atleast_1d(c)
            rows.append({"k": k, "re": [float(x) for x in c.real], "im": [float(x) for x in c.imag]})
        return {"schema": SCHEMA, "N": self.N, "L": list(self.L), "rank": self.rank, "coefficients": rows}

    @classmethod
    def from_dict(cls, d) -> "SpectralField":
        if d.get("schema") != SCHEMA:
            raise ValueError(f"unsupported spectral field schema {d.get('schema')!r}")
        if [float(x) for x in d.get("L", [1, 1, 1])] != [1.0, 1.0, 1.0]:
            raise ValueError("only unit periods are supported")
        out = cls.zeros(int(d["N"]), int(d["rank"])).coeffs.copy()
        N = int(d["N"])
        for row in d["coefficients"]:
            val = np.array(row["re"], dtype=float) + 1j * np.array(row["im"], dtype=float)
            out[tuple(int(x) + N for x in row["k"])] = val if int(d["rank"]) == 1 else val[0]
        return cls(out)


# ---------------------------------------------------------------------------
# synthesis / analysis


def synthesize(field_: SpectralField, p) -> np.ndarray:
    """Point values of a (real) spectral field at ``p`` of shape ``(..., 3)``."""
    ks, cs = field_._nonzero()
    p = np.asarray(p, dtype=float)
    if p.shape[-1:] != (3,):
        raise ValueError("points need a trailing axis of length 3")
    phase = np.exp(1j * TWO_PI * (p @ ks.T))
    if field_.rank == 0:
        return np.real(phase @ cs) if ks.size else np.zeros(p.shape[:-1])
    return np.real(phase @ cs) if ks.size else np.zeros(p.shape)


def analyze(samples, N: int) -> SpectralField:
    """Fourier coefficients ``|k_i| <= N`` from samples on the grid ``x_j = j / M``."""
    samples = np.asarray(samples, dtype=float)
    M = samples.shape[0]
    if samples.shape[:3] != (M, M, M) or samples.ndim not in (3, 4):
        raise ValueError("samples must be an M^3 grid (optionally with 3 components)")
    if M < 2 * N + 1:
        raise AliasingError(f"grid resolution {M} < 2N+1 = {2 * N + 1}")
    full = np.fft.fftn(samples, axes=(0, 1, 2)) / M**3
    r = np.arange(-N, N + 1) % M
    return SpectralField(full[np.ix_(r, r, r)])


# ---------------------------------------------------------------------------
# differential operators


def _angular(field_: SpectralField) -> np.ndarray:
    return TWO_PI * field_.wavevectors().astype(float)


def curl_spec(X: SpectralField) -> SpectralField:
    """Exact curl: ``c(k) -> i K x c(k)`` with ``K = 2 pi k``."""
    X._require_rank(1)
    return SpectralField(1j * np.cross(_angular(X), X.coeffs))


def _curl_inv_coeffs(K: np.ndarray, c: np.ndarray) -> np.ndarray:
    k2 = np.sum(K * K, axis=-1)
    safe = np.where(k2 > 0, k2, 1.0)
    out = 1j * np.cross(K, c) / safe[..., None]
    return np.where((k2 > 0)[..., None], out, 0.0)


def check_admissible(X: SpectralField, rtol: float = 1e-10) -> None:
    """Raise unless ``X`` is mean-free and divergence-free."""
    X._require_rank(1)
    scale = max(X.max_abs_coeff(), np.finfo(float).tiny)
    if np.max(np.abs(X.mean())) > rtol * scale:
        raise PreconditionError("field has a non-zero mean (harmonic part); curl^-1 undefined")
    K = _angular(X)
    kn = np.sqrt(np.sum(K * K, axis=-1))
    kn[X.N, X.N, X.N] = 1.0
    longit = np.abs(np.sum(K * X.coeffs, axis=-1)) / kn
    if np.max(longit) > rtol * scale:
        raise PreconditionError("field is not divergence-free")


def curl_inv_spec(X: SpectralField) -> SpectralField:
    """Divergence-free, mean-free vector potential ``A`` with ``curl A = X``."""
    check_admissible(X)
    return SpectralField(_curl_inv_coeffs(_angular(X), X.coeffs))


def grad_spec(f: SpectralField) -> SpectralField:
    f._require_rank(0)
    return SpectralField(1j * _angular(f) * f.coeffs[..., None])


def div_spec(X: SpectralField) -> SpectralField:
    X._require_rank(1)
    return SpectralField(1j * np.sum(_angular(X) * X.coeffs, axis=-1))


def laplacian_spec(f: SpectralField) -> SpectralField:
    """Positive Laplacian: ``c(k) -> |2 pi k|^2 c(k)``."""
    K = _angular(f)
    k2 = np.sum(K * K, axis=-1)
    return SpectralField(f.coeffs * (k2 if f.rank == 0 else k2[..., None]))


def directional_derivative(v, X: SpectralField) -> SpectralField:
    """``(v . grad) X`` for a constant vector ``v``; equals ``[v, X]``."""
    v = np.asarray(v, dtype=float)
    factor = 1j * (_angular(X) @ v)
    return SpectralField(X.coeffs * (factor if X.rank == 0 else factor[..., None]))


def dot_const(v, X: SpectralField) -> SpectralField:
    X._require_rank(1)
    return SpectralField(X.coeffs @ np.asarray(v, dtype=float))


def cross_const(v, X: SpectralField) -> SpectralField:
    """``v x X`` for a constant vector ``v``."""
    X._require_rank(1)
    return SpectralField(np.cross(np.asarray(v, dtype=float), X.coeffs))


def scale_const(v, f: SpectralField) -> SpectralField:
    """The vector field ``f v`` for a scalar field ``f`` and constant ``v``."""
    f._require_rank(0)
    return SpectralField(f.coeffs[..., None] * np.asarray(v, dtype=float))


def helicity(X: SpectralField) -> float:
    """``<X, curl^{-1} X>`` over the unit cube."""
    return X.inner(curl_inv_spec(X))


def mirror(X: SpectralField) -> SpectralField:
    """Point reflection ``X(x) -> X(-x)``; flips the sign of every curl eigenvalue."""
    return SpectralField(X.coeffs[::-1, ::-1, ::-1])


# ---------------------------------------------------------------------------
# symmetric subspace and the discrete existence operator


@dataclass(frozen=True)
class SymmetricSubspace:
    """Fourier support of fields commuting with the translation ``Y = v``.

    ``modes`` holds the admitted non-zero wavevectors (``k . v = 0``) in
    lexicographic order.
    """

    direction: Direction
    N: int
    modes: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.modes)

    @property
    def is_empty(self) -> bool:
        return len(self.modes) == 0

    def mask(self) -> np.ndarray:
        n = 2 * self.N + 1
        m = np.zeros((n, n, n), dtype=bool)
        if len(self.modes):
            m[tuple((self.modes + self.N).T)] = True
        return m


def all_wavevectors(N: int) -> np.ndarray:
    """Non-zero wavevectors in ``{-N..N}^3``, lexicographic."""
    r = np.arange(-N, N + 1, dtype=np.int64)
    ks = np.stack(np.meshgrid(r, r, r, indexing="ij"), axis=-1).reshape(-1, 3)
    return ks[np.any(ks != 0, axis=1)]


def symmetric_mask(v, N: int) -> SymmetricSubspace:
    """Admitted wavevectors for the translation symmetry ``v`` at truncation ``N``."""
    if N < 0:
        raise ValueError("truncation must be non-negative")
    direction = Direction.parse(v)
    ks = all_wavevectors(N)
    keep = direction.annihilates(ks) if len(ks) else np.zeros(0, dtype=bool)
    return SymmetricSubspace(direction, N, ks[keep])


def project_symmetric(X: SpectralField, sub: SymmetricSubspace) -> SpectralField:
    """Orthogonal projection onto the admitted Fourier support (drops ``k = 0`` too)."""
    if X.N != sub.N:
        raise ValueError("truncation mismatch")
    m = sub.mask()
    return SpectralField(X.coeffs * (m if X.rank == 0 else m[..., None]))


def polarization_basis(k) -> np.ndarray:
    """Two real unit vectors spanning the plane orthogonal to ``k``.

    The first comes from Gram-Schmidt of the lowest-index coordinate axis not
    parallel to ``k``; the second is ``khat x e_a`` so ``(e_a, e_b, khat)``
    is right-handed.
    """
    k = np.asarray(k, dtype=float)
    khat = k / np.linalg.norm(k)
    for i in range(3):
        axis = np.zeros(3)
        axis[i] = 1.0
        if np.linalg.norm(np.cross(axis, khat)) > 1e-12:
            break
    ea = axis - (axis @ khat) * khat
    ea /= np.linalg.norm(ea)
    eb = np.cross(khat, ea)
    return np.stack([ea, eb])


@dataclass(frozen=True)
class OperatorMatrix:
    """Matrix of the projected inverse curl in the per-mode polarization basis.

    Row/column ``2 m + a`` is polarization ``a`` of admitted mode ``modes[m]``.
    """

    matrix: np.ndarray = field(repr=False)
    modes: np.ndarray = field(repr=False)
    polarizations: np.ndarray = field(repr=False)
    subspace: SymmetricSubspace

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def hermitian_residual(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0))

    def to_field(self, vec) -> SpectralField:
        """Spectral field with coefficients ``sum_a vec[2m+a] e_a(k_m)`` (not realified)."""
        N = self.subspace.N
        n = 2 * N + 1
        c = np.zeros((n, n, n, 3), dtype=complex)
        vec = np.asarray(vec)
        for m, k in enumerate(self.modes):
            c[tuple(k + N)] = vec[2 * m] * self.polarizations[m, 0] + vec[2 * m + 1] * self.polarizations[m, 1]
        return SpectralField(c)


def assemble_pi_curlinv(sub: SymmetricSubspace) -> OperatorMatrix:
    """Assemble ``pi o curl^{-1}`` restricted to the symmetric divergence-free fields."""
    if sub.is_empty:
        raise NoSymmetricFields(
            f"no wavevector k != 0 with k . v = 0 for v = {sub.direction.label} at N = {sub.N}"
        )
    modes = sub.modes
    pols = np.stack([polarization_basis(k) for k in modes])
    dim = 2 * len(modes)
    M = np.zeros((dim, dim), dtype=complex)
    K = TWO_PI * modes.astype(float)
    for m in range(len(modes)):
        for a in range(2):
            # curl^-1 maps mode k into itself, so pi acts as the identity here
            image = _curl_inv_coeffs(K[m], pols[m, a].astype(complex))
            for b in range(2):
                M[2 * m + b, 2 * m + a] = np.vdot(pols[m, b], image)
    return OperatorMatrix(M, modes, pols, sub)


@dataclass(frozen=True)
class Eigenpair:
    mu: float
    field: SpectralField
    multiplicity: int
    spectrum: np.ndarray = field(repr=False)


def _realify(op: OperatorMatrix, vec) -> SpectralField:
    X = op.to_field(vec)
    conj_partner = SpectralField(np.conj(X.coeffs[::-1, ::-1, ::-1]))
    real = X + conj_partner
    if real.norm() < 1e-8 * X.norm():
        real = (X - conj_partner) * 1j
    return real


def top_eigenpair(op: OperatorMatrix, rel_tol: float = 1e-10) -> Eigenpair:
    """Eigenvalue of largest modulus and a real eigenfield.

    Ties among equal ``|mu|`` are broken by the lexicographically smallest
    wavevector in the eigenvector's support, then positive ``mu`` first. The
    returned field is real, has unit L2 norm and satisfies
    ``curl X = X / mu``.
    """
    if op.dim == 0:
        raise NoSymmetricFields("empty operator")
    w, V = jacobi_eigh(op.matrix)
    top = np.max(np.abs(w))
    cand = [i for i in range(len(w)) if abs(abs(w[i]) - top) <= rel_tol * top]

    def key(i):
        weights = np.abs(V[:, i]).reshape(-1, 2).max(axis=1)
        m = int(np.argmax(weights > 1e-12 * weights.max()))
        return tuple(op.modes[m].tolist()), 0 if w[i] > 0 else 1

    best = min(cand, key=key)
    mu = float(w[best])
    same_sign = [i for i in cand if np.sign(w[i]) == np.sign(mu)]
    vec = V[:, best]
    j = int(np.argmax(np.abs(vec)))
    vec = vec * (np.conj(vec[j]) / abs(vec[j]))
    X = _realify(op, vec)
    X = X / X.norm()
    return Eigenpair(mu, X, len(same_sign), w)
