"""Cyclic Jacobi eigensolver for Hermitian matrices."""

from __future__ import annotations

import numpy as np


def _rotation(app: float, aqq: float, apq: complex) -> np.ndarray:
    """Unitary 2x2 ``G`` with ``G^H [[app, apq], [conj(apq), aqq]] G`` diagonal."""
    r = abs(apq)
    phase = apq / r
    tau = (aqq - app) / (2.0 * r)
    t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + np.sqrt(1.0 + tau * tau))
    c = 1.0 / np.sqrt(1.0 + t * t)
    s = t * c
    # phase fix makes the block real symmetric, then a real Givens rotation
    return np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]], dtype=complex)


def jacobi_eigh(A, tol: float = 1e-15, max_sweeps: int = 60):
    """Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Each sweep visits the off-diagonal entries that are above threshold at
    the start of the sweep, in row-major order, which makes the result fully
    deterministic. Entries exactly zero are never rotated, so block-diagonal
    structure is preserved and eigenvectors stay inside their blocks.

    Args:
        A: square Hermitian matrix.
        tol: convergence threshold relative to the Frobenius norm.
        max_sweeps: hard cap on the number of sweeps.

    Returns:
        ``(w, V)`` with real eigenvalues ``w`` in ascending order and the
        matching orthonormal eigenvectors in the columns of ``V``.
    """
    A = np.array(A, dtype=complex)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValueError("matrix must be square")
    if n and np.max(np.abs(A - A.conj().T)) > 1e-12 * max(1.0, np.max(np.abs(A))):
        raise ValueError("matrix is not Hermitian")
    A = 0.5 * (A + A.conj().T)
    V = np.eye(n, dtype=complex)
    scale = np.linalg.norm(A) if n else 0.0
    thresh = tol * max(scale, np.finfo(float).tiny)

    for _ in range(max_sweeps):
        off = np.triu(np.abs(A), k=1)
        rows, cols = np.nonzero(off > thresh)
        if rows.size == 0:
            break
        for p, q in zip(rows.tolist(), cols.tolist()):
            apq = A[p, q]
            if abs(apq) <= thresh:
                continue
            G = _rotation(A[p, p].real, A[q, q].real, apq)
            idx = [p, q]
            A[:, idx] = A[:, idx] @ G
            A[idx, :] = G.conj().T @ A[idx, :]
            A[p, q] = A[q, p] = 0.0
            A[p, p] = A[p, p].real
            A[q, q] = A[q, q].real
            V[:, idx] = V[:, idx] @ G
    else:
        raise RuntimeError("Jacobi iteration did not converge")

    w = np.real(np.diag(A))
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]
