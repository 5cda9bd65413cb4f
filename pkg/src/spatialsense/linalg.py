"""Dense complex linear algebra for covariance-sized problems.

Householder QR and a shifted-QR eigensolver for Hermitian matrices, written
out explicitly rather than delegated to LAPACK: matrices here are tiny (a
handful of rows), the iteration itself is part of the processing chain being
studied, and tests check it against an independent oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DomainError, ShapeError

__all__ = [
    "EigenDecomposition",
    "as_matrix",
    "matmul",
    "hermitian",
    "qr_decompose",
    "evd_hermitian",
]

#: off-diagonal Frobenius mass below this fraction of ||A||_F counts as diagonal
EVD_CONVERGENCE_RTOL = 1e-10
#: per-eigenvalue deflation threshold, kept well under the convergence target
_DEFLATE_RTOL = 1e-13
EVD_MAX_ITERATIONS = 500


def as_matrix(a) -> np.ndarray:
    """Coerce to a 2-D complex128 ndarray with at least one row and column."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got {m.ndim} dims")
    if m.shape[0] < 1 or m.shape[1] < 1:
        raise ShapeError(f"matrix must be non-empty, got shape {m.shape}")
    return m


def frobenius(a) -> float:
    return math.sqrt(float(np.sum(np.abs(a) ** 2)))


def matmul(a, b) -> np.ndarray:
    """Complex matrix product a @ b with an explicit shape check."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ShapeError(
            f"cannot multiply {a.shape} by {b.shape}: inner dimensions differ",
            left=a.shape,
            right=b.shape,
        )
    return a @ b


def hermitian(a) -> np.ndarray:
    """Conjugate transpose (a new array, never a view)."""
    return as_matrix(a).conj().T.copy()


def qr_decompose(a):
    """Factor a square complex matrix as a = q @ r via Householder reflections.

    q is unitary and r upper-triangular.  Columns whose below-diagonal part is
    already zero are skipped, so triangular inputs come back unchanged and
    rank-deficient inputs produce zero diagonal entries in r instead of
    failing.

    Returns
    -------
    (q, r) : pair of ndarray
    """
    r = as_matrix(a).copy()
    n, m = r.shape
    if n != m:
        raise ShapeError(f"qr_decompose expects a square matrix, got {r.shape}")
    q = np.eye(n, dtype=np.complex128)
    for k in range(n - 1):
        x = r[k:, k]
        tail = math.sqrt(float(np.sum(np.abs(x[1:]) ** 2)))
        if tail == 0.0:
            continue  # column already triangular (includes zero columns)
        normx = math.sqrt(abs(x[0]) ** 2 + tail**2)
        x0 = x[0]
        phase = x0 / abs(x0) if abs(x0) > 0.0 else 1.0
        v = x.copy()
        v[0] += phase * normx
        vnorm2 = float(np.sum(np.abs(v) ** 2))
        if vnorm2 == 0.0:
            continue
        # apply H = I - 2 v v^H / (v^H v) from the left to r, from the right to q
        w = (v.conj() @ r[k:, k:]) * (2.0 / vnorm2)
        r[k:, k:] -= np.outer(v, w)
        u = (q[:, k:] @ v) * (2.0 / vnorm2)
        q[:, k:] -= np.outer(u, v.conj())
        r[k + 1 :, k] = 0.0
    return q, r


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues (real, descending) and matching eigenvector columns."""

    values: np.ndarray
    vectors: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.values)


def _wilkinson_shift(h, m) -> float:
    # eigenvalue of the trailing 2x2 block closest to its bottom-right entry
    a = h[m - 2, m - 2].real
    c = h[m - 1, m - 1].real
    b2 = abs(h[m - 2, m - 1]) ** 2
    if b2 == 0.0:
        return c
    d = 0.5 * (a - c)
    sign = 1.0 if d >= 0.0 else -1.0
    return c - b2 / (d + sign * math.hypot(d, math.sqrt(b2)))


def evd_hermitian(a, max_iterations=EVD_MAX_ITERATIONS) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix by iterated QR similarity.

    The input is symmetrized defensively after a Hermiticity check, then
    driven to diagonal form with shifted QR steps (the accumulated unitary is
    a similarity at every step, so trace and Frobenius norm are preserved
    throughout).  Eigenvalues come back sorted descending with eigenvector
    columns permuted along; ties keep their discovery order.

    Raises
    ------
    ShapeError
        Non-square input.
    DomainError
        Input is not Hermitian within tolerance.
    ConvergenceError
        Off-diagonal mass still above tolerance after ``max_iterations``
        QR steps; carries the final off-diagonal norm.
    """
    h = as_matrix(a)
    n, m = h.shape
    if n != m:
        raise ShapeError(f"evd_hermitian expects a square matrix, got {h.shape}")
    fro = frobenius(h)
    defect = frobenius(h - h.conj().T)
    if defect > 1e-8 * max(1.0, fro):
        raise DomainError(
            f"matrix is not Hermitian: asymmetry {defect:.3e} exceeds tolerance"
        )
    h = 0.5 * (h + h.conj().T)
    v = np.eye(n, dtype=np.complex128)
    if n == 1:
        return EigenDecomposition(values=h.real.diagonal().copy(), vectors=v)

    deflate_tol = _DEFLATE_RTOL * max(fro, np.finfo(float).tiny)
    active = n
    iterations = 0
    while active > 1:
        row_off = math.sqrt(float(np.sum(np.abs(h[active - 1, : active - 1]) ** 2)))
        if row_off <= deflate_tol:
            active -= 1
            continue
        if iterations >= max_iterations:
            off = frobenius(h - np.diag(h.diagonal()))
            raise ConvergenceError(
                f"QR iteration did not converge in {max_iterations} steps "
                f"(off-diagonal norm {off:.3e})",
                off_diagonal_norm=off,
            )
        mu = _wilkinson_shift(h, active)
        block = h[:active, :active] - mu * np.eye(active, dtype=np.complex128)
        q, r = qr_decompose(block)
        hb = r @ q + mu * np.eye(active, dtype=np.complex128)
        h[:active, :active] = 0.5 * (hb + hb.conj().T)
        if active < n:
            h[:active, active:] = q.conj().T @ h[:active, active:]
            h[active:, :active] = h[:active, active:].conj().T
        v[:, :active] = v[:, :active] @ q
        iterations += 1

    off = frobenius(h - np.diag(h.diagonal()))
    if off > EVD_CONVERGENCE_RTOL * max(fro, np.finfo(float).tiny):
        raise ConvergenceError(
            f"QR iteration stopped with off-diagonal norm {off:.3e}",
            off_diagonal_norm=off,
        )
    values = h.real.diagonal().copy()
    order = np.argsort(-values, kind="stable")
    values = values[order]
    vectors = v[:, order]
    vectors = vectors / np.sqrt(np.sum(np.abs(vectors) ** 2, axis=0))
    return EigenDecomposition(values=values, vectors=vectors)
