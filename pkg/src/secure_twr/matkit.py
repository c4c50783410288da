"""Dense complex linear-algebra primitives.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. All
decompositions use the thin (economy) form, Hermitian inputs are
symmetrized as ``(A + A^H) / 2`` before any eigensolve, and the
generalized eigenproblem is reduced through a Cholesky factor of the
right-hand matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

from .errors import DimensionError, NotHermitianError, SingularMatrixError

__all__ = [
    "EigPair",
    "as_cmatrix",
    "hermitian_part",
    "qr_orthonormal",
    "max_singular",
    "max_gen_eig",
    "max_eig_hermitian",
    "null_space_projector",
]


@dataclass(frozen=True)
class EigPair:
    """A real eigenvalue with its unit-norm eigenvector."""

    value: float
    vector: np.ndarray


def as_cmatrix(m, *, name: str = "matrix") -> np.ndarray:
    """Return ``m`` as a finite 2-D complex array, raising on bad input."""
    arr = np.asarray(m, dtype=complex)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.size == 0:
        raise DimensionError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise DimensionError(f"{name} has non-finite entries")
    return arr


def hermitian_part(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.conj().T)


def qr_orthonormal(m) -> tuple[np.ndarray, np.ndarray]:
    """Thin QR decomposition with a real non-negative diagonal in ``R``.

    ``Q`` has ``min(rows, cols)`` orthonormal columns and ``Q @ R``
    reproduces ``m``.
    """
    m = as_cmatrix(m)
    q, r = np.linalg.qr(m, mode="reduced")
    d = np.diagonal(r).copy()
    phase = np.ones_like(d)
    nz = np.abs(d) > 0
    phase[nz] = d[nz] / np.abs(d[nz])
    q = q * phase[None, :]
    r = phase.conj()[:, None] * r
    return q, r


def max_singular(m) -> float:
    m = as_cmatrix(m)
    return float(np.linalg.svd(m, compute_uv=False)[0])


def _check_square(a: np.ndarray, name: str) -> None:
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"{name} must be square, got {a.shape}")


def max_gen_eig(a, b) -> EigPair:
    """Largest generalized eigenpair of the Hermitian pencil ``(a, b)``.

    Solves ``a x = lam b x`` with ``b`` positive definite, so ``lam`` is the
    maximum of the Rayleigh ratio ``x^H a x / x^H b x``.

    Raises
    ------
    SingularMatrixError
        If ``b`` is not positive definite.
    """
    a = hermitian_part(as_cmatrix(a, name="A"))
    b = hermitian_part(as_cmatrix(b, name="B"))
    _check_square(a, "A")
    _check_square(b, "B")
    if a.shape != b.shape:
        raise DimensionError(f"A {a.shape} and B {b.shape} differ in size")
    if np.linalg.eigvalsh(b)[0] <= 1e-12:
        raise SingularMatrixError("B is not positive definite")
    low = sla.cholesky(b, lower=True)
    # C = L^{-1} A L^{-H}
    tmp = sla.solve_triangular(low, a, lower=True)
    c = sla.solve_triangular(low, tmp.conj().T, lower=True).conj().T
    w, y = np.linalg.eigh(hermitian_part(c))
    psi = sla.solve_triangular(low.conj().T, y[:, -1], lower=False)
    psi = psi / np.linalg.norm(psi)
    return EigPair(float(w[-1]), psi)


def max_eig_hermitian(a) -> EigPair:
    a = as_cmatrix(a, name="A")
    _check_square(a, "A")
    scale = np.linalg.norm(a)
    if np.linalg.norm(a - a.conj().T) > 1e-10 * scale:
        raise NotHermitianError("matrix is not Hermitian")
    w, v = np.linalg.eigh(hermitian_part(a))
    return EigPair(float(w[-1]), v[:, -1])


def null_space_projector(h) -> np.ndarray:
    """Orthogonal projector onto the null space of ``h``.

    Returns the zero matrix when the null space is trivial; callers decide
    what that degenerate case means.
    """
    h = as_cmatrix(h, name="H")
    cols = h.shape[1]
    _, s, vh = np.linalg.svd(h)
    tol = max(h.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    rank = int(np.sum(s > tol))
    basis = vh[rank:].conj().T
    return basis @ basis.conj().T if basis.shape[1] else np.zeros((cols, cols), complex)
