"""Dense complex matrix kernel.

Frobenius inner product and norm, Hermitian eigendecomposition and singular
values.  Eigen/SVD work is delegated to LAPACK through numpy; the functions
here add the input validation and ordering guarantees the rest of the
package relies on.
"""

import numpy as np

from .errors import DimensionError, NumericError, ValidationError

HERMITIAN_TOL = 1e-12


def as_matrix(a, name="matrix"):
    """Return ``a`` as a finite 2-D complex array."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError(f"{name} has non-finite entries")
    return m


def frobenius_inner(a, b):
    """Tr(a b^dagger) for two matrices of identical shape."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    return complex(np.sum(a * b.conj()))


def frobenius_norm(a):
    a = np.asarray(a, dtype=complex)
    return float(np.sqrt(np.sum(a.real**2 + a.imag**2)))


def is_hermitian(h, tol=HERMITIAN_TOL):
    h = np.asarray(h)
    return h.ndim == 2 and h.shape[0] == h.shape[1] and np.max(np.abs(h - h.conj().T), initial=0.0) <= tol


def hermitian_eigen(h, tol=HERMITIAN_TOL):
    """Eigenvalues (ascending) and orthonormal eigenvector columns of ``h``.

    Raises ValidationError if ``h`` is not square and Hermitian to ``tol``
    (max elementwise deviation), NumericError if LAPACK fails to converge.
    Real symmetric input is diagonalized in real arithmetic.
    """
    h = as_matrix(h, "h")
    if h.shape[0] != h.shape[1]:
        raise DimensionError(f"h must be square, got {h.shape}")
    dev = np.max(np.abs(h - h.conj().T), initial=0.0)
    if dev > tol:
        raise ValidationError(f"h is not Hermitian (max |h - h^dagger| = {dev:.3e})")
    try:
        if not np.any(h.imag):
            w, v = np.linalg.eigh(h.real)
        else:
            w, v = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigensolver failed: {exc}") from exc
    return w, v


def singular_values(a):
    """Singular values of ``a`` in descending order."""
    a = as_matrix(a, "a")
    try:
        return np.linalg.svd(a, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"SVD failed: {exc}") from exc


def batched_singular_values(stack):
    """Singular values of each matrix in a (T, m, n) stack, descending per row."""
    stack = np.asarray(stack, dtype=complex)
    try:
        return np.linalg.svd(stack, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"SVD failed: {exc}") from exc
