"""Dense complex-matrix kernel.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. The heavy
lifting is done by LAPACK through ``numpy.linalg``; this module adds the
validation and the post-condition checks that the rest of the package
relies on.

Tolerance ladder used throughout:

=================  =======
construction       1e-12
solver residuals   1e-10
derived checks     1e-9 / 1e-8
=================  =======
"""
import numpy as np

from .errors import ConvergenceError, NotPSDError, UsageError

HERMITIAN_TOL = 1e-12
RESIDUAL_TOL = 1e-10
CLAMP_TOL = 1e-10
IMAG_TOL = 1e-8
MAX_GENERAL_DIM = 16

SIGMA_Y = np.array([[0, -1j], [1j, 0]])
SIGMA_YY = np.kron(SIGMA_Y, SIGMA_Y)


def as_matrix(a, hermitian=False, tol=HERMITIAN_TOL):
    """Return ``a`` as a square complex array, optionally checking Hermiticity.

    The Hermitian check is relative: ``max|A - A^H| <= tol * max(1, max|A|)``.
    A Hermitian-flagged result is exactly symmetrised.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise UsageError(f"expected a square matrix, got shape {a.shape}")
    if hermitian:
        scale = max(1.0, float(np.abs(a).max(initial=0.0)))
        skew = float(np.abs(a - a.conj().T).max(initial=0.0))
        if skew > tol * scale:
            raise UsageError(f"matrix is not Hermitian (max |A - A^H| = {skew:.3e})")
        a = (a + a.conj().T) / 2
    return a


def hermitian_eigensystem(a):
    """Eigen-decomposition of a Hermitian matrix.

    Returns ``(w, v)`` with real eigenvalues ``w`` in ascending order and
    orthonormal eigenvectors in the columns of ``v``.
    """
    a = as_matrix(a, hermitian=True)
    try:
        w, v = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"Hermitian eigensolver failed: {exc}") from exc
    scale = max(1.0, float(np.abs(a).max(initial=0.0)))
    residual = float(np.abs(a - (v * w) @ v.conj().T).max(initial=0.0))
    if residual > RESIDUAL_TOL * scale:
        raise ConvergenceError("Hermitian eigensolver did not reach tolerance", residual)
    return w, v


def clamp_spectrum(w, tol=CLAMP_TOL):
    """Clamp eigenvalues in ``[-tol, 0)`` to zero; raise on anything more negative."""
    w = np.asarray(w, dtype=float)
    if w.size and w.min() < -tol:
        raise NotPSDError(w.min())
    return np.where(w < 0, 0.0, w)


def psd_sqrt(a):
    """Principal square root of a positive semidefinite Hermitian matrix."""
    w, v = hermitian_eigensystem(a)
    w = clamp_spectrum(w)
    return (v * np.sqrt(w)) @ v.conj().T


def general_eigenvalues(a):
    """Eigenvalues of a small square (not necessarily normal) matrix."""
    a = as_matrix(a)
    if a.shape[0] > MAX_GENERAL_DIM:
        raise UsageError(f"general eigensolver is limited to dimension {MAX_GENERAL_DIM}")
    try:
        w = np.linalg.eigvals(a)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"general eigensolver failed: {exc}") from exc
    det = np.linalg.det(a)
    residual = abs(np.prod(w) - det)
    if residual > 1e-8 * max(1.0, abs(det)):
        raise ConvergenceError("eigenvalue product does not match determinant", residual)
    return w


def real_spectrum(w, imag_tol=IMAG_TOL, clamp_tol=CLAMP_TOL):
    """Project a theoretically real, nonnegative spectrum onto the reals.

    Imaginary parts up to ``imag_tol`` are dropped, larger ones raise.
    """
    w = np.asarray(w, dtype=complex)
    if w.size and np.abs(w.imag).max() > imag_tol:
        raise ConvergenceError("spectrum expected real", np.abs(w.imag).max())
    return np.sort(clamp_spectrum(w.real, clamp_tol))
