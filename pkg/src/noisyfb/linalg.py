"""Dense symmetric linear algebra.

Everything here works on plain ``numpy`` arrays.  Matrices in this package are
small (n <= 64 for covariances, 3n for the largest LMI), so dense storage and
LAPACK calls are used throughout.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack

from .exceptions import NotPositiveDefinite

# pivot > PD_RTOL * max(diag(A)) counts as positive
PD_RTOL = 1e-12


def as_sym(a, check=True, atol=1e-10):
    """Return ``a`` as a float64 symmetric matrix.

    The result is exactly symmetric: the input is averaged with its transpose
    after (optionally) checking it is symmetric up to ``atol`` relative to its
    largest entry.
    """
    a = np.array(a, dtype=float, ndmin=2)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError(f"expected a non-empty square matrix, got shape {a.shape}")
    if check:
        scale = max(1.0, float(np.max(np.abs(a))))
        if np.max(np.abs(a - a.T)) > atol * scale:
            raise ValueError("matrix is not symmetric")
    return 0.5 * (a + a.T)


@dataclass(frozen=True)
class CholeskyFactor:
    """Lower-triangular ``L`` with ``L @ L.T`` equal to the factored matrix."""

    L: np.ndarray

    @property
    def n(self):
        return self.L.shape[0]

    def log_det(self):
        return 2.0 * float(np.sum(np.log(np.diag(self.L))))

    def solve(self, b):
        b = np.asarray(b, dtype=float)
        x, info = lapack.dpotrs(self.L, b, lower=1)
        if info != 0:
            raise ValueError(f"dpotrs failed with info={info}")
        return x

    def inverse(self):
        inv, info = lapack.dpotri(self.L, lower=1)
        if info != 0:
            raise NotPositiveDefinite(info)
        inv = np.tril(inv)
        return inv + np.tril(inv, -1).T


def cholesky(a):
    """Factor a symmetric positive definite matrix.

    Raises :class:`NotPositiveDefinite` with the (0-based) index of the first
    failing pivot when a pivot is not above ``PD_RTOL * max(diag(a))``.
    Only the lower triangle is read; use :func:`as_sym` to validate symmetry.
    """
    a = np.asarray(a, dtype=float)
    diag = np.diag(a)
    if diag.size == 0:
        raise ValueError("empty matrix")
    floor = PD_RTOL * max(float(np.max(diag)), 0.0)
    L, info = lapack.dpotrf(a, lower=1, clean=1)
    if info > 0:
        raise NotPositiveDefinite(info - 1)
    if info < 0:
        raise ValueError(f"dpotrf argument {-info} invalid")
    pivots = np.diag(L) ** 2
    bad = np.flatnonzero(~(pivots > floor))
    if bad.size:
        raise NotPositiveDefinite(int(bad[0]))
    return CholeskyFactor(L)


def log_det(a):
    """Natural-log determinant of a positive definite matrix."""
    return cholesky(a).log_det()


def solve_spd(a, b):
    return cholesky(a).solve(b)


def sym_eigenvalues(a):
    """Eigenvalues of a symmetric matrix in ascending order."""
    return np.linalg.eigvalsh(np.asarray(a, dtype=float))


def toeplitz(autocov, n):
    """Symmetric Toeplitz matrix with ``entries[i, j] = autocov[|i - j|]``.

    ``autocov`` shorter than ``n`` is padded with zeros.
    """
    r = np.zeros(n)
    src = np.asarray(autocov, dtype=float).ravel()[:n]
    r[: src.size] = src
    idx = np.abs(np.subtract.outer(np.arange(n), np.arange(n)))
    return r[idx]
