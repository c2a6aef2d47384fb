"""Small dense real-matrix helpers shared by the numeric modules.

Matrices and vectors are plain float64 ``numpy`` arrays; the functions here
add the dimension checks, the finite-entry checks and an explicit
singularity threshold on top of LAPACK's partially pivoted LU.
"""

from typing import NamedTuple
import warnings

import numpy as np
import scipy.linalg

from .errors import SingularMatrixError

PIVOT_RTOL = 1e-13


def as_matrix(a, name="matrix"):
    m = np.array(a, dtype=np.float64, copy=True)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError(f"{name} must be a non-empty 2-D array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


def as_vector(v, name="vector"):
    x = np.array(v, dtype=np.float64, copy=True)
    if x.ndim != 1 or x.shape[0] < 1:
        raise ValueError(f"{name} must be a non-empty 1-D array, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} has non-finite entries")
    return x


def matmul(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError("matmul expects two 2-D arrays")
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape} x {b.shape}")
    return a @ b


def _lu(a):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(a, check_finite=True)

    # piv[i] is the row swapped into position i at step i
    perm = np.arange(a.shape[0])
    for i, p in enumerate(piv):
        perm[i], perm[p] = perm[p], perm[i]
    row_scale = np.max(np.abs(a[perm]), axis=1)
    pivots = np.abs(np.diag(lu))
    bad = np.nonzero((row_scale == 0.0) | (pivots <= PIVOT_RTOL * row_scale))[0]
    if bad.size:
        i = int(bad[0])
        raise SingularMatrixError(
            f"matrix is singular to working precision (pivot {i}: "
            f"|u_ii|={pivots[i]:.3e}, row scale {row_scale[i]:.3e})",
            pivot_index=i,
        )
    return lu, piv


def solve_linear(a, b):
    """Solve ``a @ x = b`` by partially pivoted elimination.

    Raises ``SingularMatrixError`` when a pivot is below ``1e-13`` times the
    largest entry of its (permuted) source row.
    """
    b = np.asarray(b, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    if b.shape[0] != a.shape[0]:
        raise ValueError(f"rhs length {b.shape[0]} does not match {a.shape[0]} rows")
    lu, piv = _lu(a)
    return scipy.linalg.lu_solve((lu, piv), b, check_finite=False)


def inverse(a):
    a = np.asarray(a, dtype=np.float64)
    lu, piv = _lu(a)
    return scipy.linalg.lu_solve((lu, piv), np.eye(a.shape[0]), check_finite=False)


class SpectralRadius(NamedTuple):
    value: float
    converged: bool
    iterations: int


def spectral_radius_estimate(a, rtol=1e-10, max_iter=10_000):
    """Power-iteration estimate of the Perron root of a nonnegative matrix.

    Non-convergence is reported through ``converged`` rather than raised.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if np.any(a < 0):
        raise ValueError("spectral_radius_estimate expects a nonnegative matrix")
    x = np.full(a.shape[0], 1.0 / a.shape[0])
    est = 0.0
    for it in range(1, max_iter + 1):
        y = a @ x
        s = y.sum()
        if s == 0.0:
            return SpectralRadius(0.0, True, it)
        new = s / x.sum()
        x = y / s
        if abs(new - est) <= rtol * new:
            return SpectralRadius(float(new), True, it)
        est = new
    return SpectralRadius(float(est), False, max_iter)
