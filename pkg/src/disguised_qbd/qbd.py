"""Matrix-geometric stationary distribution.

Levels ``0 .. K-1`` are solved directly from the boundary equations; every
higher level follows from ``pi_n = pi_{K-1} R^(n-K+1)``, where ``R`` is the
minimal nonnegative solution of ``R^2 A0 + R A_repeat + A1 = 0``.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConvergenceError, InstabilityError
from .linalg import inverse, solve_linear, spectral_radius_estimate
from .model import StateSpace, build_blocks
from .stability import ergodicity

DEFAULT_R_TOL = 1e-12
DEFAULT_MAX_ITER = 100_000
DEFAULT_BOUNDARY_TOL = 1e-9


@dataclass(frozen=True)
class SteadyState:
    """Normalised boundary vectors plus the rate matrix.

    ``boundary[n]`` is the distribution over phases of level ``n`` for
    ``n < K``; for ``K = 3`` these are ``pi0``, ``pi1`` and ``pi2``.
    """

    boundary: tuple
    R: np.ndarray
    alpha: float
    r_iterations: int
    r_residual: float
    K: int

    @property
    def pi0(self):
        return self.boundary[0]

    @property
    def pi1(self):
        return self.boundary[1]

    @property
    def pi2(self):
        return self.boundary[2]

    @property
    def last(self):
        """Distribution of level ``K - 1``, the base of the geometric tail."""
        return self.boundary[-1]

    def level(self, n):
        return level_distribution(self, n)

    def levels(self, max_level):
        return [level_distribution(self, n) for n in range(max_level + 1)]

    def flat(self, max_level):
        """All state probabilities up to ``max_level`` in state-space order."""
        return np.concatenate(self.levels(max_level))

    def total_mass(self):
        head = sum(float(p.sum()) for p in self.boundary[:-1])
        m = self.R.shape[0]
        return head + float(self.last @ inverse(np.eye(m) - self.R) @ np.ones(m))


def compute_R(blocks, tol=DEFAULT_R_TOL, max_iter=DEFAULT_MAX_ITER):
    """Fixed-point iteration ``R <- -A1 A2^-1 - R^2 A0 A2^-1`` from ``R = 0``.

    Returns ``(R, iterations, residual)``; raises ``ConvergenceError`` when
    ``max_iter`` is exhausted and ``SingularMatrixError`` for a singular
    repeating block.
    """
    A0, A1, A2 = blocks.A0, blocks.A1, blocks.A_repeat
    A2_inv = inverse(A2)
    V = A1 @ A2_inv
    W = A0 @ A2_inv
    R, iterations, change, residual, ok = kernels.r_fixed_point(
        np.ascontiguousarray(V), np.ascontiguousarray(W),
        np.ascontiguousarray(A0), np.ascontiguousarray(A1), np.ascontiguousarray(A2),
        float(tol), int(max_iter),
    )
    if not ok:
        raise ConvergenceError(
            f"R iteration did not converge in {iterations} iterations "
            f"(last change {change:.3e}, residual {residual:.3e})",
            iterations=iterations,
            residual=residual,
        )
    return np.maximum(R, 0.0), int(iterations), float(residual)


def _boundary_matrix(blocks, R):
    """Block matrix M with ``(pi_0, ..., pi_{K-1}) M = 0``."""
    K = blocks.K
    space = StateSpace(K)
    size = space.offset(K)
    M = np.zeros((size, size))
    for n in range(K):
        s = space.level_slice(n)
        M[s, s] = blocks.local[n]
        if n < K - 1:
            M[s, space.level_slice(n + 1)] = blocks.up[n]
        if n >= 1:
            M[s, space.level_slice(n - 1)] = blocks.down[n - 1]
    last = space.level_slice(K - 1)
    M[last, last] += R @ blocks.A0
    return M


def solve_boundary(blocks, R, tol=DEFAULT_BOUNDARY_TOL):
    """Unnormalised boundary vectors with ``pi_00 = 1``.

    The first balance equation is dropped and the rest solved for the other
    unknowns.  Raises ``ArithmeticError`` if the substituted residual of the
    full system (with the boundary scaled to unit mass) exceeds ``tol``.
    """
    if not blocks.is_level_independent:
        raise ValueError("boundary solve needs rates constant from level K on")
    M = _boundary_matrix(blocks, R)
    Mt = M.T
    x = solve_linear(Mt[1:, 1:], -Mt[1:, 0])
    pi = np.concatenate([[1.0], x])
    # measured on the boundary scaled to unit mass; pi_00 = 1 is arbitrary
    residual = float(np.max(np.abs(pi @ M)) / np.abs(pi).sum())
    if residual > tol:
        raise ArithmeticError(f"boundary residual {residual:.3e} exceeds {tol:.1e}")
    space = StateSpace(blocks.K)
    return tuple(pi[space.level_slice(n)] for n in range(blocks.K))


def normalize(boundary, R, K=None, r_iterations=0, r_residual=0.0):
    boundary = tuple(np.asarray(p, dtype=np.float64) for p in boundary)
    K = len(boundary) if K is None else K
    m = R.shape[0]
    rho = spectral_radius_estimate(np.maximum(R, 0.0))
    if rho.value >= 1.0:
        raise ArithmeticError(f"spectral radius of R is {rho.value:.6f} >= 1; not normalisable")
    tail = inverse(np.eye(m) - R) @ np.ones(m)
    alpha = sum(float(p.sum()) for p in boundary[:-1]) + float(boundary[-1] @ tail)
    return SteadyState(
        boundary=tuple(p / alpha for p in boundary),
        R=R,
        alpha=alpha,
        r_iterations=r_iterations,
        r_residual=r_residual,
        K=K,
    )


def level_distribution(ss, n):
    if n < 0:
        raise ValueError("level must be >= 0")
    if n < ss.K:
        return ss.boundary[n]
    return ss.last @ np.linalg.matrix_power(ss.R, n - ss.K + 1)


def solve(params, r_tol=DEFAULT_R_TOL, max_iter=DEFAULT_MAX_ITER, boundary_tol=DEFAULT_BOUNDARY_TOL):
    """Stability check, blocks, ``R``, boundary solve and normalisation."""
    if params.tail_start > params.K:
        raise ValueError(
            "matrix-geometric solve needs server rates constant from level K on; "
            "use the truncated oracle for this parameter set"
        )
    report = ergodicity(params)
    if not report.stable:
        raise InstabilityError(
            f"unstable: rho_c={report.rho_c:.6g} >= threshold {report.threshold:.6g}",
            report,
        )
    blocks = build_blocks(params)
    R, iterations, residual = compute_R(blocks, tol=r_tol, max_iter=max_iter)
    boundary = solve_boundary(blocks, R, tol=boundary_tol)
    return normalize(boundary, R, K=params.K, r_iterations=iterations, r_residual=residual)
