"""Direct stationary solve of the truncated chain.

Independent of the matrix-geometric route: no blocks, no ``R``.  The
generator is assembled from the transition rules up to a truncation level
(customer arrivals disabled at the top), ``pi Q = 0`` is solved with one
balance equation replaced by ``sum(pi) = 1``, and the truncation is doubled
until the mass on the top two levels is negligible.
"""

from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import splu

from . import kernels
from .errors import ConvergenceError, NearInstabilityError
from .linalg import solve_linear
from .metrics import Metrics
from .model import StateSpace, assemble_truncated_generator, sparse_truncated_generator

DENSE_LIMIT = 2000
MAX_LEVEL_CAP = 4096
DEFAULT_TAIL_TOL = 1e-12
POWER_MAX_ITER = 20_000


@dataclass(frozen=True)
class OracleSolution:
    params: object
    max_level: int
    pi: np.ndarray
    tail_mass: float
    residual: float
    method: str
    tail_ok: bool = True

    @property
    def space(self):
        return StateSpace(self.params.K)

    def level(self, n):
        if n > self.max_level:
            return np.zeros(self.space.phase_count(n))
        return self.pi[self.space.level_slice(n)]

    def levels(self):
        return [self.level(n) for n in range(self.max_level + 1)]

    def states(self):
        return self.space.arrays(self.max_level)


def _top_mass(pi, space, max_level):
    return float(pi[space.offset(max_level - 1):].sum())


def _dense_solve(params, max_level):
    q = assemble_truncated_generator(params, max_level)
    a = q.T.copy()
    a[-1, :] = 1.0
    b = np.zeros(q.shape[0])
    b[-1] = 1.0
    pi = solve_linear(a, b)
    pi = np.maximum(pi, 0.0)
    pi /= pi.sum()
    return pi, float(np.max(np.abs(pi @ q)))


def _sparse_lu_solve(q):
    a = q.T.tolil()
    a[-1, :] = 1.0
    b = np.zeros(q.shape[0])
    b[-1] = 1.0
    pi = splu(a.tocsc()).solve(b)
    pi = np.maximum(pi, 0.0)
    return pi / pi.sum()


def _power_solve(params, max_level, start, tol=1e-12, max_iter=POWER_MAX_ITER):
    """Uniformised power iteration; returns ``(pi, residual, method)``.

    Slowly mixing chains (close to instability) can exhaust ``max_iter``;
    those fall back to a sparse LU solve, which is kept only if its residual
    is acceptable.
    """
    q = sparse_truncated_generator(params, max_level)
    rate = 1.05 * float(np.max(-q.diagonal()))
    x = np.array(start, dtype=np.float64)
    x /= x.sum()
    iterations, change = kernels.uniformized_power(
        q.indptr.astype(np.int64), q.indices.astype(np.int64), q.data.astype(np.float64),
        rate, x, tol, max_iter,
    )
    residual = float(np.max(np.abs(q.T @ x)))
    if change <= tol:
        return x, residual, "power"
    pi = _sparse_lu_solve(q)
    lu_residual = float(np.max(np.abs(q.T @ pi)))
    if lu_residual > 1e-10:
        raise ConvergenceError(
            f"power iteration stalled at level {max_level} (change {change:.3e}) "
            f"and the sparse LU fallback left residual {lu_residual:.3e}",
            iterations=iterations,
            residual=residual,
        )
    return pi, lu_residual, "sparse-lu"


def solve_at(params, max_level, start=None):
    """Stationary vector of the chain truncated at ``max_level``.

    Dense elimination up to ``DENSE_LIMIT`` states, uniformised power
    iteration (warm-started from ``start`` when given) above that, with a
    sparse LU fallback when the iteration stalls.
    """
    space = StateSpace(params.K)
    size = space.size(max_level)
    if size <= DENSE_LIMIT:
        pi, residual = _dense_solve(params, max_level)
        method = "dense"
    else:
        if start is None:
            start = np.full(size, 1.0 / size)
        pi, residual, method = _power_solve(params, max_level, start)
    return OracleSolution(
        params=params,
        max_level=max_level,
        pi=pi,
        tail_mass=_top_mass(pi, space, max_level),
        residual=residual,
        method=method,
    )


def solve_truncated(params, tail_tol=DEFAULT_TAIL_TOL, max_level=None):
    """Double the truncation from ``max(4K, 32)`` until the tail is below ``tail_tol``.

    With an explicit ``max_level`` a single solve is done and an excessive
    tail is flagged in ``tail_ok`` instead of raised.
    """
    if max_level is not None:
        sol = solve_at(params, max_level)
        return _flag(sol, tail_tol)

    level = max(4 * params.K, 32)
    sol = None
    while True:
        start = None
        if sol is not None:
            size = StateSpace(params.K).size(level)
            start = np.zeros(size)
            start[: sol.pi.size] = sol.pi
            start += 1e-300
        sol = solve_at(params, level, start=start)
        if sol.tail_mass < tail_tol:
            return sol
        if level >= MAX_LEVEL_CAP:
            raise NearInstabilityError(
                f"tail mass {sol.tail_mass:.3e} still above {tail_tol:.1e} at level {level}",
                max_level=level,
                tail_mass=sol.tail_mass,
            )
        level = min(2 * level, MAX_LEVEL_CAP)


def _flag(sol, tail_tol):
    if sol.tail_mass < tail_tol:
        return sol
    return OracleSolution(**{**sol.__dict__, "tail_ok": False})


def oracle_metrics(sol):
    """Metrics by direct summation over the truncated states."""
    n, k = sol.states()
    pi = sol.pi
    total = float(pi @ (n + k))
    waiting = float(pi @ np.where(k <= n, n - k, 0))
    delay = float(pi[(n >= 1) & (k <= n)].sum())
    return Metrics.from_values(total, waiting, delay, sol.params.lambda_c, source="oracle")


@dataclass(frozen=True)
class Comparison:
    per_level: np.ndarray
    max_diff: float
    worst_level: int
    tol: float

    @property
    def passed(self):
        return self.max_diff <= self.tol


def compare(ss, sol, tol=1e-8):
    """Per-level max absolute difference between ``ss`` and the oracle."""
    diffs = np.array([
        float(np.max(np.abs(ss.level(n) - sol.level(n))))
        for n in range(sol.max_level + 1)
    ])
    worst = int(np.argmax(diffs))
    return Comparison(per_level=diffs, max_diff=float(diffs[worst]), worst_level=worst, tol=tol)
