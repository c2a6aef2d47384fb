"""Model parameters, the (customers, servers) state space and the generator.

Levels are customer counts ``n``; phases are server counts ``k`` with
``0 <= k <= min(n + 1, K)``.  States are ordered level-major, then by ``k``,
so for ``K = 3`` the order is (0,0), (0,1), (1,0), (1,1), (1,2), (2,0), ...

The generator is only ever built from the four transition rules below; the
QBD blocks are sliced out of it afterwards.

* customer arrival   (n, k) -> (n+1, k)  at ``lambda_c``
* service completion (n, k) -> (n-1, k)  at ``min(n, k) * mu`` when ``k <= n``
  (a server that outnumbers the customers is dormant and serves nobody)
* server arrival     (n, k) -> (n, k+1)  at ``lambda_s[n]`` when ``k < n`` and ``k < K``
* server departure   (n, k) -> (n, k-1)  at ``mu_s[n]`` when ``k >= 1``
"""

from dataclasses import dataclass, field, replace
import math
from typing import NamedTuple

import numpy as np
import scipy.sparse

from .errors import InvalidStateError

CUSTOMER_ARRIVAL = 0
SERVICE_COMPLETION = 1
SERVER_ARRIVAL = 2
SERVER_DEPARTURE = 3

EVENT_NAMES = (
    "customer-arrival",
    "service-completion",
    "server-arrival",
    "server-departure",
)


def _rate_sequence(value, name):
    if np.isscalar(value):
        seq = (float(value),)
    else:
        seq = tuple(float(x) for x in value)
    if not seq:
        raise ValueError(f"{name} must have at least one entry")
    return seq


@dataclass(frozen=True)
class ModelParams:
    """Rates of the disguised-server queue.

    ``server_arrival`` and ``server_departure`` are per-level sequences whose
    last entry repeats for every higher level, so a scalar (or a length-1
    sequence) means constant rates.
    """

    lambda_c: float
    mu: float
    server_arrival: tuple = field(default=(1.0,))
    server_departure: tuple = field(default=(1.0,))
    K: int = 3

    def __post_init__(self):
        object.__setattr__(self, "lambda_c", float(self.lambda_c))
        object.__setattr__(self, "mu", float(self.mu))
        lam = _rate_sequence(self.server_arrival, "server_arrival")
        dep = _rate_sequence(self.server_departure, "server_departure")
        object.__setattr__(self, "server_arrival", lam)
        object.__setattr__(self, "server_departure", dep)
        if isinstance(self.K, bool) or int(self.K) != self.K or self.K < 1:
            raise ValueError(f"K must be an integer >= 1, got {self.K!r}")
        object.__setattr__(self, "K", int(self.K))

        rates = (self.lambda_c, self.mu) + lam + dep
        if not all(math.isfinite(r) for r in rates):
            raise ValueError("all rates must be finite")
        if self.lambda_c < 0:
            raise ValueError("lambda_c must be >= 0")
        if self.mu <= 0:
            raise ValueError("mu must be > 0")
        if any(r < 0 for r in lam):
            raise ValueError("server arrival rates must be >= 0")
        if any(r <= 0 for r in dep):
            raise ValueError("server departure rates must be > 0")

    @classmethod
    def constant(cls, lambda_c, mu, lambda_s, mu_s, K=3):
        return cls(lambda_c, mu, (lambda_s,), (mu_s,), K)

    def replace(self, **changes):
        """Copy with some fields changed; ``lambda_s``/``mu_s`` set constant rates."""
        if "lambda_s" in changes:
            changes["server_arrival"] = (changes.pop("lambda_s"),)
        if "mu_s" in changes:
            changes["server_departure"] = (changes.pop("mu_s"),)
        return replace(self, **changes)

    def lambda_s_at(self, n):
        seq = self.server_arrival
        return seq[min(n, len(seq) - 1)]

    def mu_s_at(self, n):
        seq = self.server_departure
        return seq[min(n, len(seq) - 1)]

    @property
    def lambda_s(self):
        return self.server_arrival[-1]

    @property
    def mu_s(self):
        return self.server_departure[-1]

    @property
    def tail_start(self):
        """First level from which the server rates no longer change."""
        return max(len(self.server_arrival), len(self.server_departure)) - 1

    @property
    def rho_c(self):
        return self.lambda_c / self.mu

    @property
    def rho_s(self):
        return self.lambda_s / self.mu_s

    def rate_arrays(self, levels):
        """Per-level server rates for ``n = 0 .. levels - 1`` as float arrays."""
        n = np.arange(levels)
        lam = np.asarray(self.server_arrival)[np.minimum(n, len(self.server_arrival) - 1)]
        dep = np.asarray(self.server_departure)[np.minimum(n, len(self.server_departure) - 1)]
        return lam, dep


class State(NamedTuple):
    n: int
    k: int


class StateSpace:
    """Level-major enumeration of ``(n, k)`` states for a server cap ``K``."""

    def __init__(self, K):
        self.K = int(K)

    def phase_count(self, n):
        return min(n + 1, self.K) + 1

    def offset(self, n):
        """Flat index of state ``(n, 0)``."""
        K = self.K
        if n <= K:
            # levels 0..n-1 have 2, 3, ..., n+1 phases
            return n * (n + 3) // 2
        return K * (K + 3) // 2 + (n - K) * (K + 1)

    def size(self, max_level):
        return self.offset(max_level + 1)

    def is_valid(self, state):
        n, k = state
        return n >= 0 and 0 <= k <= min(n + 1, self.K)

    def index(self, state):
        if not self.is_valid(state):
            raise InvalidStateError(f"{tuple(state)} is not a state for K={self.K}")
        return self.offset(state[0]) + state[1]

    def state(self, index):
        if index < 0:
            raise IndexError(index)
        n = 0
        while self.offset(n + 1) <= index:
            n += 1
        return State(n, index - self.offset(n))

    def arrays(self, max_level):
        """``(n, k)`` integer arrays for every state with ``n <= max_level``."""
        counts = [self.phase_count(n) for n in range(max_level + 1)]
        n = np.repeat(np.arange(max_level + 1), counts)
        starts = np.repeat(np.array([self.offset(m) for m in range(max_level + 1)]), counts)
        k = np.arange(n.size) - starts
        return n, k

    def level_slice(self, n):
        return slice(self.offset(n), self.offset(n + 1))


def transition_rates(params, s):
    """Enabled transitions out of ``s`` as ``[(State, rate), ...]``."""
    space = StateSpace(params.K)
    n, k = s
    if not space.is_valid((n, k)):
        raise InvalidStateError(f"{(n, k)} is not a state for K={params.K}")
    out = []
    for kind, target, rate in _enabled(params, n, k):
        out.append((target, rate))
    return out


def _enabled(params, n, k):
    moves = []
    if params.lambda_c > 0:
        moves.append((CUSTOMER_ARRIVAL, State(n + 1, k), params.lambda_c))
    if 1 <= k <= n:
        moves.append((SERVICE_COMPLETION, State(n - 1, k), min(n, k) * params.mu))
    if k < n and k < params.K and params.lambda_s_at(n) > 0:
        moves.append((SERVER_ARRIVAL, State(n, k + 1), params.lambda_s_at(n)))
    if k >= 1:
        moves.append((SERVER_DEPARTURE, State(n, k - 1), params.mu_s_at(n)))
    return moves


def generator_triplets(params, max_level):
    """Off-diagonal entries ``(rows, cols, rates)`` of the truncated generator.

    Customer arrivals are switched off at ``max_level``; every other rule is
    kept, so the truncated matrix is itself a proper generator.
    """
    space = StateSpace(params.K)
    n, k = space.arrays(max_level)
    idx = np.arange(n.size)
    offsets = np.array([space.offset(m) for m in range(max_level + 2)])
    lam_s, mu_s = params.rate_arrays(max_level + 1)
    K = params.K

    rows, cols, rates = [], [], []

    m = n < max_level
    if params.lambda_c > 0:
        rows.append(idx[m])
        cols.append(offsets[n[m] + 1] + k[m])
        rates.append(np.full(m.sum(), params.lambda_c))

    m = (k >= 1) & (k <= n)
    rows.append(idx[m])
    cols.append(offsets[n[m] - 1] + k[m])
    rates.append(np.minimum(n[m], k[m]) * params.mu)

    m = (k < n) & (k < K) & (lam_s[n] > 0)
    rows.append(idx[m])
    cols.append(idx[m] + 1)
    rates.append(lam_s[n[m]])

    m = k >= 1
    rows.append(idx[m])
    cols.append(idx[m] - 1)
    rates.append(mu_s[n[m]])

    return (
        np.concatenate(rows).astype(np.int64),
        np.concatenate(cols).astype(np.int64),
        np.concatenate(rates).astype(np.float64),
    )


def _check_truncation(params, max_level):
    if max_level < params.K:
        raise ValueError(f"max_level must be >= K={params.K}, got {max_level}")


def assemble_truncated_generator(params, max_level):
    """Dense generator over all states with ``n <= max_level``."""
    _check_truncation(params, max_level)
    size = StateSpace(params.K).size(max_level)
    rows, cols, rates = generator_triplets(params, max_level)
    q = np.zeros((size, size))
    np.add.at(q, (rows, cols), rates)
    q[np.diag_indices(size)] = -q.sum(axis=1)
    return q


def sparse_truncated_generator(params, max_level):
    """Same matrix as :func:`assemble_truncated_generator`, in CSR form."""
    _check_truncation(params, max_level)
    size = StateSpace(params.K).size(max_level)
    rows, cols, rates = generator_triplets(params, max_level)
    out = np.bincount(rows, weights=rates, minlength=size)
    diag = np.arange(size)
    return scipy.sparse.csr_matrix(
        (np.concatenate([rates, -out]), (np.concatenate([rows, diag]), np.concatenate([cols, diag]))),
        shape=(size, size),
    )


@dataclass(frozen=True)
class BlockSet:
    """QBD blocks sliced out of the rule-based generator.

    ``local[n]`` is the within-level block of boundary level ``n`` (levels
    ``0 .. K-1``), ``up[n]`` moves level ``n`` to ``n+1`` (``n <= K-2``) and
    ``down[n]`` moves level ``n + 1`` to ``n``.  From level ``K`` on the chain
    repeats with ``A0`` (down), ``A1`` (up) and ``A_repeat`` (local);
    ``level_dependent`` holds the local blocks of levels ``K .. tail_start-1``
    when the server rates are still changing there.
    """

    K: int
    local: tuple
    up: tuple
    down: tuple
    A0: np.ndarray
    A1: np.ndarray
    A_repeat: np.ndarray
    level_dependent: dict = field(default_factory=dict)

    def _named(self, name, block, level):
        if level >= len(block):
            raise AttributeError(f"{name} does not exist for K={self.K}")
        return block[level]

    @property
    def B00(self):
        return self.local[0]

    @property
    def B01(self):
        return self.up[0] if self.K >= 2 else self.A1

    @property
    def B10(self):
        return self._named("B10", self.down, 0)

    @property
    def B11(self):
        return self._named("B11", self.local, 1)

    @property
    def B12(self):
        if self.K == 2:
            return self.A1
        return self._named("B12", self.up, 1)

    @property
    def B21(self):
        return self._named("B21", self.down, 1)

    @property
    def B22(self):
        return self._named("B22", self.local, 2)

    @property
    def A2(self):
        return self.A_repeat

    @property
    def is_level_independent(self):
        return not self.level_dependent

    def assemble(self, max_level):
        """Rebuild the block-tridiagonal generator up to ``max_level`` (no truncation fix-up)."""
        space = StateSpace(self.K)
        size = space.size(max_level)
        q = np.zeros((size, size))
        for n in range(max_level + 1):
            s = space.level_slice(n)
            if n < self.K:
                q[s, s] = self.local[n]
            else:
                q[s, s] = self.level_dependent.get(n, self.A_repeat)
            if n < max_level:
                t = space.level_slice(n + 1)
                q[s, t] = self.up[n] if n < self.K - 1 else self.A1
            if n >= 1:
                t = space.level_slice(n - 1)
                q[s, t] = self.down[n - 1] if n < self.K else self.A0
        return q


def build_blocks(params):
    K = params.K
    space = StateSpace(K)
    repeat = max(K, params.tail_start)
    q = assemble_truncated_generator(params, repeat + 2)

    def block(i, j):
        return q[space.level_slice(i), space.level_slice(j)].copy()

    return BlockSet(
        K=K,
        local=tuple(block(n, n) for n in range(K)),
        up=tuple(block(n, n + 1) for n in range(K - 1)),
        down=tuple(block(n + 1, n) for n in range(K - 1)),
        A0=block(repeat, repeat - 1),
        A1=block(repeat, repeat + 1),
        A_repeat=block(repeat, repeat),
        level_dependent={n: block(n, n) for n in range(K, repeat)},
    )


@dataclass(frozen=True)
class GeneratorReport:
    max_abs_row_sum: float
    worst_row: int
    min_offdiagonal: float
    worst_entry: tuple
    tol: float

    @property
    def passed(self):
        return self.max_abs_row_sum <= self.tol and self.min_offdiagonal >= 0.0


def validate_generator(q, tol=1e-12):
    q = np.asarray(q, dtype=np.float64)
    if q.ndim != 2 or q.shape[0] != q.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {q.shape}")
    sums = np.abs(q.sum(axis=1))
    worst_row = int(np.argmax(sums))
    off = q.copy()
    off[np.diag_indices(q.shape[0])] = np.inf
    flat = int(np.argmin(off))
    min_off = float(off.flat[flat])
    return GeneratorReport(
        max_abs_row_sum=float(sums[worst_row]),
        worst_row=worst_row,
        min_offdiagonal=min_off,
        worst_entry=divmod(flat, q.shape[0]) if np.isfinite(min_off) else None,
        tol=tol,
    )
