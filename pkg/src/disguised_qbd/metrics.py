"""Closed-form performance measures from a :class:`SteadyState`.

Tail sums use the matrix series

    sum_{j>=0} R^j           = (I - R)^-1
    sum_{j>=0} (j + c) R^j   = R (I - R)^-2 + c (I - R)^-1

applied from level ``K - 1`` (level 2 when ``K = 3``).
"""

from dataclasses import asdict, dataclass

import numpy as np

from .linalg import inverse


@dataclass(frozen=True)
class Metrics:
    expected_total_length: float
    expected_customers_waiting: float
    expected_wait: float
    delay_probability: float
    # E(L) / lambda_c, kept alongside E(W) for comparison with printed tables
    total_length_per_arrival: float = float("nan")
    source: str = "analytic"

    @classmethod
    def from_values(cls, total, waiting, delay, lambda_c, source="analytic"):
        nan = float("nan")
        return cls(
            expected_total_length=total,
            expected_customers_waiting=waiting,
            expected_wait=waiting / lambda_c if lambda_c > 0 else nan,
            delay_probability=delay,
            total_length_per_arrival=total / lambda_c if lambda_c > 0 else nan,
            source=source,
        )

    def as_dict(self):
        return asdict(self)


def _series(ss):
    m = ss.R.shape[0]
    eye = np.eye(m)
    N = inverse(eye - ss.R)
    return eye, N, ss.R @ N @ N


def expected_total_length(ss):
    K = ss.K
    eye, N, RN2 = _series(ss)
    e = np.ones(K + 1)
    v = np.arange(K + 1, dtype=np.float64)
    head = 0.0
    for n, p in enumerate(ss.boundary[:-1]):
        head += float(p @ (n + np.arange(p.size)))
    base = ss.last
    return head + float(base @ (RN2 + (K - 1) * N) @ e) + float(base @ N @ v)


def expected_customers_waiting(ss):
    """Mean of ``max(n - k, 0)``.

    Levels ``1 .. K`` are summed explicitly (dormant states carry weight 0);
    levels above ``K`` have ``k <= n`` and are summed in closed form.
    """
    K = ss.K
    eye, N, RN2 = _series(ss)
    R = ss.R
    e = np.ones(K + 1)
    v = np.arange(K + 1, dtype=np.float64)
    head = 0.0
    for n in range(1, K + 1):
        p = ss.level(n)
        head += float(p @ np.maximum(n - np.arange(p.size), 0))
    base = ss.last
    # sum_{n>=K+1} n R^(n-K+1) and sum_{n>=K+1} R^(n-K+1) from the full series
    n_tail = RN2 + (K - 1) * N - ((K - 1) * eye + K * R)
    one_tail = N - (eye + R)
    return head + float(base @ n_tail @ e) - float(base @ one_tail @ v)


def expected_wait(ss, params):
    if params.lambda_c <= 0:
        raise ZeroDivisionError("expected wait is undefined for lambda_c = 0")
    return expected_customers_waiting(ss) / params.lambda_c


def delay_probability(ss):
    """Mass of the states ``{n >= 1, k <= n}``."""
    K = ss.K
    eye, N, _ = _series(ss)
    head = 0.0
    for n in range(1, K - 1):
        head += float(ss.boundary[n][: n + 1].sum())
    base = ss.last
    # level K-1 without its dormant phase, then every level >= K
    head += float(base[: K].sum()) if K >= 2 else 0.0
    return head + float(base @ (N - eye) @ np.ones(K + 1))


def compute(ss, params):
    return Metrics.from_values(
        expected_total_length(ss),
        expected_customers_waiting(ss),
        delay_probability(ss),
        params.lambda_c,
    )
