"""Drift condition for the repeating part of the chain.

Above level ``K`` the server count alone is a birth-death process with rates
``lambda_s`` / ``mu_s`` capped at ``K``, so its stationary law is truncated
geometric in ``rho_s``.  Customers drift up at ``lambda_c`` and down at
``mu * E[k]``; the queue is stable when the downward drift wins.
"""

from dataclasses import dataclass

import numpy as np

from .model import build_blocks


@dataclass(frozen=True)
class StabilityReport:
    rho_c: float
    rho_s: float
    pi_A: np.ndarray
    up_drift: float
    down_drift: float
    threshold: float
    stable: bool

    def as_dict(self):
        return {
            "rho_c": self.rho_c,
            "rho_s": self.rho_s,
            "pi_A": [float(x) for x in self.pi_A],
            "up_drift": self.up_drift,
            "down_drift": self.down_drift,
            "threshold": self.threshold,
            "stable": self.stable,
        }


def stationary_of_A(params):
    """Stationary vector of ``A0 + A1 + A_repeat`` in closed form."""
    K = params.K
    rho = params.rho_s
    if rho == 1.0:
        return np.full(K + 1, 1.0 / (K + 1))
    if rho == 0.0:
        out = np.zeros(K + 1)
        out[0] = 1.0
        return out
    powers = rho ** np.arange(K + 1)
    return powers / powers.sum()


def threshold(rho_s, K=3):
    """Largest ``rho_c`` (exclusive) for which the queue is stable.

    Equals the mean number of servers present in the repeating section,
    ``sum(i rho_s^i) / sum(rho_s^i)``.  For ``K = 3`` this is
    ``rho_s (1 + 2 rho_s + 3 rho_s^2) / ((1 + rho_s)(1 + rho_s^2))``.
    """
    i = np.arange(K + 1)
    if rho_s == 1.0:
        return K / 2.0
    w = rho_s ** i
    return float((i * w).sum() / w.sum())


def ergodicity(params):
    pi_A = stationary_of_A(params)
    blocks = build_blocks(params)
    e = np.ones(params.K + 1)
    up = float(pi_A @ blocks.A1 @ e)
    down = float(pi_A @ blocks.A0 @ e)
    thr = threshold(params.rho_s, params.K)
    rho_c = params.rho_c
    return StabilityReport(
        rho_c=rho_c,
        rho_s=params.rho_s,
        pi_A=pi_A,
        up_drift=up,
        down_drift=down,
        threshold=thr,
        stable=bool(rho_c < thr),
    )
