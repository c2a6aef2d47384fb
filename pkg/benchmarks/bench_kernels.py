"""Time each hot kernel compiled with numba against its plain Python body.

    python3 benchmarks/bench_kernels.py [--repeat N]

Both paths get identical inputs; the compiled timing excludes the first
(compiling) call.  Under DISGUISED_QBD_BACKEND=numpy the two columns are
the same function, which is a quick way to confirm the fallback is active.
"""

import argparse
import time

import numpy as np

from disguised_qbd import BACKEND, ModelParams, build_blocks, kernels
from disguised_qbd.linalg import inverse
from disguised_qbd.model import StateSpace, sparse_truncated_generator
from disguised_qbd.simulator import TRACK_LEVELS, N_BATCHES


def r_case():
    b = build_blocks(ModelParams.constant(1, 2, 3, 4))
    inv = inverse(b.A_repeat)
    args = (b.A1 @ inv, b.A0 @ inv, b.A0, b.A1, b.A_repeat, 1e-12, 100_000)

    def call(fn):
        fn(*args)
    return call


def power_case():
    p = ModelParams.constant(0.3, 0.7, 0.2, 0.5)
    q = sparse_truncated_generator(p, 512)
    rate = 1.05 * float(np.max(-q.diagonal()))
    arrays = (q.indptr.astype(np.int64), q.indices.astype(np.int64), q.data.astype(np.float64))

    def call(fn):
        x = np.full(q.shape[0], 1.0 / q.shape[0])
        fn(*arrays, rate, x, 0.0, 300)  # tol 0: always 300 sweeps
    return call


def gillespie_case(events=20_000):
    p = ModelParams.constant(1, 2, 3, 4)
    lam_s, mu_s = p.rate_arrays(1)
    u = np.random.default_rng(0).random((events, 2)) + 2.0 ** -54
    n_tracked = StateSpace(3).size(TRACK_LEVELS - 1)

    def call(fn):
        fn(
            np.zeros(2, np.int64), np.zeros(1), 1e12, 1.0, 2.0, lam_s, mu_s, 3, u, True,
            np.empty(events), np.empty(events, np.int64), np.empty(events, np.int64), np.empty(events, np.int64),
            0.0, 1e10, np.zeros((N_BATCHES, 4)), *(np.zeros(N_BATCHES, np.int64) for _ in range(4)),
            TRACK_LEVELS, np.zeros(n_tracked), np.zeros((n_tracked, 4), np.int64),
        )
    return call


def best_of(call, fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        call(fn)
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    cases = (
        ("r_fixed_point (example, 71 iterations)", kernels.r_fixed_point, r_case()),
        ("uniformized_power (2.0k states, 300 sweeps)", kernels.uniformized_power, power_case()),
        ("gillespie_chunk (20k events)", kernels.gillespie_chunk, gillespie_case()),
    )
    print(f"backend: {BACKEND}")
    print(f"{'kernel':<46}{'compiled':>12}{'python':>12}{'speedup':>10}")
    for name, fn, call in cases:
        call(fn)  # warm up / compile
        fast = best_of(call, fn, args.repeat)
        slow = best_of(call, fn.py_func, args.repeat)
        print(f"{name:<46}{fast * 1e3:>10.2f}ms{slow * 1e3:>10.1f}ms{slow / fast:>9.0f}x")


if __name__ == "__main__":
    main()
