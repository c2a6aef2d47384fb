"""Inner loops, written in the numba-compilable subset of numpy.

Each function is compiled by :func:`disguised_qbd.backend.kernel` unless the
numpy backend is forced; the uncompiled original stays reachable as
``fn.py_func``.  Callers own all allocation and validation.
"""

import math

import numpy as np

from .backend import kernel

# ---------------------------------------------------------------- rate matrix


@kernel
def r_fixed_point(V, W, A0, A1, A2, tol, max_iter):
    """Iterate ``R <- -V - R^2 W`` from ``R = 0``.

    Stops once the largest entry change is ``<= tol`` and the residual
    ``||R^2 A0 + R A2 + A1||_inf`` is ``<= 100 * tol``.  Returns
    ``(R, iterations, last_change, residual, converged)``.
    """
    m = V.shape[0]
    R = np.zeros((m, m))
    change = np.inf
    residual = np.inf
    for it in range(1, max_iter + 1):
        R_next = -V - (R @ R) @ W
        change = np.max(np.abs(R_next - R))
        R = R_next
        if change <= tol:
            res = (R @ R) @ A0 + R @ A2 + A1
            residual = np.max(np.sum(np.abs(res), axis=1))
            if residual <= 100.0 * tol:
                return R, it, change, residual, True
    res = (R @ R) @ A0 + R @ A2 + A1
    residual = np.max(np.sum(np.abs(res), axis=1))
    return R, max_iter, change, residual, False


# ------------------------------------------------------------------- oracle


@kernel
def uniformized_power(indptr, indices, data, rate, x, tol, max_iter):
    """Power iteration ``x <- x (I + Q / rate)`` on a CSR generator.

    ``x`` is updated in place.  Returns ``(iterations, last_l1_change)``.
    """
    size = x.shape[0]
    y = np.empty(size)
    change = np.inf
    for it in range(1, max_iter + 1):
        for j in range(size):
            y[j] = x[j]
        for i in range(size):
            xi = x[i] / rate
            if xi == 0.0:
                continue
            for p in range(indptr[i], indptr[i + 1]):
                y[indices[p]] += xi * data[p]
        s = 0.0
        for j in range(size):
            if y[j] < 0.0:
                y[j] = 0.0
            s += y[j]
        change = 0.0
        for j in range(size):
            v = y[j] / s
            change += abs(v - x[j])
            x[j] = v
        if change <= tol:
            return it, change
    return max_iter, change


# --------------------------------------------------------------- simulation


@kernel
def _accumulate(t0, t1, n, k, warmup, batch_len, area):
    """Add the time-weighted state ``(n, k)`` on ``[t0, t1)`` to the batch areas."""
    if t1 <= warmup:
        return
    if t0 < warmup:
        t0 = warmup
    nb = area.shape[0]
    b = int((t0 - warmup) / batch_len)
    if b >= nb:
        b = nb - 1
    wait = n - k
    if wait < 0:
        wait = 0
    while t0 < t1:
        end = warmup + (b + 1) * batch_len
        if b == nb - 1 or end > t1:
            end = t1
        dt = end - t0
        area[b, 0] += dt * (n + k)
        area[b, 1] += dt * n
        area[b, 2] += dt * k
        area[b, 3] += dt * wait
        t0 = end
        b += 1


@kernel
def _state_index(n, k, K):
    if n <= K:
        return n * (n + 3) // 2 + k
    return K * (K + 3) // 2 + (n - K) * (K + 1) + k


@kernel
def gillespie_chunk(
    state, clock, horizon,
    lambda_c, mu, lam_s, mu_s, K,
    uniforms, record, out_t, out_n, out_k, out_kind,
    warmup, batch_len, area, arrivals, delayed, delayed_physical, departures,
    track_levels, occupancy, exits,
):
    """Advance the chain by at most ``len(uniforms)`` events.

    ``state = [n, k]`` and ``clock = [t]`` are updated in place.  Each event
    consumes one row of ``uniforms`` (open interval (0, 1)): column 0 draws
    the exponential holding time, column 1 picks the transition in the fixed
    order arrival, service, server arrival, server departure.

    Returns ``(events_recorded, finished)`` where ``finished`` means the
    horizon was reached.
    """
    n = state[0]
    k = state[1]
    t = clock[0]
    last = lam_s.shape[0] - 1
    nb = area.shape[0]
    count = 0
    finished = False
    for i in range(uniforms.shape[0]):
        lvl = n if n < last else last
        r_arr = lambda_c
        r_srv = 0.0
        if k >= 1 and k <= n:
            r_srv = (n if n < k else k) * mu
        r_sa = 0.0
        if k < n and k < K:
            r_sa = lam_s[lvl]
        r_sd = 0.0
        if k >= 1:
            r_sd = mu_s[lvl]
        total = r_arr + r_srv + r_sa + r_sd
        if total > 0.0:
            t_next = t - math.log(uniforms[i, 0]) / total
        else:
            t_next = np.inf

        if n < track_levels:
            idx = _state_index(n, k, K)
            stop = t_next if t_next < horizon else horizon
            occupancy[idx] += stop - t

        if t_next >= horizon:
            _accumulate(t, horizon, n, k, warmup, batch_len, area)
            t = horizon
            finished = True
            break
        _accumulate(t, t_next, n, k, warmup, batch_len, area)

        x = uniforms[i, 1] * total
        if x < r_arr:
            kind = 0
        elif x < r_arr + r_srv:
            kind = 1
        elif x < r_arr + r_srv + r_sa:
            kind = 2
        else:
            kind = 3
        # guard against x landing on an exact upper edge with a zero-rate tail
        if kind == 3 and r_sd == 0.0:
            if r_sa > 0.0:
                kind = 2
            elif r_srv > 0.0:
                kind = 1
            else:
                kind = 0

        if n < track_levels:
            exits[_state_index(n, k, K), kind] += 1

        if t_next >= warmup:
            b = int((t_next - warmup) / batch_len)
            if b >= nb:
                b = nb - 1
            if kind == 0:
                arrivals[b] += 1
                if k <= n:
                    delayed_physical[b] += 1
                    if n >= 1:
                        delayed[b] += 1
            elif kind == 1:
                departures[b] += 1

        if kind == 0:
            n += 1
        elif kind == 1:
            n -= 1
        elif kind == 2:
            k += 1
        else:
            k -= 1
        t = t_next

        if record:
            out_t[count] = t
            out_n[count] = n
            out_k[count] = k
            out_kind[count] = kind
            count += 1

    state[0] = n
    state[1] = k
    clock[0] = t
    return count, finished
