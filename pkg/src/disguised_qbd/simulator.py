"""Exact event-by-event simulation of the chain.

Random numbers come from numpy's PCG64 seeded with
``SeedSequence(seed, spawn_key=(run_index,))``, so each ``(seed, run)``
pair is an independent, reproducible stream.  Uniforms are drawn in chunks
on the Python side and handed to the event kernel, which means the numba
and numpy backends consume exactly the same numbers.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .model import EVENT_NAMES, State, StateSpace

CHUNK = 1 << 16
N_BATCHES = 20
TRACK_LEVELS = 64
_OPEN = 2.0 ** -54  # shifts [0, 1) multiples of 2^-53 into (0, 1)


@dataclass(frozen=True)
class SimConfig:
    seed: int = 1
    horizon: float = 1e6
    warmup: float = None
    initial_state: State = State(0, 0)
    sample_grid: float = None
    run_index: int = 0

    def __post_init__(self):
        if not self.horizon > 0:
            raise ValueError("horizon must be > 0")
        if self.warmup is None:
            object.__setattr__(self, "warmup", 0.1 * self.horizon)
        if not 0 <= self.warmup < self.horizon:
            raise ValueError("need 0 <= warmup < horizon")
        if self.sample_grid is not None and not self.sample_grid > 0:
            raise ValueError("sample_grid step must be > 0")
        object.__setattr__(self, "initial_state", State(*self.initial_state))

    def rng(self):
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.run_index),))
        return np.random.Generator(np.random.PCG64(ss))


@dataclass
class Trajectory:
    """Event log: after event ``i`` at ``times[i]`` the state is ``(n[i], k[i])``."""

    initial_state: State
    times: np.ndarray
    n: np.ndarray
    k: np.ndarray
    kinds: np.ndarray
    final_time: float

    def __len__(self):
        return self.times.size

    @property
    def final_state(self):
        if len(self) == 0:
            return self.initial_state
        return State(int(self.n[-1]), int(self.k[-1]))

    def events(self):
        for i in range(len(self)):
            yield float(self.times[i]), int(self.n[i]), int(self.k[i]), EVENT_NAMES[self.kinds[i]]


@dataclass
class SimEstimates:
    mean_total_length: float
    mean_total_length_se: float
    mean_customer_count: float
    mean_customer_count_se: float
    mean_server_count: float
    mean_server_count_se: float
    mean_waiting_customers: float
    mean_waiting_customers_se: float
    delay_fraction: float
    delay_fraction_se: float
    delay_fraction_physical: float
    delay_fraction_physical_se: float
    arrivals_count: int
    departures_count: int
    occupancy: np.ndarray = field(repr=False)
    exits: np.ndarray = field(repr=False)

    def as_dict(self):
        out = {k: v for k, v in self.__dict__.items() if k not in ("occupancy", "exits")}
        return {k: (int(v) if isinstance(v, (np.integer,)) else v) for k, v in out.items()}

    def exit_rates(self, params, min_visits=1000):
        """Empirical vs theoretical exit rates for well-visited tracked states.

        Yields ``(state, kind, empirical, standard_error, theoretical)``; the
        standard error treats the exit count as Poisson given the time spent.
        """
        space = StateSpace(params.K)
        visits = self.exits.sum(axis=1)
        theory = _theoretical_rates(params)
        for idx in np.nonzero(visits > min_visits)[0]:
            s = space.state(int(idx))
            for kind in range(4):
                rate = theory.get((s, kind), 0.0)
                count = self.exits[idx, kind]
                t = self.occupancy[idx]
                yield s, EVENT_NAMES[kind], count / t, np.sqrt(max(count, 1)) / t, rate


def _theoretical_rates(params):
    from .model import _enabled

    space = StateSpace(params.K)
    out = {}
    for idx in range(space.size(TRACK_LEVELS - 1)):
        s = space.state(idx)
        for kind, _, rate in _enabled(params, s.n, s.k):
            out[(s, kind)] = rate
    return out


def _batch_stats(values):
    mean = float(values.mean())
    if values.size < 2:
        return mean, 0.0
    return mean, float(values.std(ddof=1) / np.sqrt(values.size))


def run(params, cfg, record=True):
    """One simulation pass returning ``(trajectory or None, estimates)``."""
    space = StateSpace(params.K)
    if not space.is_valid(cfg.initial_state):
        raise ValueError(f"invalid initial state {cfg.initial_state}")
    levels = max(params.tail_start + 1, 1)
    lam_s, mu_s = params.rate_arrays(levels)
    lam_s = np.ascontiguousarray(lam_s, dtype=np.float64)
    mu_s = np.ascontiguousarray(mu_s, dtype=np.float64)

    state = np.array(cfg.initial_state, dtype=np.int64)
    clock = np.zeros(1)
    batch_len = (cfg.horizon - cfg.warmup) / N_BATCHES
    area = np.zeros((N_BATCHES, 4))
    arrivals = np.zeros(N_BATCHES, dtype=np.int64)
    delayed = np.zeros(N_BATCHES, dtype=np.int64)
    delayed_phys = np.zeros(N_BATCHES, dtype=np.int64)
    departures = np.zeros(N_BATCHES, dtype=np.int64)
    n_tracked = space.size(TRACK_LEVELS - 1)
    occupancy = np.zeros(n_tracked)
    exits = np.zeros((n_tracked, 4), dtype=np.int64)

    size = CHUNK if record else 0
    out_t = np.empty(size)
    out_n = np.empty(size, dtype=np.int64)
    out_k = np.empty(size, dtype=np.int64)
    out_kind = np.empty(size, dtype=np.int64)
    pieces = []

    rng = cfg.rng()
    finished = False
    while not finished:
        u = rng.random((CHUNK, 2))
        u += _OPEN
        count, finished = kernels.gillespie_chunk(
            state, clock, float(cfg.horizon),
            params.lambda_c, params.mu, lam_s, mu_s, params.K,
            u, record, out_t, out_n, out_k, out_kind,
            float(cfg.warmup), batch_len, area, arrivals, delayed, delayed_phys, departures,
            TRACK_LEVELS, occupancy, exits,
        )
        if record and count:
            pieces.append((out_t[:count].copy(), out_n[:count].copy(), out_k[:count].copy(), out_kind[:count].copy()))

    traj = None
    if record:
        if pieces:
            cols = [np.concatenate(c) for c in zip(*pieces)]
        else:
            cols = [np.empty(0), np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0, np.int64)]
        traj = Trajectory(cfg.initial_state, cols[0], cols[1], cols[2], cols[3].astype(np.int8), float(cfg.horizon))

    means = area / batch_len
    total, total_se = _batch_stats(means[:, 0])
    cust, cust_se = _batch_stats(means[:, 1])
    serv, serv_se = _batch_stats(means[:, 2])
    wait, wait_se = _batch_stats(means[:, 3])
    with np.errstate(invalid="ignore", divide="ignore"):
        frac = delayed / arrivals
        frac_phys = delayed_phys / arrivals
    ok = arrivals > 0
    n_arr = int(arrivals.sum())
    est = SimEstimates(
        mean_total_length=total,
        mean_total_length_se=total_se,
        mean_customer_count=cust,
        mean_customer_count_se=cust_se,
        mean_server_count=serv,
        mean_server_count_se=serv_se,
        mean_waiting_customers=wait,
        mean_waiting_customers_se=wait_se,
        delay_fraction=float(delayed.sum() / n_arr) if n_arr else 0.0,
        delay_fraction_se=_batch_stats(frac[ok])[1] if ok.any() else 0.0,
        delay_fraction_physical=float(delayed_phys.sum() / n_arr) if n_arr else 0.0,
        delay_fraction_physical_se=_batch_stats(frac_phys[ok])[1] if ok.any() else 0.0,
        arrivals_count=n_arr,
        departures_count=int(departures.sum()),
        occupancy=occupancy,
        exits=exits,
    )
    return traj, est


def simulate(params, cfg):
    return run(params, cfg, record=True)[0]


def estimate(params, cfg):
    return run(params, cfg, record=False)[1]


def sample_on_grid(traj, step, end=None):
    """Piecewise-constant state at ``t = 0, step, 2 step, ...`` up to ``end``.

    Returns a structured array with fields ``time, n, k, total``.
    """
    if not step > 0:
        raise ValueError("step must be > 0")
    end = traj.final_time if end is None else end
    grid = np.arange(int(np.floor(end / step)) + 1) * step
    # number of events at or before each grid time
    pos = np.searchsorted(traj.times, grid, side="right")
    n = np.concatenate([[traj.initial_state.n], traj.n])[pos]
    k = np.concatenate([[traj.initial_state.k], traj.k])[pos]
    out = np.empty(grid.size, dtype=[("time", "f8"), ("n", "i8"), ("k", "i8"), ("total", "i8")])
    out["time"] = grid
    out["n"] = n
    out["k"] = k
    out["total"] = n + k
    return out


def replay_audit(params, traj):
    """Check every recorded step is a legal transition; returns the first bad index or -1."""
    from .model import _enabled

    n, k = traj.initial_state
    prev_t = 0.0
    for i in range(len(traj)):
        t = traj.times[i]
        target = State(int(traj.n[i]), int(traj.k[i]))
        kind = int(traj.kinds[i])
        legal = {(kd, s) for kd, s, _ in _enabled(params, n, k)}
        if not t > prev_t or (kind, target) not in legal:
            return i
        n, k = target
        prev_t = t
    return -1


def fitted_slope(traj, points=1000):
    """Least-squares slope of the customer count sampled on a uniform grid."""
    grid = sample_on_grid(traj, traj.final_time / points)
    if grid.size < 2:
        return 0.0
    return float(np.polyfit(grid["time"], grid["n"], 1)[0])
