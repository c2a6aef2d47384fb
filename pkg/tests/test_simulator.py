import numpy as np
import pytest

from disguised_qbd import ModelParams, SimConfig, estimate, sample_on_grid, simulate, solve_truncated
from disguised_qbd import kernels
from disguised_qbd import simulator as sim
from disguised_qbd.model import State
from disguised_qbd.oracle import oracle_metrics
from disguised_qbd.simulator import Trajectory, fitted_slope, replay_audit, run


@pytest.fixture(scope="module")
def long_run():
    p = ModelParams.constant(1, 2, 3, 4)
    return p, run(p, SimConfig(seed=1, horizon=1e6), record=False)[1]


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(horizon=0)
    with pytest.raises(ValueError):
        SimConfig(horizon=10, warmup=10)
    assert SimConfig(horizon=50).warmup == 5.0


def test_tiny_horizon_is_empty(example1):
    traj = simulate(example1, SimConfig(horizon=1e-300))
    assert len(traj) == 0
    assert traj.final_state == State(0, 0)


def test_determinism(example1):
    cfg = SimConfig(seed=42, horizon=2000)
    a, b = simulate(example1, cfg), simulate(example1, cfg)
    for field in ("times", "n", "k", "kinds"):
        np.testing.assert_array_equal(getattr(a, field), getattr(b, field))
    c = simulate(example1, SimConfig(seed=42, horizon=2000, run_index=1))
    assert not np.array_equal(a.times[:10], c.times[:10])


def test_trajectory_is_legal(example1, example2):
    for p in (example1, example2):
        traj = simulate(p, SimConfig(seed=3, horizon=3000))
        assert len(traj) > 1000
        assert replay_audit(p, traj) == -1
        assert np.all(np.diff(traj.times) > 0)


def test_replay_audit_catches_tampering(example1):
    traj = simulate(example1, SimConfig(seed=3, horizon=200))
    traj.n[10] += 2
    assert replay_audit(example1, traj) == 10


def test_start_state(example1):
    traj = simulate(example1, SimConfig(seed=1, horizon=100, initial_state=(5, 2)))
    assert replay_audit(example1, traj) == -1
    with pytest.raises(ValueError):
        simulate(example1, SimConfig(horizon=100, initial_state=(0, 2)))


def test_grid_empty():
    traj = Trajectory(State(0, 0), np.empty(0), np.empty(0, int), np.empty(0, int), np.empty(0, np.int8), 0.5)
    g = sample_on_grid(traj, 1.0)
    assert g.size == 1 and (g["time"][0], g["n"][0], g["k"][0]) == (0.0, 0, 0)


def test_grid_piecewise_constant():
    traj = Trajectory(State(0, 0), np.array([1.5]), np.array([1]), np.array([0]), np.array([0], np.int8), 2.0)
    g = sample_on_grid(traj, 1.0)
    assert g["time"].tolist() == [0.0, 1.0, 2.0]
    assert g["n"].tolist() == [0, 0, 1] and g["total"].tolist() == [0, 0, 1]
    with pytest.raises(ValueError):
        sample_on_grid(traj, 0.0)


def test_grid_histogram(example1):
    sol = solve_truncated(example1)
    n, k = sol.states()
    dist = np.bincount(n + k, weights=sol.pi)
    heavy = dist > 0.01
    tvs = []
    for run_index in range(10):
        traj = simulate(example1, SimConfig(seed=1, horizon=1e3, run_index=run_index))
        g = sample_on_grid(traj, 1.0)
        h = np.bincount(g["total"], minlength=dist.size)[: dist.size] / g.size
        tvs.append(0.5 * np.abs(h[heavy] - dist[heavy]).sum())
    # a single 1000-sample path is noisy; the typical path is within 5%
    assert np.median(tvs) <= 0.05


def test_estimates_against_oracle(long_run):
    p, est = long_run
    om = oracle_metrics(solve_truncated(p))
    for value, se, exact in (
        (est.mean_total_length, est.mean_total_length_se, om.expected_total_length),
        (est.mean_waiting_customers, est.mean_waiting_customers_se, om.expected_customers_waiting),
        (est.delay_fraction, est.delay_fraction_se, om.delay_probability),
    ):
        assert abs(value - exact) <= max(3 * se, 0.01 * exact)
    assert est.mean_total_length == pytest.approx(est.mean_customer_count + est.mean_server_count, rel=1e-12)


def test_estimate_invariants(long_run):
    _, est = long_run
    for name in ("delay_fraction", "delay_fraction_physical"):
        assert 0 <= getattr(est, name) <= 1
    assert est.delay_fraction_physical >= est.delay_fraction
    assert all(v >= 0 for k, v in est.as_dict().items() if k.endswith("_se"))
    assert abs(est.arrivals_count - est.departures_count) < 100


def test_rate_audit(long_run):
    p, est = long_run
    rows = list(est.exit_rates(p, min_visits=1000))
    assert len(rows) > 100
    for state, kind, empirical, se, rate in rows:
        assert abs(empirical - rate) <= 3 * se, (state, kind)


def test_unstable_growth(example2):
    for run_index in range(10):
        traj = simulate(example2, SimConfig(seed=1, horizon=1e4, run_index=run_index))
        assert fitted_slope(traj) > 0
        assert traj.final_state.n > 100


def test_level_dependent_simulation():
    p = ModelParams(1.0, 2.0, (5.0, 4.0, 3.0), (4.0,), K=3)
    traj = simulate(p, SimConfig(seed=5, horizon=2000))
    assert replay_audit(p, traj) == -1


def test_backends_agree(example1, monkeypatch):
    cfg = SimConfig(seed=9, horizon=300)
    fast_traj, fast_est = run(example1, cfg)
    monkeypatch.setattr(kernels, "gillespie_chunk", kernels.gillespie_chunk.py_func)
    slow_traj, slow_est = run(example1, cfg)
    np.testing.assert_array_equal(fast_traj.times, slow_traj.times)
    np.testing.assert_array_equal(fast_traj.n, slow_traj.n)
    np.testing.assert_array_equal(fast_traj.kinds, slow_traj.kinds)
    assert fast_est.as_dict() == slow_est.as_dict()


def test_estimate_only_matches_recorded(example1):
    cfg = SimConfig(seed=4, horizon=5000)
    assert estimate(example1, cfg).as_dict() == run(example1, cfg, record=True)[1].as_dict()


def test_chunk_boundary(example1, monkeypatch):
    # forcing tiny chunks must not change the path
    cfg = SimConfig(seed=2, horizon=500)
    ref = simulate(example1, cfg)
    monkeypatch.setattr(sim, "CHUNK", 64)
    small = simulate(example1, cfg)
    np.testing.assert_array_equal(ref.times, small.times)
