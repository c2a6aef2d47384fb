import numpy as np
import pytest

from disguised_qbd import ModelParams, normalize, solve, solve_truncated
from disguised_qbd import metrics
from disguised_qbd.linalg import inverse

from params import STABLE_GRID


@pytest.fixture(scope="module")
def solved():
    return [(ModelParams.constant(*p), solve(ModelParams.constant(*p))) for p in STABLE_GRID]


def test_series_identities(solved):
    for _, ss in solved:
        R = ss.R
        I = np.eye(4)
        N = inverse(I - R)
        s0 = np.zeros((4, 4))
        s1 = np.zeros((4, 4))
        P = I.copy()
        for n in range(2, 202):
            s0 += P
            s1 += n * P
            P = P @ R
        np.testing.assert_allclose(s0, N, atol=1e-10, rtol=0)
        np.testing.assert_allclose(s1, R @ N @ N + 2 * N, atol=1e-10, rtol=0)


def _direct(ss, levels=400):
    # plain sums over explicit levels until the tail vanishes
    total = waiting = delay = 0.0
    for n in range(levels):
        p = ss.level(n)
        k = np.arange(p.size)
        total += p @ (n + k)
        waiting += p @ np.maximum(n - k, 0)
        if n >= 1:
            delay += p[k <= n].sum()
        if p.sum() < 1e-16 and n > 10:
            break
    return total, waiting, delay


def test_closed_forms_match_sums(solved):
    for p, ss in solved:
        total, waiting, delay = _direct(ss)
        m = metrics.compute(ss, p)
        assert m.expected_total_length == pytest.approx(total, abs=1e-8)
        assert m.expected_customers_waiting == pytest.approx(waiting, abs=1e-8)
        assert m.delay_probability == pytest.approx(delay, abs=1e-8)
        assert m.expected_wait == pytest.approx(waiting / p.lambda_c, abs=1e-8)


def test_closed_forms_match_oracle(solved):
    from disguised_qbd.oracle import oracle_metrics

    for p, ss in solved:
        om = oracle_metrics(solve_truncated(p))
        m = metrics.compute(ss, p)
        for key in ("expected_total_length", "expected_customers_waiting", "delay_probability"):
            assert getattr(m, key) == pytest.approx(getattr(om, key), abs=1e-8), (p, key)


def test_bounds(solved):
    for p, ss in solved:
        m = metrics.compute(ss, p)
        assert 0 <= m.delay_probability <= 1
        assert 0 <= m.expected_customers_waiting <= m.expected_total_length


def _point_mass(state):
    boundary = [np.zeros(2), np.zeros(3), np.zeros(4)]
    boundary[state[0]][state[1]] = 1.0
    return normalize(tuple(boundary), np.zeros((4, 4)))


def test_empty_system():
    ss = _point_mass((0, 0))
    assert metrics.expected_total_length(ss) == 0
    assert metrics.expected_customers_waiting(ss) == 0
    assert metrics.delay_probability(ss) == 0


def test_idle_server_not_delayed():
    ss = _point_mass((0, 1))
    assert metrics.delay_probability(ss) == 0
    assert metrics.expected_total_length(ss) == 1


def test_zero_wait():
    ss = _point_mass((1, 1))
    p = ModelParams.constant(1, 2, 3, 4)
    assert metrics.expected_wait(ss, p) == 0


def test_wait_undefined_without_arrivals():
    ss = _point_mass((0, 0))
    with pytest.raises(ZeroDivisionError):
        metrics.expected_wait(ss, ModelParams.constant(0.0, 2, 3, 4))


def test_example_values(example1):
    # frozen from the oracle-verified solve
    m = metrics.compute(solve(example1), example1)
    assert m.expected_total_length == pytest.approx(2.78680136, abs=1e-7)
    assert m.expected_customers_waiting == pytest.approx(1.6001486, abs=1e-6)
    assert m.delay_probability == pytest.approx(0.7576260, abs=1e-6)
    assert m.expected_wait == m.expected_customers_waiting


@pytest.mark.parametrize("K", [2, 4, 5])
def test_general_K_metrics(K):
    from disguised_qbd.oracle import oracle_metrics

    p = ModelParams.constant(1, 2, 2, 1, K=K)
    m = metrics.compute(solve(p), p)
    om = oracle_metrics(solve_truncated(p))
    for key in ("expected_total_length", "expected_customers_waiting", "delay_probability"):
        assert getattr(m, key) == pytest.approx(getattr(om, key), abs=1e-8)
