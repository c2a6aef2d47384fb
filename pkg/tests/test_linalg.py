import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from disguised_qbd import SingularMatrixError, build_blocks, solve
from disguised_qbd.linalg import inverse, matmul, solve_linear, spectral_radius_estimate


def test_matmul_identity(example1):
    A0 = build_blocks(example1).A0
    np.testing.assert_array_equal(matmul(np.eye(4), A0), A0)


def test_matmul_scalar():
    assert matmul([[2.0]], [[3.0]]).tolist() == [[6.0]]


def test_matmul_example_A1_is_identity(example1):
    b = build_blocks(example1)
    np.testing.assert_array_equal(b.A1, np.eye(4))
    np.testing.assert_array_equal(matmul(b.A1, b.A0), b.A0)


def test_matmul_dimension_mismatch():
    with pytest.raises(ValueError, match="mismatch"):
        matmul(np.ones((2, 3)), np.ones((2, 3)))


@pytest.mark.parametrize(
    "a, b, x",
    [
        (np.eye(2), [3.0, 4.0], [3.0, 4.0]),
        ([[2.0, 0.0], [0.0, 4.0]], [2.0, 8.0], [1.0, 2.0]),
    ],
)
def test_solve_linear_small(a, b, x):
    np.testing.assert_allclose(solve_linear(a, b), x, rtol=0, atol=1e-15)


def test_solve_linear_boundary_system_residual(example1):
    from disguised_qbd.qbd import _boundary_matrix, compute_R

    blocks = build_blocks(example1)
    R, _, _ = compute_R(blocks)
    Mt = _boundary_matrix(blocks, R).T
    a, b = Mt[1:, 1:], -Mt[1:, 0]
    x = solve_linear(a, b)
    assert np.max(np.abs(a @ x - b)) <= 1e-10 * (1 + np.max(np.abs(b)))


def test_solve_linear_singular():
    with pytest.raises(SingularMatrixError):
        solve_linear([[1.0, 2.0], [2.0, 4.0]], [1.0, 2.0])
    with pytest.raises(SingularMatrixError):
        solve_linear(np.zeros((3, 3)), np.ones(3))


def test_singularity_threshold_is_relative():
    # a tiny but well-conditioned matrix is fine
    np.testing.assert_allclose(solve_linear(1e-20 * np.eye(2), [1e-20, 2e-20]), [1.0, 2.0])
    with pytest.raises(SingularMatrixError):
        solve_linear([[1.0, 1.0], [1.0, 1.0 + 1e-15]], [1.0, 1.0])


def test_inverse_simple():
    np.testing.assert_array_equal(inverse(np.eye(4)), np.eye(4))
    np.testing.assert_allclose(inverse(np.diag([2.0, 4.0])), np.diag([0.5, 0.25]))


def test_inverse_example_A2(example1):
    A2 = build_blocks(example1).A_repeat
    assert np.max(np.abs(A2 @ inverse(A2) - np.eye(4))) <= 1e-10


def test_spectral_radius_simple():
    est = spectral_radius_estimate(np.diag([0.3, 0.1]))
    assert est.converged and est.value == pytest.approx(0.3, rel=1e-10)
    assert spectral_radius_estimate(np.zeros((4, 4))).value == 0.0


def test_spectral_radius_of_R_vs_repeated_squaring(example1):
    R = solve(example1).R
    est = spectral_radius_estimate(R)
    # ||R^(2^m)||^(1/2^m) -> rho(R)
    P = R.copy()
    for _ in range(10):
        P = P @ P
    squaring = np.max(np.abs(P).sum(axis=1)) ** (1 / 2 ** 10)
    assert est.converged
    assert est.value < 1
    assert est.value == pytest.approx(squaring, rel=1e-2)
    assert est.value == pytest.approx(max(abs(np.linalg.eigvals(R))), rel=1e-9)


def test_spectral_radius_reports_nonconvergence():
    # period-2 matrix: the ratio oscillates
    est = spectral_radius_estimate(np.array([[0.0, 2.0], [0.5, 0.0]]), max_iter=50)
    assert not est.converged


well_conditioned = arrays(np.float64, (4, 4), elements=st.floats(-1, 1)).map(lambda a: a + 5 * np.eye(4))


@settings(max_examples=60, deadline=None)
@given(well_conditioned, arrays(np.float64, 4, elements=st.floats(-10, 10)))
def test_solve_residual_random(a, b):
    x = solve_linear(a, b)
    assert np.max(np.abs(a @ x - b)) <= 1e-10 * (1 + np.max(np.abs(b)))


@settings(max_examples=60, deadline=None)
@given(well_conditioned)
def test_double_inverse(a):
    np.testing.assert_allclose(inverse(inverse(a)), a, atol=1e-8, rtol=0)


@settings(max_examples=60, deadline=None)
@given(*(arrays(np.float64, (4, 4), elements=st.floats(-2, 2)) for _ in range(3)))
def test_matmul_associative(a, b, c):
    np.testing.assert_allclose(matmul(matmul(a, b), c), matmul(a, matmul(b, c)), atol=1e-10, rtol=0)
