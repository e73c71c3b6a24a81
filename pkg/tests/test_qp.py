import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lcqp.qp import NotPositiveDefiniteError, QpStatus, QpWorkspace, solve_qp
from oracles import brute_force_qp, random_qp


def kkt_residual(Q, q, A, x, y):
    return np.max(np.abs(Q @ x + q - A.T @ y), initial=0.0)


def test_unconstrained():
    Q = np.array([[4.0, 1.0], [1.0, 3.0]])
    q = np.array([1.0, 2.0])
    res = solve_qp(Q, q, np.zeros((0, 2)), [], [])
    assert res.ok
    assert np.allclose(res.x, np.linalg.solve(Q, -q))


def test_box_projection():
    res = solve_qp(np.eye(2), [-3.0, 0.5], np.eye(2), [0.0, 0.0], [1.0, 1.0])
    assert np.allclose(res.x, [1.0, 0.0])
    assert res.y[0] < 0 < res.y[1]  # upper bound active, then lower bound active
    assert kkt_residual(np.eye(2), np.array([-3.0, 0.5]), np.eye(2), res.x, res.y) < 1e-12


def test_equality_row():
    A = np.array([[1.0, 1.0]])
    res = solve_qp(np.eye(2), [0.0, 0.0], A, [1.0], [1.0])
    assert np.allclose(res.x, [0.5, 0.5])
    assert res.y[0] == pytest.approx(0.5)


def test_infeasible_reported():
    A = np.array([[1.0, 0.0], [1.0, 0.0]])
    res = solve_qp(np.eye(2), [0.0, 0.0], A, [1.0, -np.inf], [np.inf, 0.0])
    assert res.status is QpStatus.INFEASIBLE
    assert res.x is None


def test_not_positive_definite():
    with pytest.raises(NotPositiveDefiniteError, match="Hessian not positive definite"):
        QpWorkspace(np.diag([1.0, 0.0]), np.eye(2), [0, 0], [1, 1])


def test_huge_bounds_are_treated_as_absent():
    res = solve_qp(np.eye(1), [-2.0], np.eye(1), [-1e20], [1e20])
    assert res.x[0] == pytest.approx(2.0)


def test_duplicate_rows_do_not_break_the_solve():
    A = np.array([[1.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    res = solve_qp(np.eye(2), [-5.0, 0.0], A, [-np.inf] * 3, [1.0, 1.0, 2.0])
    assert res.ok
    assert np.allclose(res.x, [1.0, 0.0])
    assert kkt_residual(np.eye(2), np.array([-5.0, 0.0]), A, res.x, res.y) < 1e-10


def test_matches_brute_force_on_random_instances():
    rng = np.random.default_rng(0)
    for _ in range(120):
        Q, A, lb, ub = random_qp(rng)
        ws = QpWorkspace(Q, A, lb, ub)
        for _ in range(3):
            q = rng.normal(size=Q.shape[0]) * 3
            res = ws.solve(q)
            ref = brute_force_qp(Q, q, A, lb, ub)
            assert res.ok
            assert np.max(np.abs(res.x - ref[1])) < 1e-8
            assert kkt_residual(Q, q, A, res.x, res.y) < 1e-9


def test_warm_start_needs_fewer_changes():
    rng = np.random.default_rng(5)
    n = 12
    M = rng.normal(size=(n, n))
    Q = M @ M.T + np.eye(n)
    A = np.eye(n)
    lb, ub = -np.ones(n), np.ones(n)
    ws = QpWorkspace(Q, A, lb, ub)
    q = rng.normal(size=n) * 10
    cold = ws.solve(q).changes
    warm = ws.solve(q + 1e-6 * rng.normal(size=n)).changes
    assert warm <= 1 < cold


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_dual_signs(seed):
    rng = np.random.default_rng(seed)
    Q, A, lb, ub = random_qp(rng)
    q = rng.normal(size=Q.shape[0])
    res = solve_qp(Q, q, A, lb, ub)
    assert res.ok
    Ax = A @ res.x
    at_lb = np.abs(Ax - lb) <= 1e-9
    at_ub = np.abs(Ax - ub) <= 1e-9
    assert np.all(res.y[~at_lb & ~at_ub] == 0)
    assert np.all(res.y[at_lb & ~at_ub] >= -1e-9)
    assert np.all(res.y[at_ub & ~at_lb] <= 1e-9)
