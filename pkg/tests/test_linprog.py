import numpy as np
import pytest

from postcap.linprog import simplex_solve


def test_feasible_system_returns_point():
    # x1 + x2 = 1, x1 - x2 = 0 -> x = (1/2, 1/2)
    res = simplex_solve(np.array([[1., 1.], [1., -1.]]), np.array([1., 0.]))
    assert res.status == "optimal"
    assert res.phase1_value <= 1e-12
    assert np.allclose(res.x, [0.5, 0.5], atol=1e-12)


def test_infeasible_system_certificate():
    # x1 + x2 = 1 and x1 + x2 = 2 cannot both hold
    A = np.array([[1., 1.], [1., 1.]])
    b = np.array([1., 2.])
    res = simplex_solve(A, b)
    assert res.status == "infeasible"
    assert res.phase1_value > 0.1
    # Farkas: y'b > 0 >= y'A_j for all columns
    y = res.dual
    assert y @ b > 1e-6
    assert np.all(A.T @ y <= 1e-9)


def test_phase2_optimum_and_dual():
    # min -x1 - 2 x2 s.t. x1 + x2 = 1 -> x = (0, 1), value -2, dual y = -2
    A = np.array([[1., 1.]])
    b = np.array([1.])
    res = simplex_solve(A, b, c=np.array([-1., -2.]))
    assert res.status == "optimal"
    assert res.value == pytest.approx(-2.0, abs=1e-12)
    assert np.allclose(res.x, [0.0, 1.0], atol=1e-12)
    # dual feasibility: c_j - y'A_j >= 0
    assert np.all(np.array([-1., -2.]) - A.T @ res.dual >= -1e-9)
    assert res.dual[0] == pytest.approx(-2.0, abs=1e-9)


def test_unbounded_detection():
    # min -x1 s.t. x1 - x2 = 0: ray (t, t) drives the objective to -inf
    res = simplex_solve(np.array([[1., -1.]]), np.array([0.]), c=np.array([-1., 0.]))
    assert res.status == "unbounded"


def test_redundant_rows_are_harmless():
    A = np.array([[1., 1.], [2., 2.]])
    b = np.array([1., 2.])
    res = simplex_solve(A, b, c=np.array([1., 3.]))
    assert res.status == "optimal"
    assert res.value == pytest.approx(1.0, abs=1e-12)


def test_negative_rhs_rows_are_flipped():
    A = np.array([[-1., -1.]])
    b = np.array([-1.])
    res = simplex_solve(A, b, c=np.array([2., 1.]))
    assert res.status == "optimal"
    assert res.value == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(res.x, [0., 1.], atol=1e-12)


def test_random_feasible_instances_recover_witness(rng):
    for _ in range(25):
        m, n = 4, 9
        A = rng.standard_normal((m, n))
        x_true = np.abs(rng.standard_normal(n))
        b = A @ x_true
        res = simplex_solve(A, b)
        assert res.status == "optimal"
        assert np.max(np.abs(A @ res.x - b)) <= 1e-8 * max(1.0, np.abs(b).max())
        assert res.x.min() >= -1e-12


def test_random_infeasible_instances_certify(rng):
    # q outside the simplex hull of the columns: append a separating row
    for _ in range(25):
        n = 6
        cols = rng.dirichlet(np.ones(4), size=n).T  # 4 x n, columns on the simplex
        target = rng.dirichlet(np.ones(4)) * 0.5    # not a probability vector
        A = np.vstack([cols, np.ones((1, n))])
        b = np.concatenate([target, [1.0]])
        res = simplex_solve(A, b)
        assert res.status == "infeasible"
        y = res.dual
        assert y @ b > np.max(A.T @ y) - 1e-9
        assert y @ b - np.max(A.T @ y) >= res.phase1_value * 0.5 - 1e-9
