import numpy as np
import pytest
from numpy.testing import assert_allclose

from termkrig.errors import NumericalError
from termkrig.qp import solve_box_qp


def random_instance(rng, n_max=10, m_max=8, pin_prob=0.0):
    n = int(rng.integers(2, n_max + 1))
    m = int(rng.integers(1, m_max + 1))
    Q = rng.standard_normal((n, n))
    H = Q @ Q.T + 0.3 * np.eye(n)
    c = rng.standard_normal(n)
    A = rng.standard_normal((m, n))
    mid = A @ rng.standard_normal(n)
    half = rng.uniform(0.05, 0.8, m)
    half[rng.random(m) < pin_prob] = 0.0
    return H, c, A, mid - half, mid + half


def test_unconstrained_matches_direct_solve():
    H = np.array([[2.0, 0.3], [0.3, 1.0]])
    c = np.array([1.0, -2.0])
    res = solve_box_qp(H, c, np.zeros((0, 2)), np.zeros(0), np.zeros(0))
    assert_allclose(res.x, np.linalg.solve(H, -c), rtol=1e-14)
    assert res.kkt_residual <= 1e-14


def test_inactive_bounds_equal_unconstrained():
    rng = np.random.default_rng(3)
    for _ in range(20):
        H, c, A, lo, hi = random_instance(rng)
        wide_lo = lo - 1e3 * (hi - lo + 1)
        wide_hi = hi + 1e3 * (hi - lo + 1)
        res = solve_box_qp(H, c, A, wide_lo, wide_hi)
        assert_allclose(res.x, np.linalg.solve(H, -c), rtol=1e-9, atol=1e-11)


def test_single_active_upper_bound():
    res = solve_box_qp(
        np.eye(1), np.zeros(1), np.array([[1.0]]), np.array([-np.inf]), np.array([-1.0])
    )
    assert_allclose(res.x, [-1.0])
    assert res.active == [(0, -1)]


def test_equality_row_pins_value():
    res = solve_box_qp(
        np.eye(2), np.zeros(2), np.array([[1.0, 1.0]]), np.array([3.0]), np.array([3.0])
    )
    assert_allclose(res.x, [1.5, 1.5], rtol=1e-14)
    assert res.max_violation <= 1e-14


def test_redundant_consistent_equalities():
    A = np.array([[1.0, 1.0], [2.0, 2.0]])
    res = solve_box_qp(np.eye(2), np.zeros(2), A, np.array([2.0, 4.0]), np.array([2.0, 4.0]))
    assert_allclose(res.x, [1.0, 1.0], rtol=1e-13)


def test_kkt_and_feasibility_on_random_actives():
    rng = np.random.default_rng(11)
    for _ in range(60):
        H, c, A, lo, hi = random_instance(rng, pin_prob=0.2)
        res = solve_box_qp(H, c, A, lo, hi, tol=1e-12)
        assert res.kkt_residual <= 1e-8
        assert res.max_violation <= 1e-9


def test_matches_cvxopt_on_active_instances():
    cvxopt = pytest.importorskip("cvxopt")
    cvxopt.solvers.options.update(
        show_progress=False, abstol=1e-12, reltol=1e-12, feastol=1e-12
    )
    rng = np.random.default_rng(5)
    checked = 0
    for _ in range(40):
        H, c, A, lo, hi = random_instance(rng)
        res = solve_box_qp(H, c, A, lo, hi)
        G = cvxopt.matrix(np.vstack([A, -A]))
        h = cvxopt.matrix(np.concatenate([hi, -lo]))
        sol = cvxopt.solvers.qp(cvxopt.matrix(H), cvxopt.matrix(c), G, h)
        if sol["status"] != "optimal":
            continue
        xc = np.array(sol["x"]).ravel()
        assert_allclose(res.x, xc, rtol=1e-5, atol=1e-6)
        checked += 1
    assert checked >= 30


def feasible_directions(rng, A, lo, hi, x, step, count, budget=20000):
    """Random unit directions whose small step stays inside the tubes.

    Directions are projected onto the null space of pinned rows; for
    one-sided violations the sign is flipped before giving up.
    """
    eq = lo == hi
    proj = np.eye(x.size)
    if eq.any():
        Aeq = A[eq]
        proj = proj - np.linalg.pinv(Aeq) @ Aeq

    def ok(xt):
        v = A @ xt
        return np.all(v >= lo - 1e-12) and np.all(v <= hi + 1e-12)

    out = []
    for _ in range(budget):
        if len(out) >= count:
            break
        d = proj @ rng.standard_normal(x.size)
        norm = np.linalg.norm(d)
        if norm < 1e-12:
            continue
        d /= norm
        if ok(x + step * d):
            out.append(d)
        elif ok(x - step * d):
            out.append(-d)
    return out


def test_objective_never_improved_by_feasible_perturbations():
    rng = np.random.default_rng(17)
    H, c, A, lo, hi = random_instance(rng, n_max=8, m_max=6)
    res = solve_box_qp(H, c, A, lo, hi)
    f0 = 0.5 * res.x @ H @ res.x + c @ res.x
    dirs = feasible_directions(rng, A, lo, hi, res.x, 1e-4, 100)
    assert len(dirs) == 100
    for d in dirs:
        xt = res.x + 1e-4 * d
        ft = 0.5 * xt @ H @ xt + c @ xt
        assert ft >= f0 - 1e-12


def test_indefinite_hessian_rejected():
    H = np.array([[1.0, 0.0], [0.0, -1.0]])
    with pytest.raises(NumericalError, match="positive definite"):
        solve_box_qp(H, np.zeros(2), np.zeros((0, 2)), np.zeros(0), np.zeros(0))


def test_contradictory_pins_raise():
    A = np.array([[1.0], [1.0]])
    with pytest.raises(NumericalError):
        solve_box_qp(
            np.eye(1), np.zeros(1), A, np.array([1.0, 2.0]), np.array([1.0, 2.0])
        )
