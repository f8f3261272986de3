import numpy as np
import pytest

from lftnav.lmi import affine_from_callable, max_eig, solve_feasibility


def scalar_brl(gamma):
    # A=-1, B=1, C=1 with P > 1 normalization
    def fn(x):
        p = x[0]
        return [np.array([[-2 * p + 1, p / gamma], [p / gamma, -1.0]]), np.array([[1.0 - p]])]

    return affine_from_callable(fn, 1)


def test_scalar_brl_feasible():
    res = solve_feasibility(scalar_brl(2.0))
    assert res.feasible
    assert res.t < 0
    assert max_eig(scalar_brl(2.0), res.x) < 0


def test_scalar_brl_infeasible():
    res = solve_feasibility(scalar_brl(0.5))
    assert res.status == "infeasible"
    assert res.lower_bound > 0


def test_affine_probe_roundtrip():
    rng = np.random.default_rng(0)
    F = [rng.normal(size=(3, 3)) for _ in range(4)]
    F = [f + f.T for f in F]
    G = [rng.normal(size=(2, 2)) for _ in range(4)]
    G = [g + g.T for g in G]

    def fn(x):
        return [F[0] + sum(xi * f for xi, f in zip(x, F[1:])), G[0] + sum(xi * g for xi, g in zip(x, G[1:]))]

    lmi = affine_from_callable(fn, 3)
    x = rng.normal(size=3)
    for a, b in zip(lmi.evaluate(x), fn(x)):
        np.testing.assert_allclose(a, b, atol=1e-12)


def test_homogeneity():
    # F(x) = sum x_i F_i has no offset, so feasibility is scale invariant
    A = np.array([[-1.0, 2.0], [0.0, -3.0]])

    def fn(x):
        P = np.array([[x[0], x[1]], [x[1], x[2]]])
        return [A.T @ P + P @ A, -P]

    lmi = affine_from_callable(fn, 3)
    # normalized copy: P > I
    norm = affine_from_callable(lambda x: fn(x) + [np.eye(2) - np.array([[x[0], x[1]], [x[1], x[2]]])], 3)
    res = solve_feasibility(norm)
    assert res.feasible
    for alpha in (1e-3, 0.5, 7.0, 1e3):
        assert max_eig(lmi, alpha * res.x) < 0
        assert np.isclose(max_eig(lmi, alpha * res.x), alpha * max_eig(lmi, res.x))


def test_unstable_lyapunov_infeasible():
    A = np.array([[0.1, 0.0], [0.0, -1.0]])

    def fn(x):
        P = np.array([[x[0], x[1]], [x[1], x[2]]])
        return [A.T @ P + P @ A, np.eye(2) - P]

    assert solve_feasibility(affine_from_callable(fn, 3)).status == "infeasible"


def test_margin_respected():
    res = solve_feasibility(scalar_brl(2.0), margin=0.05)
    assert res.feasible
    assert max_eig(scalar_brl(2.0), res.x) < -0.05


@pytest.mark.parametrize("x0", [None, [3.0]])
def test_warm_start(x0):
    assert solve_feasibility(scalar_brl(1.5), x0=x0).feasible
