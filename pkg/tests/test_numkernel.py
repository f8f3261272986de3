import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lftnav.numkernel import (
    NotSymmetricError,
    SingularResolventError,
    chol_posdef,
    is_posdef,
    max_sv_freq,
    max_sv_freq_batch,
    sym_eig,
)


def random_symmetric(rng, n):
    M = rng.standard_normal((n, n))
    return M + M.T


def test_sym_eig_identity():
    w, V = sym_eig(np.eye(3))
    np.testing.assert_allclose(w, [1, 1, 1])
    np.testing.assert_allclose(V.T @ V, np.eye(3), atol=1e-15)


def test_sym_eig_diagonal_sorted():
    w, _ = sym_eig(np.diag([2.0, -1.0]))
    np.testing.assert_allclose(w, [-1.0, 2.0])


def test_sym_eig_rejects_asymmetric():
    with pytest.raises(NotSymmetricError):
        sym_eig(np.array([[1.0, 2.0], [0.0, 1.0]]))


@pytest.mark.parametrize("n", [1, 2, 6, 15, 30])
def test_sym_eig_reconstruction(n):
    rng = np.random.default_rng(n)
    A = random_symmetric(rng, n)
    w, V = sym_eig(A)
    norm = np.linalg.norm(A)
    assert np.linalg.norm(A - V @ np.diag(w) @ V.T) <= 1e-10 * norm
    assert np.linalg.norm(A @ V - V @ np.diag(w)) <= 1e-10 * norm
    np.testing.assert_allclose(V.T @ V, np.eye(n), atol=1e-10)
    assert np.all(np.diff(w) >= 0)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_sym_eig_matches_characteristic_values(n, seed):
    A = random_symmetric(np.random.default_rng(seed), n)
    w, V = sym_eig(A)
    # Rayleigh quotients of the returned vectors are the returned values.
    np.testing.assert_allclose(np.einsum("ij,ik,kj->j", V, A, V), w, atol=1e-9 * max(1, np.abs(w).max()))


def test_chol_identity():
    np.testing.assert_array_equal(chol_posdef(np.eye(2)), np.eye(2))


def test_chol_indefinite():
    assert chol_posdef(np.diag([1.0, -1.0])) is None
    assert not is_posdef(np.diag([1.0, -1.0]))


def test_chol_small_spd():
    A = np.array([[4.0, 2.0], [2.0, 3.0]])
    L = chol_posdef(A)
    # hand factor: L = [[2, 0], [1, sqrt(2)]]
    np.testing.assert_allclose(L, [[2.0, 0.0], [1.0, np.sqrt(2.0)]], rtol=1e-15)
    np.testing.assert_allclose(L @ L.T, A, rtol=1e-10)


def test_chol_pivot_tolerance_demands_margin():
    A = np.diag([1.0, 1e-9])
    assert is_posdef(A)
    assert not is_posdef(A, tol=1e-6)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 20), st.integers(0, 2**32 - 1))
def test_chol_round_trip(n, seed):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((n, n))
    A = M @ M.T + n * np.eye(n)
    L = chol_posdef(A)
    assert L is not None
    assert np.linalg.norm(L @ L.T - A) <= 1e-10 * np.linalg.norm(A)


def test_max_sv_first_order_dc_and_rolloff():
    assert max_sv_freq(-1.0, 1.0, 1.0, 0.0) == pytest.approx(1.0, rel=1e-14)
    assert max_sv_freq(-1.0, 1.0, 1.0, np.inf) == 0.0
    assert max_sv_freq(-1.0, 1.0, 1.0, 1e8) < 1e-7
    assert max_sv_freq(-2.0, 1.0, 1.0, 0.0) == pytest.approx(0.5, rel=1e-14)


@pytest.mark.parametrize("a,b,c", [(-1.0, 1.0, 1.0), (-3.5, 2.0, -0.7), (0.4, 1.3, 2.0)])
@pytest.mark.parametrize("w", [0.0, 1e-3, 0.37, 1.0, 12.0, 1e3])
def test_max_sv_scalar_closed_form(a, b, c, w):
    expected = abs(c * b / complex(-a, w))
    assert max_sv_freq(a, b, c, w) == pytest.approx(expected, rel=1e-12)


def test_max_sv_singular_resolvent():
    with pytest.raises(SingularResolventError):
        max_sv_freq(0.0, 1.0, 1.0, 0.0)
    A = np.array([[0.0, 2.0], [-2.0, 0.0]])
    with pytest.raises(SingularResolventError):
        max_sv_freq(A, np.eye(2), np.eye(2), 2.0)


def test_batch_agrees_with_single():
    rng = np.random.default_rng(3)
    A = rng.standard_normal((5, 4, 4)) - 3 * np.eye(4)
    B = rng.standard_normal((5, 4, 6))
    C = rng.standard_normal((2, 4))
    omegas = np.array([0.0, 0.5, 3.0, 40.0])
    batch = max_sv_freq_batch(A, B, C, omegas)
    for i in range(5):
        for k, w in enumerate(omegas):
            assert batch[i, k] == pytest.approx(max_sv_freq(A[i], B[i], C, w), rel=1e-10)
