"""Small dense linear-algebra kernel.

Everything here works on problems of a few dozen rows at most. The symmetric
eigensolver is a cyclic Jacobi method and the definiteness test is a pivoted
Cholesky factorization; both are used as certificates by the synthesis code,
so they report failure instead of raising.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "NotSymmetricError",
    "SingularResolventError",
    "check_symmetric",
    "sym_eig",
    "chol_posdef",
    "is_posdef",
    "solve",
    "max_sv_freq",
    "max_sv_freq_batch",
]


class NotSymmetricError(ValueError):
    pass


class SingularResolventError(ArithmeticError):
    """Raised when ``jwI - A`` cannot be inverted at the requested frequency."""

    def __init__(self, omega: float):
        super().__init__(f"resolvent (j*w*I - A) is singular at w={omega!r}")
        self.omega = omega


def check_symmetric(A, rtol: float = 1e-12) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NotSymmetricError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    scale = max(np.abs(A).max(), np.finfo(float).tiny)
    asym = np.abs(A - A.T).max()
    if asym > rtol * scale:
        raise NotSymmetricError(f"relative asymmetry {asym / scale:.3e} exceeds {rtol:g}")
    return 0.5 * (A + A.T)


def sym_eig(A, tol: float = 1e-15, max_sweeps: int = 60):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Parameters
    ----------
    A : array_like, shape (n, n)
        Symmetric matrix.
    tol : float
        Sweeps stop once the off-diagonal Frobenius norm drops below
        ``tol * ||A||_F``.

    Returns
    -------
    w : ndarray, shape (n,)
        Eigenvalues in ascending order.
    V : ndarray, shape (n, n)
        Orthonormal eigenvectors, ``A @ V = V @ diag(w)``.
    """
    a = check_symmetric(A).copy()
    n = a.shape[0]
    V = np.eye(n)
    norm = np.linalg.norm(a)
    if norm == 0.0:
        return np.zeros(n), V
    for _ in range(max_sweeps):
        off = np.sqrt(2.0 * np.sum(np.triu(a, 1) ** 2))
        if off <= tol * norm:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.copysign(1.0, theta) / (abs(theta) + np.hypot(theta, 1.0))
                c = 1.0 / np.hypot(t, 1.0)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0
                v_p = V[:, p].copy()
                V[:, p] = c * v_p - s * V[:, q]
                V[:, q] = s * v_p + c * V[:, q]
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


def chol_posdef(A, tol: float = 0.0):
    """Lower Cholesky factor of ``A``, or ``None`` if ``A`` is not positive definite.

    A pivot counts as positive only when it exceeds ``tol * max(diag(A))``, so a
    positive ``tol`` asks for a margin rather than bare positivity.
    """
    a = check_symmetric(A)
    n = a.shape[0]
    floor = tol * max(np.max(np.diag(a)), 0.0)
    L = np.zeros_like(a)
    for j in range(n):
        pivot = a[j, j] - L[j, :j] @ L[j, :j]
        if not pivot > floor or pivot <= 0.0:
            return None
        L[j, j] = np.sqrt(pivot)
        if j + 1 < n:
            L[j + 1 :, j] = (a[j + 1 :, j] - L[j + 1 :, :j] @ L[j, :j]) / L[j, j]
    return L


def is_posdef(A, tol: float = 0.0) -> bool:
    return chol_posdef(A, tol) is not None


def solve(A, b):
    A = np.asarray(A, dtype=float)
    try:
        x = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"singular system: {exc}") from None
    return x


def _resolvent_apply(A, B, omega):
    # (jwI - A) X = B as a real 2n x 2n system in (Re X, Im X).
    n = A.shape[0]
    K = np.block([[-A, -omega * np.eye(n)], [omega * np.eye(n), -A]])
    rhs = np.vstack([B, np.zeros_like(B)])
    if np.linalg.cond(K) > 1e14:
        raise SingularResolventError(omega)
    try:
        X = np.linalg.solve(K, rhs)
    except np.linalg.LinAlgError:
        raise SingularResolventError(omega) from None
    return X[:n], X[n:]


def max_sv_freq(A, B, C, omega: float) -> float:
    """Largest singular value of ``C (jwI - A)^-1 B``.

    ``omega = inf`` returns 0, the limit for a strictly proper system.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    if np.isinf(omega):
        return 0.0
    Xr, Xi = _resolvent_apply(A, B, float(omega))
    Gr = C @ Xr
    Gi = C @ Xi
    # Singular values of the real embedding [[Gr, -Gi], [Gi, Gr]] are those of
    # Gr + j Gi, each repeated twice.
    R = np.block([[Gr, -Gi], [Gi, Gr]])
    w, _ = sym_eig(R.T @ R)
    return float(np.sqrt(max(w[-1], 0.0)))


def max_sv_freq_batch(A, B, C, omegas) -> np.ndarray:
    """Vectorized :func:`max_sv_freq` over stacks of systems and frequencies.

    ``A`` has shape (..., n, n), ``B`` (..., n, m), ``C`` (..., p, n); the result
    has shape (..., len(omegas)).
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    C = np.asarray(C, dtype=float)
    omegas = np.asarray(omegas, dtype=float)
    n = A.shape[-1]
    eye = np.eye(n)
    K = 1j * omegas[:, None, None] * eye - A[..., None, :, :]
    Bs = np.broadcast_to(B[..., None, :, :], K.shape[:-2] + B.shape[-2:])
    X = np.linalg.solve(K, Bs.astype(complex))
    G = C[..., None, :, :] @ X
    sv = np.linalg.svd(G, compute_uv=False)
    return sv[..., 0]
