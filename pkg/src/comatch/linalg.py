"""Small dense linear algebra built on the cyclic Jacobi eigen-solver."""

import numpy as np

from . import kernels


def eigh(A):
    """Eigenvalues (ascending) and eigenvectors (columns) of a symmetric matrix."""
    w, V, _ = kernels.jacobi_eigh(A)
    return w, V


def null_vector(A):
    """Unit vector minimizing ``|A x|`` and the two smallest eigenvalues of ``A^T A``."""
    A = np.asarray(A, dtype=np.float64)
    w, V = eigh(A.T @ A)
    return V[:, 0], w[0], w[1], w[-1]


def svd3(M):
    """SVD of a 3x3 matrix: ``M = U @ diag(s) @ Vt`` with ``s`` descending.

    ``V`` comes from the eigenvectors of ``M^T M``; ``U`` columns are
    ``M v / s`` for the non-negligible singular values and completed by cross
    products otherwise, so ``U`` is always a proper orthonormal basis.
    """
    M = np.asarray(M, dtype=np.float64)
    w, V = eigh(M.T @ M)
    return svd3_from_eigh(M, w, V)


def eigh_batch(A):
    """:func:`eigh` over a stack of symmetric matrices ``[B, n, n]``."""
    w, V, _ = kernels.jacobi_eigh_batch(A)
    return w, V


def svd3_from_eigh(M, w, V):
    """Finish :func:`svd3` given the ascending eigen-decomposition of ``M^T M``."""
    w, V = w[::-1], V[:, ::-1]
    s = np.sqrt(np.clip(w, 0.0, None))
    tiny = 1e-12 * max(s[0], 1e-300)
    U = np.zeros((3, 3))
    u0 = M @ V[:, 0]
    if s[0] <= 1e-300:
        return np.eye(3), np.zeros(3), V.T
    U[:, 0] = u0 / np.linalg.norm(u0)
    if s[1] > tiny:
        u1 = M @ V[:, 1]
        u1 -= U[:, 0] * (U[:, 0] @ u1)
        U[:, 1] = u1 / np.linalg.norm(u1)
    else:
        U[:, 1] = _orthogonal_to(U[:, 0])
    U[:, 2] = np.cross(U[:, 0], U[:, 1])
    if s[2] > tiny and U[:, 2] @ (M @ V[:, 2]) < 0:
        U[:, 2] = -U[:, 2]
    return U, s, V.T


def _orthogonal_to(u):
    a = np.eye(3)[np.argmin(np.abs(u))]
    v = np.cross(u, a)
    return v / np.linalg.norm(v)
