"""
Small dense tensor helpers acting on the last two axes.

Determinants and inverses use explicit cofactor formulas so that they stay
complex-analytic, as required by complex-step differentiation.
"""
import numpy as np


def det(A: np.ndarray) -> np.ndarray:
    n = A.shape[-1]
    if n == 2:
        return A[..., 0, 0] * A[..., 1, 1] - A[..., 0, 1] * A[..., 1, 0]
    if n == 3:
        return (
            A[..., 0, 0] * (A[..., 1, 1] * A[..., 2, 2] - A[..., 1, 2] * A[..., 2, 1])
            - A[..., 0, 1] * (A[..., 1, 0] * A[..., 2, 2] - A[..., 1, 2] * A[..., 2, 0])
            + A[..., 0, 2] * (A[..., 1, 0] * A[..., 2, 1] - A[..., 1, 1] * A[..., 2, 0])
        )
    raise ValueError(f"det supports 2x2 and 3x3 matrices, got {n}x{n}")


def cofactor(A: np.ndarray) -> np.ndarray:
    """Cofactor matrix, so that inv(A) = cofactor(A).T / det(A)."""
    n = A.shape[-1]
    C = np.empty_like(A)
    if n == 2:
        C[..., 0, 0] = A[..., 1, 1]
        C[..., 0, 1] = -A[..., 1, 0]
        C[..., 1, 0] = -A[..., 0, 1]
        C[..., 1, 1] = A[..., 0, 0]
        return C
    if n == 3:
        for i in range(3):
            for j in range(3):
                r = [k for k in range(3) if k != i]
                c = [k for k in range(3) if k != j]
                minor = A[..., r[0], c[0]] * A[..., r[1], c[1]] - A[..., r[0], c[1]] * A[..., r[1], c[0]]
                C[..., i, j] = minor if (i + j) % 2 == 0 else -minor
        return C
    raise ValueError(f"cofactor supports 2x2 and 3x3 matrices, got {n}x{n}")


def inv(A: np.ndarray) -> np.ndarray:
    return transpose(cofactor(A)) / det(A)[..., None, None]


def transpose(A: np.ndarray) -> np.ndarray:
    return np.swapaxes(A, -1, -2)


def matmul(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return np.einsum('...ij,...jk->...ik', A, B)


def matvec(A: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.einsum('...ij,...j->...i', A, v)


def ddot(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return np.einsum('...ij,...ij->...', A, B)


def trace(A: np.ndarray) -> np.ndarray:
    return np.einsum('...ii->...', A)
