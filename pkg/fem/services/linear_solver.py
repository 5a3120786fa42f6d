import logging

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from fem.exceptions import DimensionMismatchError, SingularSystemError

logger = logging.getLogger(__name__)

RELATIVE_RESIDUAL_TOL = 1e-10
REFINEMENT_STEPS = 3


def sparse_solve(A, b: np.ndarray) -> np.ndarray:
    """
    Solve A x = b with a sparse LU factorization (SuperLU, partial pivoting).

    A few steps of iterative refinement are applied; the relative residual of
    the returned solution is below 1e-10.

    Raises:
        DimensionMismatchError: A is not square or b has the wrong length
        SingularSystemError: the factorization fails or the residual check fails
    """
    A = sp.csc_matrix(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.shape[0] != A.shape[1]:
        raise DimensionMismatchError(f"Matrix is not square: {A.shape}")
    if b.ndim != 1 or b.shape[0] != A.shape[0]:
        raise DimensionMismatchError(f"Right-hand side has shape {b.shape}, matrix {A.shape}")

    b_norm = np.linalg.norm(b)
    if b_norm == 0.0:
        return np.zeros_like(b)

    try:
        lu = splu(A)
    except RuntimeError as e:
        raise SingularSystemError(f"Sparse LU factorization failed: {e}") from e

    x = lu.solve(b)
    relative = np.inf
    for step in range(REFINEMENT_STEPS + 1):
        if not np.all(np.isfinite(x)):
            raise SingularSystemError("Sparse LU produced a non-finite solution")
        r = b - A @ x
        relative = np.linalg.norm(r) / b_norm
        if relative < RELATIVE_RESIDUAL_TOL or step == REFINEMENT_STEPS:
            break
        logger.debug(f"Refining sparse solve, relative residual {relative:.3e}")
        x = x + lu.solve(r)

    if relative >= RELATIVE_RESIDUAL_TOL:
        raise SingularSystemError(
            f"Ill-conditioned system: relative residual {relative:.3e} after refinement"
        )
    return x
