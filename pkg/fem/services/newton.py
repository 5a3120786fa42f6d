import logging
from typing import List, Optional, Protocol, Tuple

import numpy as np
import scipy.sparse as sp

from fem.exceptions import DivergenceError, NonFiniteResidualError
from fem.services.linear_solver import sparse_solve

logger = logging.getLogger(__name__)

GROWTH_LIMIT = 3


class NonlinearProblem(Protocol):
    def assemble(self, x: np.ndarray) -> Tuple[np.ndarray, object]:
        """Return the residual and Jacobian (dense array or sparse matrix) at ``x``."""


def _solve(jacobian, rhs: np.ndarray) -> np.ndarray:
    if sp.issparse(jacobian):
        return sparse_solve(jacobian, rhs)
    return sparse_solve(sp.csc_matrix(np.atleast_2d(jacobian)), rhs)


def _norm(residual: np.ndarray) -> float:
    norm = float(np.linalg.norm(residual))
    if not np.isfinite(norm):
        raise NonFiniteResidualError("Newton residual is not finite")
    return norm


def newton_solve(problem: NonlinearProblem, x0: np.ndarray, abs_tol: float = 1e-10,
                 rel_tol: float = 1e-10, max_iter: int = 25,
                 history: Optional[List[float]] = None) -> Tuple[np.ndarray, int]:
    """
    Undamped Newton iteration.

    Converged when |r| <= max(abs_tol, rel_tol * |r0|).

    Args:
        problem: object exposing ``assemble(x) -> (residual, jacobian)``
        x0: initial iterate (constrained entries already lifted)
        abs_tol: absolute residual tolerance
        rel_tol: tolerance relative to the initial residual norm
        max_iter: maximum number of Newton steps, at least 1
        history: optional list receiving every residual norm

    Returns:
        (solution, number of Newton steps taken)

    Raises:
        DivergenceError: residual grew three consecutive times or max_iter was reached
        NonFiniteResidualError: residual became NaN/Inf
    """
    if max_iter < 1:
        raise ValueError(f"max_iter must be at least 1, got {max_iter}")

    x = np.array(x0, dtype=float, copy=True)
    residual, jacobian = problem.assemble(x)
    norm = _norm(residual)
    tolerance = max(abs_tol, rel_tol * norm)
    history = [] if history is None else history
    history.append(norm)
    logger.debug(f"Newton start: |r0| = {norm:.6e}, target {tolerance:.3e}")
    if norm <= tolerance:
        return x, 0

    growth = 0
    for iteration in range(1, max_iter + 1):
        x = x + _solve(jacobian, -residual)
        residual, jacobian = problem.assemble(x)
        previous, norm = norm, _norm(residual)
        history.append(norm)
        logger.debug(f"Newton iteration {iteration}: |r| = {norm:.6e}")

        if norm <= tolerance:
            return x, iteration

        growth = growth + 1 if norm > previous else 0
        if growth >= GROWTH_LIMIT:
            raise DivergenceError(
                f"Newton residual grew {GROWTH_LIMIT} consecutive times (|r| = {norm:.3e})",
                iterations=iteration,
                residuals=history,
            )

    raise DivergenceError(
        f"Newton did not converge in {max_iter} iterations (|r| = {norm:.3e}, target {tolerance:.3e})",
        iterations=max_iter,
        residuals=history,
    )
