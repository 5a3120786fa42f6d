import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from fem.exceptions import SolverError

logger = logging.getLogger(__name__)

MAX_DEGREE = 20


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """
    Quadrature rule on the reference simplex.

    ``points`` holds reference coordinates (one row per point), the reference
    cell being the unit right triangle / tetrahedron with measure 1/2 and 1/6.
    """
    dim: int
    degree: int
    points: np.ndarray
    weights: np.ndarray

    @property
    def num_points(self) -> int:
        return self.weights.shape[0]

    def integrate(self, func) -> float:
        """Integrate ``func(x, y[, z])`` over the reference cell."""
        values = func(*self.points.T)
        return float(np.dot(self.weights, values))


def _gauss_jacobi01(n: int, alpha: int):
    # Gauss-Jacobi points on [0, 1] for the weight (1 - t)^alpha
    if alpha == 0:
        x, w = roots_legendre(n)
    else:
        x, w = roots_jacobi(n, alpha, 0.0)
    return 0.5 * (1.0 + x), w / 2.0 ** (alpha + 1)


@lru_cache(maxsize=None)
def quadrature(dim: int, degree: int = 6) -> QuadratureRule:
    """
    Collapsed-coordinate Gauss-Jacobi rule exact for polynomials up to ``degree``.

    The simplex is obtained from the unit square/cube by the Duffy collapse;
    the collapse Jacobian is absorbed into Jacobi weights so every weight is
    positive and the rule uses ceil((degree + 1) / 2) points per direction.

    Args:
        dim: 2 (triangle) or 3 (tetrahedron)
        degree: polynomial exactness degree, 0..MAX_DEGREE

    Returns:
        QuadratureRule

    Raises:
        SolverError: for an unsupported dimension or degree
    """
    if dim not in (2, 3):
        raise SolverError(f"Quadrature is available in 2D and 3D, not {dim}D")
    if not isinstance(degree, (int, np.integer)) or degree < 0 or degree > MAX_DEGREE:
        raise SolverError(f"Unsupported quadrature degree {degree}")

    n = max(1, math.ceil((degree + 1) / 2))
    s, ws = _gauss_jacobi01(n, 0)
    r, wr = _gauss_jacobi01(n, 1)

    if dim == 2:
        S, T = np.meshgrid(s, r, indexing='ij')
        W = np.outer(ws, wr)
        points = np.column_stack([(S * (1.0 - T)).ravel(), T.ravel()])
    else:
        t, wt = _gauss_jacobi01(n, 2)
        S, R, T = np.meshgrid(s, r, t, indexing='ij')
        W = ws[:, None, None] * wr[None, :, None] * wt[None, None, :]
        points = np.column_stack([
            (S * (1.0 - R) * (1.0 - T)).ravel(),
            (R * (1.0 - T)).ravel(),
            T.ravel(),
        ])

    weights = W.ravel()
    if not np.all(np.isfinite(weights)):
        raise SolverError(f"Non-finite quadrature weights for dim={dim}, degree={degree}")
    logger.debug(f"Quadrature dim={dim} degree={degree}: {weights.size} points")
    return QuadratureRule(dim=dim, degree=int(degree), points=points, weights=weights)
