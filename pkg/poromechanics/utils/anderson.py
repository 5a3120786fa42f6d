import logging
from collections import deque
from typing import Optional

import numpy as np
import scipy.linalg

logger = logging.getLogger(__name__)

# Relative size of a diagonal entry of R below which the difference matrix is rank deficient
RANK_TOL = 1e-12


class AndersonState:
    """
    History of a depth-m Anderson acceleration.

    Keeps at most m + 1 pairs (x_i, g(x_i)). ``weights`` holds the affine
    combination coefficients of the last update, oldest history entry
    first; they always sum to one.
    """

    def __init__(self, depth: int):
        if depth < 0:
            raise ValueError(f"Anderson depth must be non-negative, got {depth}")
        self.depth = depth
        self.iterates = deque(maxlen=depth + 1)
        self.evaluations = deque(maxlen=depth + 1)
        self.weights: Optional[np.ndarray] = None
        self.dropped_columns = 0

    def __len__(self):
        return len(self.iterates)

    def reset(self):
        self.iterates.clear()
        self.evaluations.clear()
        self.weights = None


def _least_squares(dR: np.ndarray, r: np.ndarray):
    """
    Solve min |r - dR gamma| by QR, dropping the oldest columns until dR has full rank.

    Returns:
        (gamma, number of dropped columns); gamma is None when every column was dropped
    """
    dropped = 0
    while dR.shape[1] > 0:
        Q, R = np.linalg.qr(dR, mode='reduced')
        diagonal = np.abs(np.diag(R))
        if diagonal.size and diagonal.min() > RANK_TOL * max(diagonal.max(), np.finfo(float).tiny):
            return scipy.linalg.solve_triangular(R, Q.T @ r), dropped
        dR = dR[:, 1:]
        dropped += 1
    return None, dropped


def anderson_update(aa: AndersonState, x_k: np.ndarray, g_k: np.ndarray) -> np.ndarray:
    """
    One Anderson step in difference form.

    The residual differences of the history form the columns of dR; the
    coefficients gamma minimize |r_k - dR gamma| and the new iterate is
    g_k - dG gamma, which equals sum_i alpha_i g(x_i) with sum alpha_i = 1.

    Args:
        aa: history, updated in place
        x_k: current iterate
        g_k: fixed-point map evaluated at x_k

    Returns:
        The next iterate (plain Picard g_k for depth 0 or an empty history)
    """
    x_k = np.asarray(x_k, dtype=float)
    g_k = np.asarray(g_k, dtype=float)
    if x_k.shape != g_k.shape:
        raise ValueError(f"Iterate shape {x_k.shape} differs from evaluation shape {g_k.shape}")

    aa.iterates.append(x_k.copy())
    aa.evaluations.append(g_k.copy())
    count = len(aa)
    if aa.depth == 0 or count < 2:
        aa.weights = np.eye(count)[-1]
        return g_k.copy()

    G = np.column_stack(aa.evaluations)
    X = np.column_stack(aa.iterates)
    residuals = G - X
    dR = np.diff(residuals, axis=1)
    dG = np.diff(G, axis=1)

    gamma, dropped = _least_squares(dR, residuals[:, -1])
    aa.dropped_columns += dropped
    if dropped:
        logger.debug(f"Anderson history rank deficient, dropped {dropped} oldest columns")
    if gamma is None:
        aa.weights = np.eye(count)[-1]
        return g_k.copy()

    dG = dG[:, dropped:]
    full = np.zeros(count - 1)
    full[dropped:] = gamma
    padded = np.concatenate([[0.0], full, [0.0]])
    aa.weights = np.diff(padded)
    aa.weights[-1] += 1.0
    return g_k - dG @ gamma
