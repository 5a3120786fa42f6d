import logging
from typing import Callable, Optional, Tuple

import numpy as np
import scipy.sparse as sp
from django.conf import settings

from fem.exceptions import NonFiniteResidualError
from fem.services.dofmap import DofMap

logger = logging.getLogger(__name__)

# Complex step; any value far below sqrt(machine eps) gives exact derivatives
COMPLEX_STEP = 1e-30

# Element kernel: local coefficients (..., ncells, nloc) -> element rows of the same shape
ElementKernel = Callable[[np.ndarray], np.ndarray]


def _chunk_size(chunk: Optional[int]) -> int:
    if chunk is not None:
        return max(1, int(chunk))
    return int(getattr(settings, 'POROMECHANICS', {}).get('ASSEMBLY_CHUNK', 8))


def gather(x: np.ndarray, dofmap: DofMap) -> np.ndarray:
    dofmap.check_length(x)
    return x[dofmap.cell_dofs]


def _check_finite(values: np.ndarray, cell_axis: int = -2):
    finite = np.isfinite(values)
    if finite.all():
        return
    per_cell = np.moveaxis(finite, cell_axis, 0).reshape(values.shape[cell_axis], -1).all(axis=1)
    bad = np.flatnonzero(~per_cell)
    cell = int(bad[0])
    raise NonFiniteResidualError(
        f"Non-finite element residual in {bad.size} cells (first offending cell {cell})",
        cell=cell,
    )


def assemble_residual(kernel: ElementKernel, x: np.ndarray, dofmap: DofMap,
                      constrained: Optional[np.ndarray] = None) -> np.ndarray:
    """Global residual vector; constrained entries are zeroed."""
    element_rows = np.asarray(kernel(gather(x, dofmap)))
    _check_finite(element_rows)
    residual = np.bincount(
        dofmap.cell_dofs.ravel(), weights=element_rows.real.ravel(), minlength=dofmap.num_dofs
    )
    if constrained is not None and len(constrained):
        residual[constrained] = 0.0
    return residual


def element_tangents(kernel: ElementKernel, local: np.ndarray, chunk: Optional[int] = None) -> np.ndarray:
    """
    Element Jacobians by complex-step differentiation of the element kernel.

    The local DoFs are perturbed ``chunk`` at a time; each perturbation is a
    leading batch axis, so the kernel is evaluated once per chunk for every
    cell.

    Returns:
        Array (ncells, nloc, nloc) with entry [c, i, j] = d row_i / d dof_j
    """
    ncells, nloc = local.shape
    chunk = _chunk_size(chunk)
    tangents = np.empty((ncells, nloc, nloc))
    for start in range(0, nloc, chunk):
        columns = np.arange(start, min(start + chunk, nloc))
        perturbed = np.repeat(local[None, :, :].astype(complex), columns.size, axis=0)
        perturbed[np.arange(columns.size), :, columns] += 1j * COMPLEX_STEP
        rows = np.asarray(kernel(perturbed))
        # rows: (batch, ncells, nloc) -> tangents[:, :, columns]
        tangents[:, :, columns] = np.moveaxis(rows.imag / COMPLEX_STEP, 0, -1)
    return tangents


def apply_constraints(matrix: sp.csr_matrix, residual: np.ndarray,
                      constrained: Optional[np.ndarray]) -> Tuple[np.ndarray, sp.csr_matrix]:
    """Replace constrained rows by identity rows and zero their residual entries."""
    if constrained is None or not len(constrained):
        return residual, matrix
    n = matrix.shape[0]
    keep = np.ones(n)
    keep[constrained] = 0.0
    matrix = (sp.diags(keep) @ matrix + sp.diags(1.0 - keep)).tocsr()
    matrix.eliminate_zeros()
    residual = residual.copy()
    residual[constrained] = 0.0
    return residual, matrix


def assemble(kernel: ElementKernel, x: np.ndarray, dofmap: DofMap,
             constrained: Optional[np.ndarray] = None,
             chunk: Optional[int] = None) -> Tuple[np.ndarray, sp.csr_matrix]:
    """
    Assemble the global residual and Jacobian of an element kernel.

    Args:
        kernel: element residual evaluator, complex-analytic in its input
        x: global coefficient vector
        dofmap: numbering of the fields
        constrained: global DoFs with essential conditions (identity rows)
        chunk: number of local DoFs differentiated per kernel call

    Returns:
        (residual, CSR matrix) with duplicate entries summed

    Raises:
        NonFiniteResidualError: if the kernel yields NaN or Inf on some cell
    """
    local = gather(x, dofmap)
    element_rows = np.asarray(kernel(local))
    _check_finite(element_rows)
    tangents = element_tangents(kernel, local, chunk)
    _check_finite(tangents, cell_axis=0)

    cell_dofs = dofmap.cell_dofs
    n = dofmap.num_dofs
    residual = np.bincount(cell_dofs.ravel(), weights=element_rows.real.ravel(), minlength=n)
    rows = np.repeat(cell_dofs, cell_dofs.shape[1], axis=1).ravel()
    cols = np.tile(cell_dofs, (1, cell_dofs.shape[1])).ravel()
    matrix = sp.coo_matrix((tangents.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    matrix.sum_duplicates()

    residual, matrix = apply_constraints(matrix, residual, constrained)
    logger.debug(f"Assembled {n} dofs, {matrix.nnz} nonzeros, |r| = {np.linalg.norm(residual):.3e}")
    return residual, matrix


def set_constrained_values(x: np.ndarray, constrained: Optional[np.ndarray],
                           values: Optional[np.ndarray] = None) -> np.ndarray:
    """Lift essential values into a state vector before a Newton solve."""
    x = x.copy()
    if constrained is None or not len(constrained):
        return x
    x[constrained] = 0.0 if values is None else values
    return x
