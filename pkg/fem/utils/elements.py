import logging
from dataclasses import dataclass

import numpy as np

from fem.exceptions import SolverError
from fem.utils.mesh import local_edges
from fem.utils.quadrature import QuadratureRule

logger = logging.getLogger(__name__)

FAMILIES = ('P1', 'P2')


def num_nodes(family: str, dim: int) -> int:
    if family == 'P1':
        return dim + 1
    if family == 'P2':
        return (dim + 1) * (dim + 2) // 2
    raise SolverError(f"Unknown element family {family}")


def reference_nodes(family: str, dim: int) -> np.ndarray:
    """Reference coordinates of the element nodes: vertices first, then edge midpoints."""
    vertices = np.vstack([np.zeros(dim), np.eye(dim)])
    if family == 'P1':
        return vertices
    midpoints = np.array([0.5 * (vertices[a] + vertices[b]) for a, b in local_edges(dim)])
    return np.vstack([vertices, midpoints])


def tabulate(family: str, dim: int, points: np.ndarray):
    """
    Evaluate the Lagrange basis and its reference gradients.

    Args:
        family: 'P1' or 'P2'
        dim: spatial dimension
        points: reference coordinates, shape (npts, dim)

    Returns:
        (values, gradients) with shapes (npts, nnodes) and (npts, nnodes, dim)
    """
    points = np.atleast_2d(points)
    lam = np.column_stack([1.0 - points.sum(axis=1), points])
    dlam = np.vstack([-np.ones(dim), np.eye(dim)])

    if family == 'P1':
        values = lam
        grads = np.broadcast_to(dlam, (points.shape[0],) + dlam.shape).copy()
        return values, grads

    if family != 'P2':
        raise SolverError(f"Unknown element family {family}")

    vertex_values = lam * (2.0 * lam - 1.0)
    vertex_grads = (4.0 * lam - 1.0)[:, :, None] * dlam[None, :, :]
    edge_values = []
    edge_grads = []
    for a, b in local_edges(dim):
        edge_values.append(4.0 * lam[:, a] * lam[:, b])
        edge_grads.append(4.0 * (lam[:, a, None] * dlam[b] + lam[:, b, None] * dlam[a]))
    values = np.column_stack([vertex_values] + edge_values)
    grads = np.concatenate([vertex_grads, np.stack(edge_grads, axis=1)], axis=1)
    return values, grads


@dataclass(frozen=True, eq=False)
class ReferenceElement:
    """Scalar or vector Lagrange element with its basis tabulated on a quadrature rule."""
    family: str
    dim: int
    rank: str
    values: np.ndarray
    gradients: np.ndarray

    @property
    def num_nodes(self) -> int:
        return self.values.shape[1]

    @property
    def value_size(self) -> int:
        return self.dim if self.rank == 'vector' else 1

    @property
    def space_dimension(self) -> int:
        return self.num_nodes * self.value_size


def reference_element(family: str, dim: int, rule: QuadratureRule, rank: str = 'scalar') -> ReferenceElement:
    if rank not in ('scalar', 'vector'):
        raise SolverError(f"Unknown element rank {rank}")
    if rule.dim != dim:
        raise SolverError(f"Quadrature rule is {rule.dim}D but the element is {dim}D")
    values, gradients = tabulate(family, dim, rule.points)
    return ReferenceElement(family=family, dim=dim, rank=rank, values=values, gradients=gradients)
