from dataclasses import dataclass

import numpy as np

from fem.utils.elements import ReferenceElement
from fem.utils.mesh import Mesh
from fem.utils.quadrature import QuadratureRule


@dataclass(frozen=True, eq=False)
class CellGeometry:
    """Affine maps of every cell evaluated on a quadrature rule."""
    jacobians: np.ndarray
    determinants: np.ndarray
    inverse_jacobians: np.ndarray
    dx: np.ndarray
    points: np.ndarray

    @classmethod
    def build(cls, mesh: Mesh, rule: QuadratureRule) -> 'CellGeometry':
        coords = mesh.points[mesh.cells]
        jacobians = np.stack([coords[:, k + 1] - coords[:, 0] for k in range(mesh.dim)], axis=-1)
        determinants = np.linalg.det(jacobians)
        inverse_jacobians = np.linalg.inv(jacobians)
        dx = determinants[:, None] * rule.weights[None, :]
        points = coords[:, 0][:, None, :] + np.einsum('cik,qk->cqi', jacobians, rule.points)
        return cls(
            jacobians=jacobians,
            determinants=determinants,
            inverse_jacobians=inverse_jacobians,
            dx=dx,
            points=points,
        )

    def gradients(self, element: ReferenceElement) -> np.ndarray:
        """Physical basis gradients, shape (ncells, nq, nnodes, dim)."""
        return np.einsum('qnk,ckj->cqnj', element.gradients, self.inverse_jacobians)
