import logging
from dataclasses import dataclass
from typing import Dict, Optional, Sequence

import numpy as np

from fem.exceptions import DimensionMismatchError, SolverError
from fem.utils.elements import num_nodes
from fem.utils.mesh import Mesh

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FieldSpec:
    name: str
    family: str
    components: int = 1


class DofMap:
    """
    Global numbering of a list of Lagrange fields.

    Each field occupies one contiguous block in the order given. Inside a
    block, nodes are numbered vertices first and then edge midpoints (P2),
    and vector components are interleaved node by node. The local layout of
    a cell follows the same field order.
    """

    def __init__(self, mesh: Mesh, fields: Sequence[FieldSpec]):
        names = [field.name for field in fields]
        if len(set(names)) != len(names):
            raise SolverError(f"Duplicate field names in {names}")
        self.mesh = mesh
        self.fields = {field.name: field for field in fields}
        self.offsets: Dict[str, int] = {}
        self.sizes: Dict[str, int] = {}
        self.local_slices: Dict[str, slice] = {}

        offset = 0
        local_offset = 0
        blocks = []
        for field in fields:
            nodes = self.cell_nodes(field.family)
            size = self.num_field_nodes(field.family) * field.components
            local = (
                offset
                + nodes[:, :, None] * field.components
                + np.arange(field.components)[None, None, :]
            ).reshape(mesh.num_cells, -1)
            self.offsets[field.name] = offset
            self.sizes[field.name] = size
            self.local_slices[field.name] = slice(local_offset, local_offset + local.shape[1])
            blocks.append(local)
            offset += size
            local_offset += local.shape[1]

        self.num_dofs = offset
        self.cell_dofs = np.hstack(blocks)
        logger.debug(f"DofMap {names}: {self.num_dofs} dofs, {self.cell_dofs.shape[1]} per cell")

    @property
    def field_names(self):
        return list(self.fields)

    def num_field_nodes(self, family: str) -> int:
        if family == 'P1':
            return self.mesh.num_vertices
        return self.mesh.num_vertices + self.mesh.num_edges

    def cell_nodes(self, family: str) -> np.ndarray:
        if family == 'P1':
            return self.mesh.cells
        if family == 'P2':
            return np.hstack([self.mesh.cells, self.mesh.num_vertices + self.mesh.cell_edges])
        raise SolverError(f"Unknown element family {family}")

    def nodes_per_cell(self, name: str) -> int:
        return num_nodes(self.fields[name].family, self.mesh.dim)

    def field_dofs(self, name: str) -> np.ndarray:
        return np.arange(self.offsets[name], self.offsets[name] + self.sizes[name])

    def field_values(self, x: np.ndarray, name: str) -> np.ndarray:
        """View of one field: shape (nnodes,) for scalars, (nnodes, ncomp) for vectors."""
        self.check_length(x)
        field = self.fields[name]
        block = x[self.offsets[name]:self.offsets[name] + self.sizes[name]]
        return block if field.components == 1 else block.reshape(-1, field.components)

    def vertex_values(self, x: np.ndarray, name: str) -> np.ndarray:
        return self.field_values(x, name)[: self.mesh.num_vertices]

    def node_coordinates(self, name: str) -> np.ndarray:
        if self.fields[name].family == 'P1':
            return self.mesh.points
        return np.vstack([self.mesh.points, self.mesh.edge_midpoints()])

    def boundary_nodes(self, name: str, tag: str) -> np.ndarray:
        vertices = self.mesh.tagged_vertices(tag)
        if self.fields[name].family == 'P1':
            return vertices
        return np.concatenate([vertices, self.mesh.num_vertices + self.mesh.tagged_edges(tag)])

    def boundary_dofs(self, name: str, tag: str, component: Optional[int] = None) -> np.ndarray:
        """
        Global DoFs of a field on the facets carrying ``tag``.

        Args:
            name: field name
            tag: boundary tag (XMIN, ...)
            component: vector component, or None for every component

        Returns:
            Sorted array of global DoF indices
        """
        field = self.fields[name]
        nodes = self.boundary_nodes(name, tag)
        if component is None:
            components = np.arange(field.components)
        else:
            if component < 0 or component >= field.components:
                raise SolverError(f"Field {name} has no component {component}")
            components = np.array([component])
        dofs = self.offsets[name] + nodes[:, None] * field.components + components[None, :]
        return np.sort(dofs.ravel())

    def check_length(self, x: np.ndarray):
        if x.shape[-1] != self.num_dofs:
            raise DimensionMismatchError(
                f"State has {x.shape[-1]} entries, the DofMap numbers {self.num_dofs}"
            )

    def interpolate(self, name: str, func) -> np.ndarray:
        """Nodal interpolation of ``func(coords) -> values`` into the field block."""
        values = np.asarray(func(self.node_coordinates(name)), dtype=float)
        return values.reshape(-1)
