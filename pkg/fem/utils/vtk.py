import logging
from pathlib import Path
from typing import Dict, Union

import numpy as np

from fem.exceptions import MeshError
from fem.utils.mesh import Mesh

logger = logging.getLogger(__name__)

# Legacy VTK cell type ids
VTK_TRIANGLE = 5
VTK_TETRA = 10


def _fmt(value: float) -> str:
    return '%.17g' % value


def _pad3(values: np.ndarray) -> np.ndarray:
    values = np.atleast_2d(values)
    if values.shape[1] == 3:
        return values
    return np.hstack([values, np.zeros((values.shape[0], 3 - values.shape[1]))])


def write_vtk(path: Union[str, Path], mesh: Mesh, point_data: Dict[str, np.ndarray],
              title: str = 'poromechanics') -> Path:
    """
    Write a legacy ASCII VTK unstructured grid with point data.

    Scalars are arrays of length nv; vectors are arrays of shape (nv, dim),
    padded to three components. Values are written with 17 significant
    digits so a read-back reproduces them exactly.
    """
    path = Path(path)
    nv = mesh.num_vertices
    lines = [
        '# vtk DataFile Version 2.0',
        title,
        'ASCII',
        'DATASET UNSTRUCTURED_GRID',
        f'POINTS {nv} double',
    ]
    lines.extend(' '.join(_fmt(v) for v in row) for row in _pad3(mesh.points))

    k = mesh.cells.shape[1]
    lines.append(f'CELLS {mesh.num_cells} {mesh.num_cells * (k + 1)}')
    lines.extend(f'{k} ' + ' '.join(str(v) for v in cell) for cell in mesh.cells)
    cell_type = VTK_TRIANGLE if mesh.dim == 2 else VTK_TETRA
    lines.append(f'CELL_TYPES {mesh.num_cells}')
    lines.extend(str(cell_type) for _ in range(mesh.num_cells))

    if point_data:
        lines.append(f'POINT_DATA {nv}')
    for name, values in point_data.items():
        values = np.asarray(values, dtype=float)
        if values.shape[0] != nv:
            raise MeshError(f"Point field {name} has {values.shape[0]} entries for {nv} vertices")
        if values.ndim == 1:
            lines.append(f'SCALARS {name} double 1')
            lines.append('LOOKUP_TABLE default')
            lines.extend(_fmt(v) for v in values)
        else:
            lines.append(f'VECTORS {name} double')
            lines.extend(' '.join(_fmt(v) for v in row) for row in _pad3(values))

    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text('\n'.join(lines) + '\n')
    logger.info(f"Wrote {path} ({nv} points, {mesh.num_cells} cells, fields {list(point_data)})")
    return path


def read_vtk_points(path: Union[str, Path]) -> np.ndarray:
    """Read the POINTS block of a legacy ASCII VTK file, shape (npts, 3)."""
    tokens = Path(path).read_text().split('\n')
    for index, line in enumerate(tokens):
        if line.startswith('POINTS'):
            count = int(line.split()[1])
            rows = tokens[index + 1:index + 1 + count]
            return np.array([[float(v) for v in row.split()] for row in rows])
    raise MeshError(f"No POINTS block in {path}")
