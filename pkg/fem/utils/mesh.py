import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from fem.exceptions import MeshError

logger = logging.getLogger(__name__)

# Tag priority order; a facet lying on several planes keeps the first match
TAGS = ('XMIN', 'XMAX', 'YMIN', 'YMAX', 'ZMIN', 'ZMAX')

# Local edges, ordered so that edge i of a triangle is opposite vertex i
TRIANGLE_EDGES = ((1, 2), (0, 2), (0, 1))
TETRAHEDRON_EDGES = ((2, 3), (1, 3), (1, 2), (0, 3), (0, 2), (0, 1))


def local_edges(dim: int) -> Tuple[Tuple[int, int], ...]:
    return TRIANGLE_EDGES if dim == 2 else TETRAHEDRON_EDGES


def local_facets(dim: int) -> Tuple[Tuple[int, ...], ...]:
    """Local facets, facet i being the one opposite vertex i."""
    n = dim + 1
    return tuple(tuple(v for v in range(n) if v != i) for i in range(n))


def signed_volumes(points: np.ndarray, cells: np.ndarray) -> np.ndarray:
    """Signed measure of every simplex (positive for the orientation used here)."""
    dim = points.shape[1]
    base = points[cells[:, 0]]
    edges = np.stack([points[cells[:, i]] - base for i in range(1, dim + 1)], axis=-1)
    factorial = 2.0 if dim == 2 else 6.0
    return np.linalg.det(edges) / factorial


@dataclass(frozen=True, eq=False)
class Mesh:
    """
    Straight-sided simplicial mesh (triangles in 2D, tetrahedra in 3D).

    Topology arrays are computed once at construction time and the instance is
    treated as immutable afterwards; warping returns a new mesh with the same
    topology.
    """
    points: np.ndarray
    cells: np.ndarray
    facets: np.ndarray = field(repr=False)
    facet_cells: np.ndarray = field(repr=False)
    boundary_facets: np.ndarray = field(repr=False)
    facet_tags: Dict[str, np.ndarray] = field(repr=False)
    edges: np.ndarray = field(repr=False)
    cell_edges: np.ndarray = field(repr=False)
    facet_edges: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def num_vertices(self) -> int:
        return self.points.shape[0]

    @property
    def num_cells(self) -> int:
        return self.cells.shape[0]

    @property
    def num_edges(self) -> int:
        return self.edges.shape[0]

    @property
    def vertex_coords(self) -> np.ndarray:
        return self.points

    def cell_volumes(self) -> np.ndarray:
        return signed_volumes(self.points, self.cells)

    def volume(self) -> float:
        return float(self.cell_volumes().sum())

    def edge_midpoints(self) -> np.ndarray:
        return 0.5 * (self.points[self.edges[:, 0]] + self.points[self.edges[:, 1]])

    def facet_tag(self, facet: int) -> Optional[str]:
        for tag in TAGS:
            if facet in self.facet_tags.get(tag, ()):
                return tag
        return None

    def tagged_vertices(self, tag: str) -> np.ndarray:
        """Vertex indices touched by the facets carrying ``tag``."""
        facets = self.facet_tags.get(tag)
        if facets is None:
            raise MeshError(f"Unknown boundary tag {tag}")
        return np.unique(self.facets[facets])

    def tagged_edges(self, tag: str) -> np.ndarray:
        """Edge indices lying on the facets carrying ``tag``."""
        facets = self.facet_tags.get(tag)
        if facets is None:
            raise MeshError(f"Unknown boundary tag {tag}")
        positions = np.searchsorted(self.boundary_facets, facets)
        return np.unique(self.facet_edges[positions])

    def warped(self, displacement: np.ndarray) -> 'Mesh':
        """Return a copy whose vertices are moved by ``displacement`` (one row per vertex)."""
        displacement = np.asarray(displacement, dtype=float)
        if displacement.shape != self.points.shape:
            raise MeshError(
                f"Vertex displacement has shape {displacement.shape}, expected {self.points.shape}"
            )
        points = self.points + displacement
        volumes = signed_volumes(points, self.cells)
        if np.any(volumes <= 0.0):
            raise MeshError(f"Warping inverts {int(np.sum(volumes <= 0.0))} cells")
        return Mesh(
            points=_frozen(points),
            cells=self.cells,
            facets=self.facets,
            facet_cells=self.facet_cells,
            boundary_facets=self.boundary_facets,
            facet_tags=self.facet_tags,
            edges=self.edges,
            cell_edges=self.cell_edges,
            facet_edges=self.facet_edges,
        )


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.ascontiguousarray(array)
    array.setflags(write=False)
    return array


def _orient(points: np.ndarray, cells: np.ndarray) -> np.ndarray:
    # Swap the last two vertices of negatively oriented cells
    volumes = signed_volumes(points, cells)
    cells = cells.copy()
    flip = volumes < 0.0
    cells[flip, -2], cells[flip, -1] = cells[flip, -1], cells[flip, -2].copy()
    return cells


def from_arrays(points: np.ndarray, cells: np.ndarray) -> Mesh:
    """
    Build the full topology (facets, edges, boundary tags) from raw arrays.

    Args:
        points: vertex coordinates, shape (nv, dim)
        cells: vertex indices per cell, shape (nc, dim + 1)

    Returns:
        Mesh with positively oriented cells and tagged boundary facets
    """
    points = np.asarray(points, dtype=float)
    cells = _orient(points, np.asarray(cells, dtype=np.int64))
    dim = points.shape[1]
    if dim not in (2, 3) or cells.shape[1] != dim + 1:
        raise MeshError(f"Unsupported cell shape {cells.shape} for dimension {dim}")

    # Facets: sorted vertex tuples shared by at most two cells
    n_local = dim + 1
    local = np.array(local_facets(dim))
    all_facets = np.sort(cells[:, local].reshape(-1, dim), axis=1)
    facets, inverse, counts = np.unique(all_facets, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.reshape(-1)
    if np.any(counts > 2):
        raise MeshError("Non-manifold mesh: a facet is shared by more than two cells")
    owner = np.repeat(np.arange(cells.shape[0]), n_local)
    facet_cells = -np.ones((facets.shape[0], 2), dtype=np.int64)
    for position, facet in enumerate(inverse):
        slot = 0 if facet_cells[facet, 0] < 0 else 1
        facet_cells[facet, slot] = owner[position]
    boundary_facets = np.flatnonzero(counts == 1)

    # Edges and their per-cell numbering
    edge_pairs = np.array(local_edges(dim))
    all_edges = np.sort(cells[:, edge_pairs].reshape(-1, 2), axis=1)
    edges, edge_inverse = np.unique(all_edges, axis=0, return_inverse=True)
    cell_edges = edge_inverse.reshape(cells.shape[0], len(edge_pairs))

    # Edges of each boundary facet (one in 2D, three in 3D)
    edge_lookup = {tuple(e): i for i, e in enumerate(edges)}
    facet_edges = np.array([
        [edge_lookup[tuple(sorted((facet[a], facet[b])))] for a, b in itertools.combinations(range(dim), 2)]
        for facet in facets[boundary_facets]
    ], dtype=np.int64).reshape(len(boundary_facets), -1)

    facet_tags = _tag_facets(points, facets, boundary_facets)

    return Mesh(
        points=_frozen(points),
        cells=_frozen(cells),
        facets=_frozen(facets),
        facet_cells=_frozen(facet_cells),
        boundary_facets=_frozen(boundary_facets),
        facet_tags={tag: _frozen(ids) for tag, ids in facet_tags.items()},
        edges=_frozen(edges),
        cell_edges=_frozen(cell_edges),
        facet_edges=_frozen(facet_edges),
    )


def _tag_facets(points: np.ndarray, facets: np.ndarray, boundary_facets: np.ndarray) -> Dict[str, np.ndarray]:
    dim = points.shape[1]
    lower = points.min(axis=0)
    upper = points.max(axis=0)
    scale = float(np.max(upper - lower))
    atol = 1e-12 * scale

    tags = {tag: [] for tag in TAGS[: 2 * dim]}
    for facet in boundary_facets:
        coords = points[facets[facet]]
        for tag in TAGS[: 2 * dim]:
            axis = TAGS.index(tag) // 2
            bound = lower[axis] if tag.endswith('MIN') else upper[axis]
            if np.all(np.abs(coords[:, axis] - bound) <= atol):
                tags[tag].append(facet)
                break
    return {tag: np.array(ids, dtype=np.int64) for tag, ids in tags.items()}


def build_unit_square(nx: int, ny: int, side: float = 1.0) -> Mesh:
    """
    Triangulate the square (0, side)^2 with nx by ny quads, each split along
    its lower-left to upper-right diagonal.
    """
    if int(nx) < 1 or int(ny) < 1:
        raise MeshError(f"Cell counts must be positive, got nx={nx}, ny={ny}")
    if not side > 0:
        raise MeshError(f"Side length must be positive, got {side}")
    nx, ny = int(nx), int(ny)

    xs = np.linspace(0.0, side, nx + 1)
    ys = np.linspace(0.0, side, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    points = np.column_stack([X.ravel(), Y.ravel()])

    index = np.arange((nx + 1) * (ny + 1)).reshape(ny + 1, nx + 1)
    v00 = index[:-1, :-1].ravel()
    v10 = index[:-1, 1:].ravel()
    v01 = index[1:, :-1].ravel()
    v11 = index[1:, 1:].ravel()
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    cells = np.empty((2 * nx * ny, 3), dtype=np.int64)
    cells[0::2] = lower
    cells[1::2] = upper

    mesh = from_arrays(points, cells)
    logger.debug(f"Built square mesh {nx}x{ny}, side {side}: {mesh.num_cells} triangles")
    return mesh


def build_slab(nx: int, ny: int, nz: int, lengths: Sequence[float]) -> Mesh:
    """
    Tetrahedralize the box (0, Lx) x (0, Ly) x (0, Lz). Every hexahedron is
    split into six tetrahedra sharing its main diagonal, which keeps the
    triangulation conforming across neighbouring hexahedra.
    """
    counts = [int(nx), int(ny), int(nz)]
    if any(c < 1 for c in counts):
        raise MeshError(f"Cell counts must be positive, got {counts}")
    if len(lengths) != 3 or any(not length > 0 for length in lengths):
        raise MeshError(f"Slab lengths must be three positive values, got {list(lengths)}")
    nx, ny, nz = counts

    axes = [np.linspace(0.0, float(length), n + 1) for length, n in zip(lengths, counts)]
    Z, Y, X = np.meshgrid(axes[2], axes[1], axes[0], indexing='ij')
    points = np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])
    index = np.arange(points.shape[0]).reshape(nz + 1, ny + 1, nx + 1)

    def corner(offset):
        a, b, c = offset
        return index[c:c + nz, b:b + ny, a:a + nx].ravel()

    cells = []
    for perm in itertools.permutations(range(3)):
        path = [np.zeros(3, dtype=int)]
        for axis in perm:
            step = path[-1].copy()
            step[axis] = 1
            path.append(step)
        cells.append(np.column_stack([corner(p) for p in path]))
    cells = np.stack(cells, axis=1).reshape(-1, 4)

    mesh = from_arrays(points, cells)
    logger.debug(f"Built slab mesh {nx}x{ny}x{nz}, lengths {list(lengths)}: {mesh.num_cells} tetrahedra")
    return mesh


def facet_normal(mesh: Mesh, facet: int) -> np.ndarray:
    """
    Outward unit normal of a boundary facet.

    Raises:
        MeshError: if the index is out of range or names an interior facet
    """
    if facet < 0 or facet >= mesh.facets.shape[0]:
        raise MeshError(f"Facet index {facet} out of range")
    owners = mesh.facet_cells[facet]
    if owners[1] >= 0:
        raise MeshError(f"Facet {facet} is an interior facet")

    coords = mesh.points[mesh.facets[facet]]
    if mesh.dim == 2:
        tangent = coords[1] - coords[0]
        normal = np.array([tangent[1], -tangent[0]])
    else:
        normal = np.cross(coords[1] - coords[0], coords[2] - coords[0])
    normal = normal / np.linalg.norm(normal)

    cell_centroid = mesh.points[mesh.cells[owners[0]]].mean(axis=0)
    if np.dot(normal, coords.mean(axis=0) - cell_centroid) < 0.0:
        normal = -normal
    return normal
