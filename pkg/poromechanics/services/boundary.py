import logging
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from fem.services.dofmap import DofMap
from fem.utils.mesh import TAGS, Mesh, facet_normal
from poromechanics.exceptions import BoundaryConditionError
from poromechanics.services.weak_forms import DISPLACEMENT, MU, POROSITY, VELOCITY

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DirichletCondition:
    """Essential value of one field component on the facets of ``tag``."""
    tag: str
    field: str
    value: float = 0.0
    component: Optional[int] = None


@dataclass(frozen=True)
class NormalFluxCondition:
    """Essential normal velocity u.n = value on an axis-aligned boundary (mixed velocity)."""
    tag: str
    value: float = 0.0
    field: str = VELOCITY


@dataclass(frozen=True)
class NeumannCondition:
    """
    Natural boundary datum, constant over the facets of ``tag``.

    For the porosity or mixed-pressure rows it is the outward fluid flux,
    for the velocity rows it is the prescribed pressure.
    """
    tag: str
    field: str
    value: float


@dataclass(frozen=True)
class BoundarySpec:
    dirichlet: Tuple[DirichletCondition, ...] = ()
    normal_flux: Tuple[NormalFluxCondition, ...] = ()
    neumann: Tuple[NeumannCondition, ...] = ()

    def __post_init__(self):
        keys = [(c.tag, c.field, c.component) for c in self.dirichlet]
        keys += [(c.tag, c.field, 'normal') for c in self.normal_flux]
        duplicates = {key for key in keys if keys.count(key) > 1}
        if duplicates:
            raise BoundaryConditionError(f"Conditions specified more than once: {sorted(map(str, duplicates))}")
        natural = [(c.tag, c.field) for c in self.neumann]
        if len(set(natural)) != len(natural):
            raise BoundaryConditionError("Natural condition specified more than once for a tag and field")

    @classmethod
    def sliding(cls, dim: int) -> 'BoundarySpec':
        """Each displacement component fixed on its lower boundary; everything else free."""
        lower = ('XMIN', 'YMIN', 'ZMIN')[:dim]
        return cls(dirichlet=tuple(
            DirichletCondition(tag, DISPLACEMENT, 0.0, component) for component, tag in enumerate(lower)
        ))

    @classmethod
    def isolated(cls, dim: int, formulation: str) -> 'BoundarySpec':
        """
        Sliding solid with a fluid-tight boundary.

        Zero flux is natural for the primal and mixed-pressure forms and
        essential (u.n = 0 on every tag) for the mixed-velocity form.
        """
        spec = cls.sliding(dim)
        if formulation != 'mixed_u':
            return spec
        tags = TAGS[:2 * dim]
        return cls(dirichlet=spec.dirichlet, normal_flux=tuple(NormalFluxCondition(tag) for tag in tags))


def normal_axis(mesh: Mesh, tag: str) -> Tuple[int, float]:
    """
    Axis and sign of the outward normal shared by every facet of ``tag``.

    Raises:
        BoundaryConditionError: if the facets are not aligned with one coordinate axis
    """
    facets = mesh.facet_tags.get(tag)
    if facets is None or len(facets) == 0:
        raise BoundaryConditionError(f"Boundary tag {tag} has no facets")
    normals = np.array([facet_normal(mesh, int(f)) for f in facets])
    axis = int(np.argmax(np.abs(normals[0])))
    sign = float(np.sign(normals[0, axis]))
    expected = np.zeros(mesh.dim)
    expected[axis] = sign
    if not np.allclose(normals, expected, atol=1e-12):
        raise BoundaryConditionError(
            f"Normal-velocity conditions need an axis-aligned boundary; {tag} is not"
        )
    return axis, sign


def _check(spec_tag: str, field: str, dofmap: DofMap):
    if spec_tag not in dofmap.mesh.facet_tags:
        raise BoundaryConditionError(f"Unknown boundary tag {spec_tag}")
    if field not in dofmap.fields:
        raise BoundaryConditionError(f"Field {field} is not part of this formulation")


def apply_bcs(spec: BoundarySpec, formulation: str, dofmap: DofMap) -> Tuple[np.ndarray, np.ndarray]:
    """
    Translate a boundary specification into constrained DoFs and lift values.

    Args:
        spec: boundary conditions
        formulation: 'primal', 'mixed_p' or 'mixed_u'
        dofmap: numbering of the formulation's fields

    Returns:
        (sorted constrained DoF indices, values at those DoFs)

    Raises:
        BoundaryConditionError: unknown tag or field, normal velocity on a
            non-velocity formulation, or two different values on one DoF
    """
    values: Dict[int, float] = {}

    def constrain(dofs, value, source):
        for dof in np.asarray(dofs, dtype=int):
            dof = int(dof)
            if dof in values and not np.isclose(values[dof], value, rtol=0.0, atol=1e-14):
                raise BoundaryConditionError(
                    f"DoF {dof} constrained to {values[dof]} and {value} ({source})"
                )
            values[dof] = value

    for condition in spec.dirichlet:
        _check(condition.tag, condition.field, dofmap)
        dofs = dofmap.boundary_dofs(condition.field, condition.tag, condition.component)
        constrain(dofs, condition.value, f"{condition.field} on {condition.tag}")

    for condition in spec.normal_flux:
        if formulation != 'mixed_u':
            raise BoundaryConditionError(f"Normal velocity conditions need the mixed_u formulation, not {formulation}")
        _check(condition.tag, condition.field, dofmap)
        axis, sign = normal_axis(dofmap.mesh, condition.tag)
        dofs = dofmap.boundary_dofs(condition.field, condition.tag, axis)
        constrain(dofs, sign * condition.value, f"u.n on {condition.tag}")

    constrained = np.array(sorted(values), dtype=int)
    lift = np.array([values[dof] for dof in constrained], dtype=float)
    logger.debug(f"{formulation}: {constrained.size} constrained dofs from {len(spec.dirichlet)} "
                 f"Dirichlet and {len(spec.normal_flux)} normal-velocity conditions")
    return constrained, lift


def _facet_measures(mesh: Mesh, facets: np.ndarray) -> np.ndarray:
    coords = mesh.points[mesh.facets[facets]]
    if mesh.dim == 2:
        return np.linalg.norm(coords[:, 1] - coords[:, 0], axis=1)
    return 0.5 * np.linalg.norm(np.cross(coords[:, 1] - coords[:, 0], coords[:, 2] - coords[:, 0]), axis=1)


def neumann_load(spec: BoundarySpec, formulation: str, dofmap: DofMap) -> np.ndarray:
    """
    Residual contribution of the natural boundary data.

    Porosity / mixed-pressure rows receive int_Gamma q phi* ds (outward flux q);
    velocity rows receive -int_Gamma p u*.n ds. Facet integrals of the Lagrange
    basis are exact: P1 vertices |F|/dim; P2 on segments |F|/6 at vertices and
    2|F|/3 at the midpoint, on triangles 0 at vertices and |F|/3 at edges.
    """
    mesh = dofmap.mesh
    load = np.zeros(dofmap.num_dofs)
    for condition in spec.neumann:
        _check(condition.tag, condition.field, dofmap)
        facets = mesh.facet_tags[condition.tag]
        measures = _facet_measures(mesh, facets)
        if condition.field in (POROSITY, MU):
            if condition.field == POROSITY and formulation == 'mixed_u':
                raise BoundaryConditionError("Fluid flux is essential in the mixed_u formulation")
            if condition.field == MU and formulation != 'mixed_p':
                raise BoundaryConditionError("Pressure rows exist only in the mixed_p formulation")
            offset = dofmap.offsets[condition.field]
            for vertex_index in range(mesh.dim):
                np.add.at(
                    load, offset + mesh.facets[facets, vertex_index],
                    condition.value * measures / mesh.dim,
                )
        elif condition.field == VELOCITY:
            axis, sign = normal_axis(mesh, condition.tag)
            positions = np.searchsorted(mesh.boundary_facets, facets)
            offset = dofmap.offsets[VELOCITY]
            dim = mesh.dim
            weight = -condition.value * sign
            if dim == 2:
                for vertex_index in range(2):
                    np.add.at(load, offset + mesh.facets[facets, vertex_index] * dim + axis,
                              weight * measures / 6.0)
                edges = mesh.facet_edges[positions].reshape(-1)
                np.add.at(load, offset + (mesh.num_vertices + edges) * dim + axis,
                          weight * 2.0 * measures / 3.0)
            else:
                edges = mesh.facet_edges[positions]
                for edge_index in range(edges.shape[1]):
                    np.add.at(load, offset + (mesh.num_vertices + edges[:, edge_index]) * dim + axis,
                              weight * measures / 3.0)
        else:
            raise BoundaryConditionError(f"No natural condition defined for field {condition.field}")
    return load
