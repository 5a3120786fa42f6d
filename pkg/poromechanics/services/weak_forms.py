import logging
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np

from fem.services.dofmap import DofMap, FieldSpec
from fem.utils import tensors
from fem.utils.elements import reference_element
from fem.utils.geometry import CellGeometry
from fem.utils.mesh import Mesh
from fem.utils.quadrature import quadrature
from poromechanics.config import FORMULATIONS, MaterialParams
from poromechanics.utils.constitutive import (
    Kinematics,
    inverse_permeability_pullback,
    permeability_pullback,
    piola,
    pore_pressure,
    pore_pressure_dphi,
    solid_piola,
    source_theta,
)

logger = logging.getLogger(__name__)

DISPLACEMENT = 'displacement'
POROSITY = 'porosity'
LAMBDA = 'lambda'
MU = 'mu'
VELOCITY = 'velocity'

PROBLEM_KINDS = ('forward', 'refconf')


def field_specs(dim: int, formulation: str) -> List[FieldSpec]:
    """Taylor-Hood displacement with P1 porosity and multiplier, plus the mixed variable."""
    fields = [
        FieldSpec(DISPLACEMENT, 'P2', dim),
        FieldSpec(POROSITY, 'P1'),
        FieldSpec(LAMBDA, 'P1'),
    ]
    if formulation == 'mixed_p':
        fields.append(FieldSpec(MU, 'P1'))
    elif formulation == 'mixed_u':
        fields.append(FieldSpec(VELOCITY, 'P2', dim))
    return fields


@dataclass
class SystemState:
    """Coefficient vector of every field at time ``time``."""
    values: np.ndarray
    time: float = 0.0

    def copy(self) -> 'SystemState':
        return SystemState(values=self.values.copy(), time=self.time)


class PoroelasticForm:
    """
    Element residual of the coupled momentum / mass / incompressibility system.

    ``problem`` selects the Lagrangian forward system on the reference
    domain or the Eulerian reference-configuration system on the loaded
    domain; ``formulation`` selects how the mass equation is written
    (primal, mixed pressure, mixed velocity). Instances are callables that
    follow the element kernel contract of ``fem.services.assembly``.

    Per-step data (previous porosity, time step, ramp level) is set through
    ``set_step``; ``steady=True`` drops the time derivative.
    """

    def __init__(self, mesh: Mesh, params: MaterialParams, problem: str, formulation: str,
                 degree: int = 6, phi_init: Optional[np.ndarray] = None):
        if problem not in PROBLEM_KINDS:
            raise ValueError(f"Unknown problem kind {problem}")
        if formulation not in FORMULATIONS:
            raise ValueError(f"Unknown formulation {formulation}")
        self.mesh = mesh
        self.params = params
        self.problem = problem
        self.formulation = formulation
        self.dim = mesh.dim
        self.sign = 1.0 if problem == 'forward' else -1.0
        self.dofmap = DofMap(mesh, field_specs(self.dim, formulation))
        self.mass_field = MU if formulation == 'mixed_p' else POROSITY

        rule = quadrature(self.dim, degree)
        geometry = CellGeometry.build(mesh, rule)
        p1 = reference_element('P1', self.dim, rule)
        p2 = reference_element('P2', self.dim, rule, rank='vector')
        self.N1 = p1.values
        self.N2 = p2.values
        self.G1 = geometry.gradients(p1)
        self.G2 = geometry.gradients(p2)
        self.dx = geometry.dx
        self.wN1 = self.dx[:, :, None] * self.N1[None, :, :]
        self.wN2 = self.dx[:, :, None] * self.N2[None, :, :]
        self.wG1 = self.dx[:, :, None, None] * self.G1
        self.wG2 = self.dx[:, :, None, None] * self.G2

        if phi_init is None:
            phi_init = np.full(mesh.num_vertices, params.phi_bar)
        self.phi_init = np.asarray(phi_init, dtype=float)
        if self.phi_init.shape != (mesh.num_vertices,):
            raise ValueError(f"Initial porosity needs {mesh.num_vertices} vertex values")
        self.phi_init_q = self._interpolate_p1(self.phi_init)
        self.grad_phi_init_q = np.einsum('cn,cqnj->cqj', self.phi_init[mesh.cells], self.G1)
        self.dpsi_init_q = pore_pressure_dphi(self.phi_init_q, params)

        g = np.zeros(self.dim)
        g[:] = np.asarray(params.body_force, dtype=float)[:self.dim]
        self.body_rows = -np.einsum('i,cqn->cni', g, self.wN2).reshape(mesh.num_cells, -1)

        self.dt = 1.0
        self.ramp = 0.0
        self.steady = False
        self.prev_q = self.phi_init_q.copy()

    def _interpolate_p1(self, nodal: np.ndarray) -> np.ndarray:
        return nodal[self.mesh.cells] @ self.N1.T

    def set_step(self, phi_prev: np.ndarray, dt: float, ramp: float):
        """Store the previous porosity (P1 vertex values), the time step and the ramp level."""
        if dt <= 0:
            raise ValueError(f"Time step must be positive, got {dt}")
        self.prev_q = self._interpolate_p1(np.asarray(phi_prev, dtype=float))
        self.dt = dt
        self.ramp = ramp

    # Field interpolation

    def _scalar(self, local: np.ndarray, name: str):
        values = local[..., self.dofmap.local_slices[name]]
        at_q = np.einsum('...cn,qn->...cq', values, self.N1)
        grad = np.einsum('...cn,cqnj->...cqj', values, self.G1)
        return at_q, grad

    def _vector(self, local: np.ndarray, name: str):
        values = local[..., self.dofmap.local_slices[name]]
        values = values.reshape(values.shape[:-1] + (-1, self.dim))
        at_q = np.einsum('...cni,qn->...cqi', values, self.N2)
        grad = np.einsum('...cni,cqnj->...cqij', values, self.G2)
        return at_q, grad

    def _deformation(self, grad_d: np.ndarray) -> Kinematics:
        """Kinematics of F; in the reference-configuration problem F = (I + grad d_hat)^-1."""
        gradient = np.eye(self.dim) + grad_d
        if self.problem == 'refconf':
            gradient = tensors.inv(gradient)
        return Kinematics.from_gradient(gradient, self.params)

    # Integrands

    def _pressure(self, kin: Kinematics, phi, grad_phi, lam, grad_lam):
        """Normalized pore pressure and its gradient without the deformation-gradient terms."""
        params = self.params
        if self.problem == 'forward':
            p = pore_pressure(phi, self.phi_init_q, lam, params, check=False)
            grad_p = (
                pore_pressure_dphi(phi, params, check=False)[..., None] * grad_phi
                - self.dpsi_init_q[..., None] * self.grad_phi_init_q
                - grad_lam
            )
        else:
            phi_lagrangian = params.phi_bar * kin.J
            p = pore_pressure(phi_lagrangian, phi, lam, params, check=False)
            grad_p = -pore_pressure_dphi(phi, params, check=False)[..., None] * grad_phi - grad_lam
        return p, grad_p

    def _permeability(self, kin: Kinematics):
        if self.problem == 'forward':
            return permeability_pullback(kin, self.params, check=False)
        return self.params.k * np.eye(self.dim)

    def _inverse_permeability(self, kin: Kinematics):
        if self.problem == 'forward':
            return inverse_permeability_pullback(kin, self.params, check=False)
        return np.eye(self.dim) / self.params.k

    def _momentum_rows(self, kin: Kinematics, lam):
        if self.problem == 'forward':
            stress = piola(kin, lam, self.params, check=False)
        else:
            # sigma = j P_M(F) F^T + lambda I with j = 1/J
            stress = tensors.matmul(solid_piola(kin, self.params, check=False), tensors.transpose(kin.F))
            stress = stress / kin.J[..., None, None] + lam[..., None, None] * np.eye(self.dim)
        rows = np.einsum('...cqij,cqnj->...cni', stress, self.wG2)
        return rows.reshape(rows.shape[:-2] + (-1,)) + self.body_rows

    def _incompressibility_rows(self, kin: Kinematics, phi):
        if self.problem == 'forward':
            constraint = kin.J - phi - (1.0 - self.phi_init_q)
        else:
            constraint = (1.0 - phi) / kin.J - (1.0 - self.params.phi_bar)
        return np.einsum('...cq,cqn->...cn', constraint, self.wN1)

    def _rate(self, phi):
        if self.steady:
            return 0.0
        return self.sign * (phi - self.prev_q) / self.dt

    def evaluate(self, local: np.ndarray, steady: Optional[bool] = None) -> Dict[str, np.ndarray]:
        """Element rows per field for local coefficients of shape (..., ncells, nloc)."""
        steady_before = self.steady
        if steady is not None:
            self.steady = steady
        try:
            with np.errstate(invalid='ignore', divide='ignore', over='ignore'):
                return self._evaluate(local)
        finally:
            self.steady = steady_before

    def _evaluate(self, local: np.ndarray) -> Dict[str, np.ndarray]:
        params = self.params
        _, grad_d = self._vector(local, DISPLACEMENT)
        phi, grad_phi = self._scalar(local, POROSITY)
        lam, grad_lam = self._scalar(local, LAMBDA)
        kin = self._deformation(grad_d)
        p, grad_p = self._pressure(kin, phi, grad_phi, lam, grad_lam)
        theta = source_theta(p, self.ramp, params)
        supply = self._rate(phi) - theta / params.rho_f

        rows = {
            DISPLACEMENT: self._momentum_rows(kin, lam),
            LAMBDA: self._incompressibility_rows(kin, phi),
        }
        if self.formulation == 'primal':
            flux = tensors.matvec(self._permeability(kin), grad_p)
            rows[POROSITY] = (
                np.einsum('...cq,cqn->...cn', supply, self.wN1)
                + np.einsum('...cqi,cqni->...cn', flux, self.wG1)
            )
        elif self.formulation == 'mixed_p':
            mu, grad_mu = self._scalar(local, MU)
            flux = tensors.matvec(self._permeability(kin), grad_mu)
            rows[MU] = (
                np.einsum('...cq,cqn->...cn', supply, self.wN1)
                + np.einsum('...cqi,cqni->...cn', flux, self.wG1)
            )
            rows[POROSITY] = np.einsum('...cq,cqn->...cn', mu - p, self.wN1)
        else:
            u, grad_u = self._vector(local, VELOCITY)
            div_u = tensors.trace(grad_u)
            rows[POROSITY] = np.einsum('...cq,cqn->...cn', supply + div_u, self.wN1)
            darcy = tensors.matvec(self._inverse_permeability(kin), u)
            velocity_rows = (
                np.einsum('...cqi,cqn->...cni', darcy, self.wN2)
                - np.einsum('...cq,cqni->...cni', p, self.wG2)
            )
            rows[VELOCITY] = velocity_rows.reshape(velocity_rows.shape[:-2] + (-1,))
        return rows

    def __call__(self, local: np.ndarray) -> np.ndarray:
        blocks = self.evaluate(local)
        out = np.zeros(local.shape, dtype=np.result_type(local.dtype, float))
        for name, block in blocks.items():
            out[..., self.dofmap.local_slices[name]] = block
        return out

    def steady_kernel(self, local: np.ndarray) -> np.ndarray:
        """Same rows with the time derivative omitted."""
        blocks = self.evaluate(local, steady=True)
        out = np.zeros(local.shape, dtype=np.result_type(local.dtype, float))
        for name, block in blocks.items():
            out[..., self.dofmap.local_slices[name]] = block
        return out

    # State helpers

    def field(self, state, name: str) -> np.ndarray:
        values = state.values if isinstance(state, SystemState) else state
        return self.dofmap.field_values(values, name)

    def porosity(self, state) -> np.ndarray:
        return self.field(state, POROSITY).copy()

    def with_porosity(self, state: SystemState, porosity: np.ndarray) -> SystemState:
        values = state.values.copy()
        values[self.dofmap.field_dofs(POROSITY)] = porosity
        return SystemState(values=values, time=state.time)

    def initial_state(self) -> SystemState:
        """
        Zero displacement and multiplier with the initial porosity.

        The normalized pressure vanishes up to p_ref in this state, so the
        mixed pressure starts at p_ref and the Darcy velocity at zero.
        """
        values = np.zeros(self.dofmap.num_dofs)
        if self.problem == 'forward':
            values[self.dofmap.field_dofs(POROSITY)] = self.phi_init
        else:
            values[self.dofmap.field_dofs(POROSITY)] = self.params.phi_bar
        if self.formulation == 'mixed_p':
            values[self.dofmap.field_dofs(MU)] = self.params.p_ref
        return SystemState(values=values, time=0.0)

    def row_scale(self) -> np.ndarray:
        """
        Per-row factors bringing every equation block to order one.

        Momentum rows scale with C L^(d-1), constraint rows with |Omega|,
        mass rows with |Omega| / dt, pressure-like rows with q2 |Omega|.
        """
        volume = self.mesh.volume()
        length = volume ** (1.0 / self.dim)
        params = self.params
        factors = {
            DISPLACEMENT: 1.0 / (params.C * length ** (self.dim - 1)),
            LAMBDA: 1.0 / volume,
            POROSITY: self.dt / volume,
            MU: self.dt / volume,
            VELOCITY: 1.0 / (params.q2 * length ** (self.dim - 1)),
        }
        if self.formulation == 'mixed_p':
            factors[POROSITY] = 1.0 / (params.q2 * volume)
        scale = np.empty(self.dofmap.num_dofs)
        for name in self.dofmap.field_names:
            scale[self.dofmap.field_dofs(name)] = factors[name]
        return scale

    def _quadrature_values(self, state):
        values = state.values if isinstance(state, SystemState) else np.asarray(state)
        local = values[self.dofmap.cell_dofs]
        _, grad_d = self._vector(local, DISPLACEMENT)
        phi, _ = self._scalar(local, POROSITY)
        kin = self._deformation(grad_d)
        return phi, kin

    def total_porosity(self, state) -> float:
        """Integral of the porosity field over the mesh domain."""
        phi, _ = self._quadrature_values(state)
        return float(np.sum(phi * self.dx))

    def average_porosity(self, state) -> float:
        """
        Average Eulerian porosity of the deformed body.

        Forward: int phi_L dX / int J dX over the reference domain.
        Reference configuration: int phi_0 dx / |Omega| over the loaded domain.
        """
        phi, kin = self._quadrature_values(state)
        if self.problem == 'forward':
            return float(np.sum(phi * self.dx) / np.sum(kin.J * self.dx))
        return float(np.sum(phi * self.dx) / np.sum(self.dx))
