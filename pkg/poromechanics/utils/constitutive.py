"""
Constitutive laws of the poroelastic mixture.

Helmholtz potential split Psi = Psi_M(F) + Psi_P(phi): a Usyk type solid
energy and a porous energy whose derivative is
q1 exp(q3 phi) + q2 log(q3 phi). Every function accepts arrays with leading
batch axes and stays complex-analytic, so the element kernels built on top
can be differentiated by complex step. Plane strain: 2x2 gradients are
embedded as diag(F, 1) before the isochoric split.
"""
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np

from fem.utils import tensors
from poromechanics.config import MaterialParams
from poromechanics.exceptions import ConstitutiveDomainError

logger = logging.getLogger(__name__)


def embed(F: np.ndarray) -> np.ndarray:
    """Plane-strain embedding of a 2x2 gradient into 3x3; 3x3 input is returned as is."""
    if F.shape[-1] == 3:
        return F
    F3 = np.zeros(F.shape[:-2] + (3, 3), dtype=F.dtype)
    F3[..., :2, :2] = F
    F3[..., 2, 2] = 1.0
    return F3


@dataclass(frozen=True, eq=False)
class Kinematics:
    """
    Deformation gradient and the strain measures derived from it.

    ``F`` keeps its native size (2x2 or 3x3); the isochoric quantities are
    always 3x3 through the plane-strain embedding.
    """
    F: np.ndarray
    basis: np.ndarray

    @classmethod
    def from_gradient(cls, F: np.ndarray, params: Optional[MaterialParams] = None) -> 'Kinematics':
        basis = np.eye(3) if params is None else params.fiber_basis()
        return cls(F=np.asarray(F), basis=basis)

    @classmethod
    def from_displacement_gradient(cls, grad_d: np.ndarray,
                                   params: Optional[MaterialParams] = None) -> 'Kinematics':
        grad_d = np.asarray(grad_d)
        return cls.from_gradient(grad_d + np.eye(grad_d.shape[-1]), params)

    @property
    def dim(self) -> int:
        return self.F.shape[-1]

    @cached_property
    def F3(self) -> np.ndarray:
        return embed(self.F)

    @cached_property
    def J(self) -> np.ndarray:
        return tensors.det(self.F)

    @cached_property
    def F_inv(self) -> np.ndarray:
        return tensors.inv(self.F)

    @property
    def F_inv_T(self) -> np.ndarray:
        return tensors.transpose(self.F_inv)

    @cached_property
    def C3(self) -> np.ndarray:
        return tensors.matmul(tensors.transpose(self.F3), self.F3)

    @cached_property
    def E_bar(self) -> np.ndarray:
        """Modified Green-Lagrange strain of F_bar = J^(-1/3) F (3x3)."""
        scale = self.J ** (-2.0 / 3.0)
        return 0.5 * (scale[..., None, None] * self.C3 - np.eye(3))

    @cached_property
    def E_fiber(self) -> np.ndarray:
        """E_bar expressed in the (f, s, n) frame."""
        return np.einsum('ai,...ab,bj->...ij', self.basis, self.E_bar, self.basis)

    def validate(self):
        """
        Raises:
            ConstitutiveDomainError: if J <= 0 somewhere or the fiber frame is not orthonormal
        """
        J = np.real(self.J)
        if np.any(~np.isfinite(J)) or np.any(J <= 0.0):
            raise ConstitutiveDomainError(f"Jacobian determinant must be positive, min J = {np.min(J):.6g}")
        if not np.allclose(self.basis.T @ self.basis, np.eye(3), atol=1e-12):
            raise ConstitutiveDomainError("Fiber frame is not orthonormal")


def _usyk_exponent(kin: Kinematics, params: MaterialParams) -> np.ndarray:
    return np.einsum('ij,...ij->...', params.b_matrix(), kin.E_fiber ** 2)


def psi_m(kin: Kinematics, params: MaterialParams, check: bool = True) -> np.ndarray:
    """
    Solid energy density C (exp(Q) - 1) + B/2 (J - 1) log J in Pa.

    Raises:
        ConstitutiveDomainError: J <= 0 (with ``check``; non-finite otherwise)
    """
    if check:
        kin.validate()
    Q = _usyk_exponent(kin, params)
    J = kin.J
    return params.C * (np.exp(Q) - 1.0) + 0.5 * params.B * (J - 1.0) * np.log(J)


def _piola_solid(kin: Kinematics, params: MaterialParams) -> np.ndarray:
    """dPsi_M/dF in native size."""
    J = kin.J
    Q = _usyk_exponent(kin, params)
    R = kin.basis
    # Fictitious stress 2 dPsi/dC_bar, rotated back from the fiber frame
    S_fib = 2.0 * params.C * np.exp(Q)[..., None, None] * (params.b_matrix() * kin.E_fiber)
    S_bar = np.einsum('ia,...ab,jb->...ij', R, S_fib, R)
    C_inv = tensors.inv(kin.C3)
    projection = tensors.ddot(S_bar, kin.C3) / 3.0
    S_iso = (J ** (-2.0 / 3.0))[..., None, None] * (S_bar - projection[..., None, None] * C_inv)
    P_iso = tensors.matmul(kin.F3, S_iso)[..., :kin.dim, :kin.dim]
    dpsi_vol = 0.5 * params.B * (np.log(J) + (J - 1.0) / J)
    P_vol = (dpsi_vol * J)[..., None, None] * kin.F_inv_T
    return P_iso + P_vol


def piola(kin: Kinematics, lam, params: MaterialParams, check: bool = True) -> np.ndarray:
    """First Piola-Kirchhoff stress dPsi_M/dF + lambda J F^-T (Pa)."""
    if check:
        kin.validate()
    lam = np.asarray(lam)
    return _piola_solid(kin, params) + (lam * kin.J)[..., None, None] * kin.F_inv_T


def solid_piola(kin: Kinematics, params: MaterialParams, check: bool = True) -> np.ndarray:
    if check:
        kin.validate()
    return _piola_solid(kin, params)


def cauchy(kin: Kinematics, lam, params: MaterialParams, check: bool = True) -> np.ndarray:
    """Cauchy stress J^-1 P F^T; the multiplier contributes lambda I."""
    P = piola(kin, lam, params, check=check)
    return tensors.matmul(P, tensors.transpose(kin.F)) / kin.J[..., None, None]


def _check_porosity(*values):
    for value in values:
        if np.any(np.real(np.asarray(value)) <= 0.0):
            raise ConstitutiveDomainError(
                f"Porosity must be positive, min value {np.min(np.real(value)):.6g}"
            )


def porous_pressure_raw(phi, params: MaterialParams):
    """dPsi_P/dphi = q1 exp(q3 phi) + q2 log(q3 phi)."""
    return params.q1 * np.exp(params.q3 * phi) + params.q2 * np.log(params.q3 * phi)


def pore_pressure(phi, phi0, lam, params: MaterialParams, check: bool = True):
    """
    Normalized pore pressure (Pa).

    Args:
        phi: Lagrangian porosity
        phi0: porosity at which the porous energy is normalized
        lam: incompressibility multiplier
        params: material constants
        check: raise on non-positive porosities instead of returning NaN

    Raises:
        ConstitutiveDomainError: phi <= 0 or phi0 <= 0 (with ``check``)
    """
    if check:
        _check_porosity(phi, phi0)
    return (
        params.q1 * (np.exp(params.q3 * phi) - np.exp(params.q3 * phi0))
        + params.q2 * (np.log(params.q3 * phi) - np.log(params.q3 * phi0))
        + params.p_ref - lam
    )


def pore_pressure_dphi(phi, params: MaterialParams, check: bool = True):
    """q1 q3 exp(q3 phi) + q2 / phi, strictly positive for phi > 0."""
    if check:
        _check_porosity(phi)
    return params.q1 * params.q3 * np.exp(params.q3 * phi) + params.q2 / phi


def permeability_pullback(kin: Kinematics, params: MaterialParams, check: bool = True) -> np.ndarray:
    """
    K = J F^-1 k F^-T for the isotropic permeability k.

    Raises:
        ConstitutiveDomainError: J <= 0 (with ``check``)
    """
    if check:
        kin.validate()
    return params.k * kin.J[..., None, None] * tensors.matmul(kin.F_inv, kin.F_inv_T)


def inverse_permeability_pullback(kin: Kinematics, params: MaterialParams, check: bool = True) -> np.ndarray:
    """K^-1 = J^-1 F^T F / k."""
    if check:
        kin.validate()
    return tensors.matmul(tensors.transpose(kin.F), kin.F) / (params.k * kin.J[..., None, None])


def source_theta(p, ramp: float, params: MaterialParams):
    """Ramped source ramp * sum_i -beta_i (p - p_i) in s^-1."""
    theta = np.zeros_like(p)
    for beta, p_i in params.sources:
        theta = theta - beta * (p - p_i)
    return ramp * theta


def source_equilibrium_pressure(params: MaterialParams) -> Optional[float]:
    """Pressure at which the total source vanishes, or None without sources."""
    total = sum(beta for beta, _ in params.sources)
    if total <= 0.0:
        return None
    return sum(beta * p_i for beta, p_i in params.sources) / total
