"""
Homogeneous-deformation reference solutions.

With sliding supports on the lower faces, traction-free upper faces and a
spatially uniform source, the coupled system admits a spatially uniform
solution: a diagonal deformation gradient, uniform multiplier and porosity,
and no Darcy flux. The PDEs then reduce to a handful of algebraic and
ordinary differential equations, solved here by dense Newton with a
finite-difference Jacobian.
"""
import logging
from dataclasses import dataclass, replace
from typing import Callable, List, Optional, Tuple

import numpy as np

from fem.exceptions import DivergenceError
from poromechanics.config import MaterialParams
from poromechanics.services.time_stepper import ramp_factor
from poromechanics.utils.constitutive import (
    Kinematics,
    pore_pressure,
    solid_piola,
    source_equilibrium_pressure,
    source_theta,
)

logger = logging.getLogger(__name__)

FD_STEP = 1e-7
MAX_ITER = 50


@dataclass(frozen=True)
class HomogeneousState:
    """
    Uniform state of the body.

    ``stretches`` are the diagonal entries of F (forward) or of
    f = F^-1 (reference configuration); ``phi`` is the Lagrangian porosity
    (forward) or the reference porosity phi_0.
    """
    stretches: Tuple[float, ...]
    lam: float
    phi: float
    time: float = 0.0

    @property
    def jacobian(self) -> float:
        return float(np.prod(self.stretches))

    def avg_porosity(self, problem: str) -> float:
        if problem == 'forward':
            return self.phi / self.jacobian
        return self.phi

    def as_vector(self) -> np.ndarray:
        return np.array(list(self.stretches) + [self.lam, self.phi])

    @classmethod
    def from_vector(cls, z: np.ndarray, time: float) -> 'HomogeneousState':
        return cls(stretches=tuple(float(v) for v in z[:-2]), lam=float(z[-2]), phi=float(z[-1]), time=time)


def initial_state(params: MaterialParams, dim: int, phi_init: Optional[float] = None) -> HomogeneousState:
    phi = params.phi_bar if phi_init is None else phi_init
    return HomogeneousState(stretches=(1.0,) * dim, lam=0.0, phi=phi, time=0.0)


def _mechanics(z: np.ndarray, params: MaterialParams, problem: str, phi_init: float):
    """Stress-balance and incompressibility residuals plus the normalized pressure."""
    dim = z.size - 2
    stretches, lam, phi = z[:dim], z[-2], z[-1]
    stress_scale = 1.0 / (params.C + params.B)
    if problem == 'forward':
        kin = Kinematics.from_gradient(np.diag(stretches), params)
        J = kin.J
        P = solid_piola(kin, params, check=False) + lam * J * kin.F_inv_T
        stress = np.diag(P) * stress_scale
        constraint = J - phi - (1.0 - phi_init)
        p = pore_pressure(phi, phi_init, lam, params, check=False)
    else:
        kin = Kinematics.from_gradient(np.diag(1.0 / stretches), params)
        j = np.prod(stretches)
        sigma = j * solid_piola(kin, params, check=False) @ kin.F.T + lam * np.eye(dim)
        stress = np.diag(sigma) * stress_scale
        constraint = j * (1.0 - phi) - (1.0 - params.phi_bar)
        p = pore_pressure(params.phi_bar / j, phi, lam, params, check=False)
    return stress, constraint, p


def _fd_jacobian(residual: Callable[[np.ndarray], np.ndarray], z: np.ndarray) -> np.ndarray:
    n = z.size
    jacobian = np.empty((n, n))
    for j in range(n):
        h = FD_STEP * max(1.0, abs(z[j]))
        forward, backward = z.copy(), z.copy()
        forward[j] += h
        backward[j] -= h
        jacobian[:, j] = (residual(forward) - residual(backward)) / (2.0 * h)
    return jacobian


def _dense_newton(residual: Callable[[np.ndarray], np.ndarray], z0: np.ndarray,
                  tol: float = 1e-14) -> np.ndarray:
    z = np.array(z0, dtype=float)
    r = residual(z)
    for iteration in range(MAX_ITER):
        if np.max(np.abs(r)) <= tol:
            return z
        dz = np.linalg.solve(_fd_jacobian(residual, z), -r)
        z = z + dz
        r = residual(z)
        if not np.all(np.isfinite(r)):
            break
        if np.max(np.abs(dz)) <= 1e-14 * (1.0 + np.max(np.abs(z))):
            return z
    raise DivergenceError(
        f"Homogeneous Newton did not converge (|r| = {np.max(np.abs(r)):.3e}); "
        f"the loading is probably outside the homogeneous regime",
        iterations=MAX_ITER,
    )


def oracle_step(prev: HomogeneousState, dt: float, ramp: float, params: MaterialParams,
                problem: str, phi_init: Optional[float] = None) -> HomogeneousState:
    """
    Backward Euler step of the homogeneous system.

    Unknowns (stretches, lambda, phi): zero normal stress on every axis,
    the incompressibility constraint, and
    +/-(phi - phi_prev)/dt = ramp sum_i -beta_i (p - p_i) / rho_f.

    Raises:
        DivergenceError: Newton failed
    """
    if problem not in ('forward', 'refconf'):
        raise ValueError(f"Unknown problem kind {problem}")
    phi_init = params.phi_bar if phi_init is None else phi_init
    sign = 1.0 if problem == 'forward' else -1.0

    def residual(z):
        stress, constraint, p = _mechanics(z, params, problem, phi_init)
        theta = source_theta(p, ramp, params)
        mass = sign * (z[-1] - prev.phi) - dt * theta / params.rho_f
        return np.concatenate([stress, [constraint, mass]])

    z = _dense_newton(residual, prev.as_vector())
    return HomogeneousState.from_vector(z, prev.time + dt)


def oracle_trajectory(params: MaterialParams, dt: float, t_ramp: float, n_steps: int,
                      problem: str, dim: int = 2, phi_init: Optional[float] = None) -> List[HomogeneousState]:
    """Initial state followed by ``n_steps`` backward Euler steps under the linear ramp."""
    if n_steps < 1:
        raise ValueError(f"n_steps must be at least 1, got {n_steps}")
    states = [initial_state(params, dim, phi_init if problem == 'forward' else None)]
    for n in range(1, n_steps + 1):
        ramp = ramp_factor(n * dt, t_ramp)
        state = oracle_step(states[-1], dt, ramp, params, problem, phi_init)
        states.append(replace(state, time=n * dt))
    return states


def oracle_equilibrium(params: MaterialParams, problem: str, dim: int = 2,
                       phi_init: Optional[float] = None, increments: int = 10) -> HomogeneousState:
    """
    Stationary homogeneous state at full load.

    The source vanishes exactly when the pressure equals the beta-weighted
    mean of the source pressures; without sources the porosity keeps its
    initial value. The target pressure is approached in ``increments``
    equal steps from the unloaded pressure p_ref.
    """
    phi_init = params.phi_bar if phi_init is None else phi_init
    start = initial_state(params, dim, phi_init if problem == 'forward' else None)
    target = source_equilibrium_pressure(params)
    z = start.as_vector()

    def closure_residual(pressure):
        def residual(z):
            stress, constraint, p = _mechanics(z, params, problem, phi_init)
            if pressure is None:
                closure = z[-1] - start.phi
            else:
                closure = (p - pressure) / params.q2
            return np.concatenate([stress, [constraint, closure]])
        return residual

    if target is None:
        z = _dense_newton(closure_residual(None), z)
    else:
        for level in range(1, increments + 1):
            pressure = params.p_ref + level / increments * (target - params.p_ref)
            z = _dense_newton(closure_residual(pressure), z)
    logger.debug(f"Homogeneous {problem} equilibrium: {z}")
    return HomogeneousState.from_vector(z, time=float('inf'))
