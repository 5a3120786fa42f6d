import logging
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Union

import numpy as np
from dotenv import dotenv_values

from fem.utils.mesh import Mesh, build_slab, build_unit_square
from poromechanics.exceptions import ConfigurationError
from poromechanics.utils.output import write_json

logger = logging.getLogger(__name__)

PROBLEMS = ('forward', 'refconf', 'roundtrip')
FORMULATIONS = ('primal', 'mixed_p', 'mixed_u')
RAMP_MODES = ('linear', 'staged')
B_COEFFICIENTS = ('b_ff', 'b_ss', 'b_nn', 'b_fs', 'b_fn', 'b_sn')


@dataclass(frozen=True)
class MaterialParams:
    """
    Constitutive and source constants (SI units).

    C, B: Usyk stiffness and bulk penalty (Pa); b_*: Usyk exponents;
    q1, q2 (Pa), q3: porous energy; k: isotropic permeability
    (m^2 s^-1 Pa^-1); rho_f: fluid density; sources: (beta, p_i) pairs in
    (s^-1 Pa^-1, Pa); phi_bar: given porosity; p_ref: reference pressure (Pa).
    """
    C: float = 880.0
    B: float = 5e4
    b_ff: float = 1.0
    b_ss: float = 1.0
    b_nn: float = 1.0
    b_fs: float = 1.0
    b_fn: float = 1.0
    b_sn: float = 1.0
    q1: float = 1.333
    q2: float = 550.0
    q3: float = 10.0
    k: float = 2e-7
    rho_f: float = 1.0
    sources: Tuple[Tuple[float, float], ...] = ((1e-4, 1e4),)
    phi_bar: float = 0.1
    p_ref: float = 0.0
    fiber_frame: Optional[Tuple[Tuple[float, float, float], ...]] = None
    body_force: Tuple[float, ...] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        errors = {}
        for name in ('C', 'B', 'q1', 'q2', 'q3', 'k', 'rho_f'):
            if not getattr(self, name) > 0:
                errors[name] = f"must be positive, got {getattr(self, name)}"
        for name in B_COEFFICIENTS:
            if getattr(self, name) < 0:
                errors[name] = f"must be non-negative, got {getattr(self, name)}"
        if not 0.0 < self.phi_bar < 1.0:
            errors['phi_bar'] = f"must lie in (0, 1), got {self.phi_bar}"
        if self.fiber_frame is not None:
            frame = np.asarray(self.fiber_frame, dtype=float)
            if frame.shape != (3, 3) or not np.allclose(frame.T @ frame, np.eye(3), atol=1e-12):
                errors['fiber_frame'] = "must be three orthonormal vectors (f, s, n)"
        if errors:
            raise ConfigurationError(f"Invalid material parameters: {errors}", errors)

    def fiber_basis(self) -> np.ndarray:
        """Matrix whose columns are the fiber, sheet and normal directions."""
        if self.fiber_frame is None:
            return np.eye(3)
        return np.asarray(self.fiber_frame, dtype=float).T

    def b_matrix(self) -> np.ndarray:
        """Symmetric matrix of Usyk exponents in the (f, s, n) basis."""
        return np.array([
            [self.b_ff, self.b_fs, self.b_fn],
            [self.b_fs, self.b_ss, self.b_sn],
            [self.b_fn, self.b_sn, self.b_nn],
        ])

    def without_sources(self) -> 'MaterialParams':
        return replace(self, sources=())


@dataclass(frozen=True)
class TimeStepperConfig:
    dt: float = 0.01
    t_ramp: float = 0.1
    stationary_tol: float = 1e-6
    stationary_atol: float = 1e-15
    max_steps: int = 5000
    ramp_mode: str = 'linear'
    ramp_levels: int = 10
    newton_abs_tol: float = 1e-12
    newton_rel_tol: float = 1e-10
    newton_max_iter: int = 25

    def __post_init__(self):
        errors = {}
        if not self.dt > 0:
            errors['dt'] = f"must be positive, got {self.dt}"
        if self.t_ramp < 0:
            errors['t_ramp'] = f"must be non-negative, got {self.t_ramp}"
        if not 0.0 < self.stationary_tol < 1.0:
            errors['tol'] = f"must lie in (0, 1), got {self.stationary_tol}"
        if self.ramp_mode not in RAMP_MODES:
            errors['ramp_mode'] = f"must be one of {RAMP_MODES}"
        if self.max_steps < 1:
            errors['max_steps'] = "must be at least 1"
        if errors:
            raise ConfigurationError(f"Invalid time stepper settings: {errors}", errors)

    @property
    def activation_step(self) -> int:
        """Index of the first step with the full source, ceil(t_ramp / dt)."""
        return max(1, math.ceil(self.t_ramp / self.dt - 1e-9))


@dataclass(frozen=True)
class MeshSpec:
    dim: int = 2
    n: int = 16
    side: float = 0.01
    slab_n: int = 2
    slab_lengths: Tuple[float, float, float] = (0.05, 0.01, 0.01)

    @property
    def slab_cells(self) -> Tuple[int, int, int]:
        return (5 * self.slab_n, self.slab_n, self.slab_n)

    def build(self) -> Mesh:
        if self.dim == 2:
            return build_unit_square(self.n, self.n, self.side)
        return build_slab(*self.slab_cells, self.slab_lengths)


@dataclass(frozen=True)
class RunConfig:
    problem: str = 'roundtrip'
    formulation: str = 'primal'
    mesh: MeshSpec = field(default_factory=MeshSpec)
    material: MaterialParams = field(default_factory=MaterialParams)
    stepper: TimeStepperConfig = field(default_factory=TimeStepperConfig)
    aa_depth: Tuple[int, ...] = (0,)
    quadrature_degree: int = 6
    output_dir: str = 'output'
    seed: int = 0

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['activation_step'] = self.stepper.activation_step
        return data

    def with_output(self, output_dir: Union[str, Path]) -> 'RunConfig':
        return replace(self, output_dir=str(output_dir))


def run_config_from_validated(data: Mapping[str, Any]) -> RunConfig:
    """Build the frozen configuration tree from serializer-validated data."""
    material = MaterialParams(
        C=data['c'], B=data['b'],
        **{name: data[name] for name in B_COEFFICIENTS},
        q1=data['q1'], q2=data['q2'], q3=data['q3'],
        k=data['k'], rho_f=data['rho_f'],
        sources=tuple((float(beta), float(p)) for beta, p in data['sources']),
        phi_bar=data['phi_bar'], p_ref=data['p_ref'],
        fiber_frame=None if data.get('fiber_frame') is None
        else tuple(tuple(float(v) for v in row) for row in data['fiber_frame']),
        body_force=tuple(float(v) for v in data['body_force']),
    )
    stepper = TimeStepperConfig(
        dt=data['dt'], t_ramp=data['t_ramp'], stationary_tol=data['tol'],
        stationary_atol=data['stationary_atol'], max_steps=data['max_steps'],
        ramp_mode=data['ramp_mode'], ramp_levels=data['ramp_levels'],
        newton_abs_tol=data['newton_abs_tol'], newton_rel_tol=data['newton_rel_tol'],
        newton_max_iter=data['newton_max_iter'],
    )
    mesh = MeshSpec(
        dim=data['dim'], n=data['mesh_n'], side=data['side'],
        slab_n=data['slab_n'], slab_lengths=tuple(float(v) for v in data['slab_lengths']),
    )
    return RunConfig(
        problem=data['problem'], formulation=data['formulation'], mesh=mesh,
        material=material, stepper=stepper,
        aa_depth=tuple(int(m) for m in data['aa_depth']),
        quadrature_degree=data['quadrature_degree'],
        output_dir=data['output_dir'], seed=data['seed'],
    )


def parse_config(path: Optional[Union[str, Path]] = None,
                 overrides: Optional[Mapping[str, Any]] = None,
                 echo: bool = True) -> RunConfig:
    """
    Read a flat ``key = value`` file, apply overrides and validate.

    Args:
        path: config file; None means "defaults only"
        overrides: values taking precedence over the file (CLI flags)
        echo: write the effective configuration to ``<output_dir>/config.json``

    Returns:
        RunConfig

    Raises:
        ConfigurationError: unreadable file, unknown key or invalid value
    """
    from poromechanics.serializers.config_serializers import RunConfigSerializer

    raw: Dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigurationError(f"Config file {path} does not exist", {'config': 'not found'})
        raw.update({key.strip(): value for key, value in dotenv_values(path).items() if value is not None})
    if overrides:
        raw.update({key: value for key, value in overrides.items() if value is not None})

    serializer = RunConfigSerializer(data=raw)
    if not serializer.is_valid():
        errors = {key: ' '.join(str(m) for m in messages) if isinstance(messages, list) else str(messages)
                  for key, messages in serializer.errors.items()}
        raise ConfigurationError(f"Invalid configuration: {errors}", errors)

    config = run_config_from_validated(serializer.validated_data)
    logger.info(f"Configuration: problem={config.problem}, formulation={config.formulation}, "
                f"dim={config.mesh.dim}, aa_depth={list(config.aa_depth)}")
    if echo:
        write_config_echo(config)
    return config


def write_config_echo(config: RunConfig) -> Path:
    return write_json(Path(config.output_dir) / 'config.json', config.to_dict())
