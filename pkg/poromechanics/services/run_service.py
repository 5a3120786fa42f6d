import logging
import time
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from fem.exceptions import MeshError, SolverError
from fem.utils.mesh import Mesh
from fem.utils.vtk import write_vtk
from poromechanics.config import RunConfig
from poromechanics.exceptions import RoundTripError
from poromechanics.services.oracle import oracle_equilibrium, oracle_trajectory
from poromechanics.services.time_stepper import RunResult, Simulation, run
from poromechanics.services.weak_forms import (
    DISPLACEMENT,
    LAMBDA,
    MU,
    POROSITY,
    VELOCITY,
    PoroelasticForm,
    SystemState,
)
from poromechanics.utils.output import ORACLE_HEADER, SWEEP_HEADER, write_csv, write_json, write_trajectory

logger = logging.getLogger(__name__)

DEFAULT_ORACLE_STEPS = 500


def build_simulation(config: RunConfig, problem: str, mesh: Optional[Mesh] = None,
                     phi_init: Optional[np.ndarray] = None) -> Simulation:
    mesh = mesh if mesh is not None else config.mesh.build()
    form = PoroelasticForm(
        mesh, config.material, problem, config.formulation,
        degree=config.quadrature_degree, phi_init=phi_init,
    )
    return Simulation(form, config.stepper)


def write_fields(form: PoroelasticForm, state: SystemState, path: Union[str, Path]) -> Path:
    """
    Legacy VTK file of the state on the form's mesh.

    P2 fields (displacement, velocity) are written by their vertex values;
    midside values are dropped, matching the mesh warping convention.
    """
    dofmap = form.dofmap
    point_data = {
        'displacement': dofmap.vertex_values(state.values, DISPLACEMENT),
        'porosity': dofmap.vertex_values(state.values, POROSITY),
        'lambda': dofmap.vertex_values(state.values, LAMBDA),
    }
    if MU in dofmap.fields:
        point_data['mu'] = dofmap.vertex_values(state.values, MU)
    if VELOCITY in dofmap.fields:
        point_data['velocity'] = dofmap.vertex_values(state.values, VELOCITY)
    return write_vtk(path, form.mesh, point_data, title=f"{form.problem} {form.formulation} t={state.time!r}")


def solve(config: RunConfig, problem: str, out_dir: Path, aa_depth: Optional[int] = None,
          mesh: Optional[Mesh] = None, phi_init: Optional[np.ndarray] = None) -> Tuple[Simulation, RunResult]:
    """Run one problem to stationarity and write ``<problem>.csv`` and ``<problem>.vtk``."""
    depth = config.aa_depth[0] if aa_depth is None else aa_depth
    sim = build_simulation(config, problem, mesh=mesh, phi_init=phi_init)
    result = run(sim, aa_depth=depth)
    write_trajectory(out_dir / f'{problem}.csv', result.trajectory)
    write_fields(sim.form, result.state, out_dir / f'{problem}.vtk')
    return sim, result


def _summary(config: RunConfig, problem: str, result: RunResult, aa_depth: int) -> Dict:
    return {
        'problem': problem,
        'formulation': config.formulation,
        'ramp_mode': config.stepper.ramp_mode,
        'aa_depth': aa_depth,
        'tol': config.stepper.stationary_tol,
        **result.summary(),
    }


def run_forward(config: RunConfig) -> Dict:
    """Forward problem on the configured mesh from the unloaded state."""
    out = Path(config.output_dir)
    _, result = solve(config, 'forward', out)
    summary = _summary(config, 'forward', result, config.aa_depth[0])
    write_json(out / 'summary.json', summary)
    return summary


def run_refconf(config: RunConfig) -> Dict:
    """Reference configuration problem on the configured (loaded) mesh."""
    out = Path(config.output_dir)
    _, result = solve(config, 'refconf', out)
    summary = _summary(config, 'refconf', result, config.aa_depth[0])
    write_json(out / 'summary.json', summary)
    return summary


def run_roundtrip(config: RunConfig) -> Dict:
    """
    Reference configuration followed by the forward problem on it.

    1. solve the reference configuration problem on the loaded mesh;
    2. warp the mesh by the inverse displacement at the vertices;
    3. solve the forward problem on the warped mesh, starting from the
       computed reference porosity;
    4. compare the forward result with the loaded state.

    Returns:
        Summary with both stages, the recovered average porosity and the
        geometric mismatch (largest distance between a loaded vertex and the
        forward image of its reference position)

    Raises:
        RoundTripError: a stage failed (``stage`` is 'refconf', 'warp' or 'forward')
    """
    out = Path(config.output_dir)
    depth = config.aa_depth[0]
    loaded = config.mesh.build()

    try:
        ref_sim, ref_result = solve(config, 'refconf', out, mesh=loaded)
    except SolverError as exc:
        raise RoundTripError(f"Reference configuration stage failed: {exc}", stage='refconf') from exc

    dofmap = ref_sim.form.dofmap
    inverse_displacement = dofmap.vertex_values(ref_result.state.values, DISPLACEMENT)
    try:
        reference = loaded.warped(inverse_displacement)
    except MeshError as exc:
        raise RoundTripError(f"Warping the mesh failed: {exc}", stage='warp') from exc
    write_vtk(out / 'reference_mesh.vtk', reference, {'porosity': dofmap.vertex_values(ref_result.state.values, POROSITY)})
    phi_reference = dofmap.vertex_values(ref_result.state.values, POROSITY).copy()

    try:
        fwd_sim, fwd_result = solve(config, 'forward', out, mesh=reference, phi_init=phi_reference)
    except SolverError as exc:
        raise RoundTripError(f"Forward stage failed: {exc}", stage='forward') from exc

    displacement = fwd_sim.form.dofmap.vertex_values(fwd_result.state.values, DISPLACEMENT)
    mismatch = float(np.max(np.linalg.norm(reference.points + displacement - loaded.points, axis=1)))
    phi_bar = config.material.phi_bar
    recovered = fwd_result.avg_porosity
    summary = {
        'formulation': config.formulation,
        'ramp_mode': config.stepper.ramp_mode,
        'aa_depth': depth,
        'tol': config.stepper.stationary_tol,
        'phi_bar': phi_bar,
        'recovered_avg_porosity': recovered,
        'porosity_relative_error': abs(recovered - phi_bar) / phi_bar,
        'geometric_mismatch': mismatch,
        'reference_volume': reference.volume(),
        'loaded_volume': loaded.volume(),
        'refconf': _summary(config, 'refconf', ref_result, depth),
        'forward': _summary(config, 'forward', fwd_result, depth),
    }
    write_json(out / 'summary.json', summary)
    logger.info(f"Round trip: recovered phiAvg = {recovered:.8f} (phi_bar = {phi_bar}), mismatch = {mismatch:.3e} m")
    return summary


def sweep_problem(config: RunConfig) -> str:
    """Problem swept by ``run_aa_sweep``; a round trip sweeps its reference configuration stage."""
    return 'forward' if config.problem == 'forward' else 'refconf'


def run_aa_sweep(config: RunConfig) -> List[Dict]:
    """
    Solve the configured problem once per Anderson depth.

    Each depth writes into ``depth_<m>/``; the table goes to
    ``aa_sweep.csv`` and ``aa_sweep.json``.
    """
    out = Path(config.output_dir)
    problem = sweep_problem(config)
    rows = []
    for depth in config.aa_depth:
        started = time.perf_counter()
        _, result = solve(config, problem, out / f'depth_{depth}', aa_depth=depth)
        wall_time = time.perf_counter() - started
        write_json(out / f'depth_{depth}' / 'summary.json', _summary(config, problem, result, depth))
        rows.append({
            'depth': depth,
            'iterations': result.iterations,
            'time_steps': result.time_steps,
            'wall_time': wall_time,
            'phiAvg': result.avg_porosity,
            'fallbacks': result.fallbacks,
        })
        logger.info(f"AA({depth}) {problem}: {result.iterations} iterations in {wall_time:.1f} s")

    baseline = next((row['iterations'] for row in rows if row['depth'] == 0), None)
    for row in rows:
        row['reduction'] = None if not baseline else 1.0 - row['iterations'] / baseline
    write_csv(out / 'aa_sweep.csv', SWEEP_HEADER, ([row[key] for key in SWEEP_HEADER] for row in rows))
    write_json(out / 'aa_sweep.json', {'problem': problem, 'formulation': config.formulation, 'rows': rows})
    return rows


def oracle_problem(config: RunConfig) -> str:
    return 'refconf' if config.problem == 'refconf' else 'forward'


def run_oracle(config: RunConfig, n_steps: int = DEFAULT_ORACLE_STEPS) -> Dict:
    """Homogeneous trajectory and equilibrium of the configured problem, written to ``oracle.csv``."""
    out = Path(config.output_dir)
    problem = oracle_problem(config)
    dim = config.mesh.dim
    stepper = config.stepper
    states = oracle_trajectory(config.material, stepper.dt, stepper.t_ramp, n_steps, problem, dim)
    equilibrium = oracle_equilibrium(config.material, problem, dim)
    write_csv(out / 'oracle.csv', ORACLE_HEADER, (
        (s.time, s.avg_porosity(problem), s.lam, s.stretches[0], s.stretches[1]) for s in states
    ))
    summary = {
        'problem': problem,
        'steps': n_steps,
        'final': {
            'phiAvg': states[-1].avg_porosity(problem),
            'lambda': states[-1].lam,
            'stretches': list(states[-1].stretches),
        },
        'equilibrium': {
            'phiAvg': equilibrium.avg_porosity(problem),
            'lambda': equilibrium.lam,
            'stretches': list(equilibrium.stretches),
            'phi': equilibrium.phi,
        },
    }
    write_json(out / 'oracle.json', summary)
    return summary
