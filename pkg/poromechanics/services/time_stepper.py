import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np
import scipy.sparse as sp

from fem.exceptions import SolverError
from fem.services.assembly import apply_constraints, assemble, set_constrained_values
from fem.services.newton import newton_solve
from poromechanics.config import TimeStepperConfig
from poromechanics.exceptions import MaxStepsExceededError, StepFailedError
from poromechanics.services.boundary import BoundarySpec, apply_bcs, neumann_load
from poromechanics.services.stationary import (
    StationarityMonitor,
    accelerated_fixed_point,
    is_stationary,
    stationary_residual,
)
from poromechanics.services.weak_forms import PoroelasticForm, SystemState

logger = logging.getLogger(__name__)


def ramp_factor(t: float, t_ramp: float) -> float:
    """Linear continuation min(t / t_ramp, 1); 1 without a ramp."""
    if t_ramp <= 0.0:
        return 1.0
    return min(max(t, 0.0) / t_ramp, 1.0)


class StepProblem:
    """
    Nonlinear system of one backward Euler step.

    Rows are scaled block by block (see ``PoroelasticForm.row_scale``)
    before the essential conditions replace their rows by identities.
    """

    def __init__(self, form: PoroelasticForm, constrained: np.ndarray, load: np.ndarray):
        self.form = form
        self.constrained = constrained
        self.load = load

    def assemble(self, x: np.ndarray):
        residual, matrix = assemble(self.form, x, self.form.dofmap)
        scale = self.form.row_scale()
        residual = (residual + self.load) * scale
        matrix = (sp.diags(scale) @ matrix).tocsr()
        return apply_constraints(matrix, residual, self.constrained)


class Simulation:
    """A weak form bound to its boundary conditions and time stepping settings."""

    def __init__(self, form: PoroelasticForm, config: TimeStepperConfig,
                 boundary: Optional[BoundarySpec] = None):
        self.form = form
        self.config = config
        self.boundary = boundary or BoundarySpec.isolated(form.dim, form.formulation)
        self.constrained, self.lift = apply_bcs(self.boundary, form.formulation, form.dofmap)
        self.load = neumann_load(self.boundary, form.formulation, form.dofmap)
        self.problem = StepProblem(form, self.constrained, self.load)

    @property
    def label(self) -> str:
        return f"{self.form.problem}/{self.form.formulation}"

    def initial_state(self) -> SystemState:
        state = self.form.initial_state()
        state.values = set_constrained_values(state.values, self.constrained, self.lift)
        return state

    def residual_norm(self, state: SystemState, ramp: float) -> float:
        residual = stationary_residual(self.form, state, ramp, self.load, self.constrained)
        return float(np.linalg.norm(residual))


def step(sim: Simulation, state_prev: SystemState, t_next: float, ramp: Optional[float] = None,
         phi_prev: Optional[np.ndarray] = None, stage: Optional[int] = None) -> Tuple[SystemState, int]:
    """
    One implicit backward Euler step, warm-started from ``state_prev``.

    Args:
        sim: simulation holding the form, boundary data and tolerances
        state_prev: previous state (its porosity is the Newton initial guess)
        t_next: time at the end of the step
        ramp: source level; defaults to the linear ramp at t_next
        phi_prev: porosity entering the time derivative; defaults to that of state_prev
        stage: ramp level index for error reports in staged runs

    Returns:
        (converged state at t_next, Newton iterations)

    Raises:
        StepFailedError: Newton failed or the porosity lost positivity
    """
    config = sim.config
    form = sim.form
    if ramp is None:
        ramp = ramp_factor(t_next, config.t_ramp)
    if phi_prev is None:
        phi_prev = form.porosity(state_prev)
    form.set_step(phi_prev, config.dt, ramp)

    x0 = set_constrained_values(state_prev.values, sim.constrained, sim.lift)
    try:
        x, iterations = newton_solve(
            sim.problem, x0,
            abs_tol=config.newton_abs_tol,
            rel_tol=config.newton_rel_tol,
            max_iter=config.newton_max_iter,
        )
    except SolverError as exc:
        logger.error(f"{sim.label}: step to t = {t_next:.4f} failed at ramp {ramp:.3f}", exc_info=True)
        raise StepFailedError(
            f"Time step to t = {t_next:.6g} (ramp {ramp:.3g}) failed: {exc}",
            time=t_next, ramp=ramp, stage=stage,
        ) from exc

    state = SystemState(values=x, time=t_next)
    porosity = form.porosity(state)
    if np.any(porosity <= 0.0):
        raise StepFailedError(
            f"Porosity became non-positive at t = {t_next:.6g} (min {porosity.min():.3e})",
            time=t_next, ramp=ramp, stage=stage,
        )
    return state, iterations


def avg_eulerian_porosity(form: PoroelasticForm, state: SystemState) -> float:
    return form.average_porosity(state)


@dataclass
class TrajectoryRecord:
    time: float
    phi_avg: float
    residual: float
    newton_iterations: int
    ratio: Optional[float] = None
    fallback: bool = False


@dataclass
class RunResult:
    state: SystemState
    trajectory: List[TrajectoryRecord]
    time_steps: int
    iterations: int
    newton_iterations: int
    fallbacks: int
    r0: float
    final_residual: float
    avg_porosity: float
    stage_iterations: List[int] = field(default_factory=list)

    @property
    def final_ratio(self) -> float:
        if self.r0 > 0.0:
            return self.final_residual / self.r0
        return 0.0 if self.final_residual == 0.0 else math.inf

    def summary(self) -> dict:
        return {
            'time_steps': self.time_steps,
            'stationary_iterations': self.iterations,
            'newton_iterations': self.newton_iterations,
            'fallbacks': self.fallbacks,
            'r0': self.r0,
            'final_residual': self.final_residual,
            'final_ratio': self.final_ratio,
            'avg_porosity': self.avg_porosity,
            'stage_iterations': list(self.stage_iterations),
        }


class _Marcher:
    """Mutable bookkeeping of one run: current state, counters, trajectory."""

    def __init__(self, sim: Simulation, on_record: Optional[Callable[[TrajectoryRecord], None]]):
        self.sim = sim
        self.state = sim.initial_state()
        self.trajectory: List[TrajectoryRecord] = []
        self.newton_iterations = 0
        self.last_iterations = 0
        self.on_record = on_record

    def record(self, norm: float, ratio: Optional[float] = None, fallback: bool = False):
        entry = TrajectoryRecord(
            time=self.state.time,
            phi_avg=self.sim.form.average_porosity(self.state),
            residual=norm,
            newton_iterations=self.last_iterations,
            ratio=ratio,
            fallback=fallback,
        )
        self.trajectory.append(entry)
        logger.info(
            f"{self.sim.label} t = {entry.time:.4f}: phiAvg = {entry.phi_avg:.8f}, |R| = {norm:.3e}"
            + (f", |R|/R0 = {ratio:.3e}" if ratio is not None else "")
            + f", newton {entry.newton_iterations}"
        )
        if self.on_record is not None:
            self.on_record(entry)

    def advance(self, step_index: int, ramp: float, stage: Optional[int] = None,
                phi_prev: Optional[np.ndarray] = None):
        t_next = step_index * self.sim.config.dt
        self.state, self.last_iterations = step(self.sim, self.state, t_next, ramp=ramp,
                                                phi_prev=phi_prev, stage=stage)
        self.newton_iterations += self.last_iterations

    def settle(self, ramp: float, activation_step: int, depth: int, stage: Optional[int] = None):
        """Capture R0 at the current state and iterate to stationarity at a fixed ramp level."""
        sim = self.sim
        norm = sim.residual_norm(self.state, ramp)
        monitor = StationarityMonitor(sim.config.stationary_tol, sim.config.stationary_atol)
        monitor.capture(norm)
        self.record(norm, ratio=monitor.ratio(norm))
        if is_stationary(monitor, norm):
            return 0, 0, norm, monitor.r0

        def evaluate(x: np.ndarray, step_index: int):
            self.state = sim.form.with_porosity(self.state, x)
            self.advance(step_index, ramp, stage=stage, phi_prev=x)
            return self.state, sim.form.porosity(self.state)

        def on_iterate(step_index, state, norm, fallback):
            self.record(norm, ratio=monitor.ratio(norm), fallback=fallback)

        result = accelerated_fixed_point(
            evaluate, lambda state: sim.residual_norm(state, ramp), sim.form.porosity(self.state),
            monitor, depth, activation_step, sim.config.max_steps, on_iterate=on_iterate,
        )
        self.state = result.state
        return result.iterations, result.fallbacks, result.residual, monitor.r0


def run(sim: Simulation, aa_depth: int = 0,
        on_record: Optional[Callable[[TrajectoryRecord], None]] = None) -> RunResult:
    """
    March to a stationary state.

    Linear mode ramps the source over t_ramp and then iterates at full load
    until the steady residual falls below tol R0, R0 being captured at the
    end of the ramp. Staged mode raises the source in ``ramp_levels`` equal
    increments and iterates to stationarity at each level, with its own R0.
    Anderson acceleration (depth > 0) only acts after each activation.

    Raises:
        MaxStepsExceededError: step budget exhausted
        StepFailedError: a time step failed
    """
    config = sim.config
    marcher = _Marcher(sim, on_record)
    logger.info(f"Running {sim.label} ({config.ramp_mode} ramp, AA depth {aa_depth}, "
                f"{sim.form.dofmap.num_dofs} dofs)")
    stage_iterations = []
    fallbacks = 0

    if config.ramp_mode == 'linear':
        activation = config.activation_step
        if activation > config.max_steps:
            raise MaxStepsExceededError(
                f"The ramp needs {activation} steps, more than max_steps = {config.max_steps}",
                steps=config.max_steps,
            )
        for n in range(1, activation):
            marcher.advance(n, ramp_factor(n * config.dt, config.t_ramp))
            marcher.record(sim.residual_norm(marcher.state, ramp_factor(n * config.dt, config.t_ramp)))
        marcher.advance(activation, 1.0)
        iterations, fallbacks, final, r0 = marcher.settle(1.0, activation, aa_depth)
        stage_iterations.append(iterations)
        time_steps = activation + iterations
    else:
        time_steps = 0
        r0 = 0.0
        final = 0.0
        for level in range(1, config.ramp_levels + 1):
            ramp = level / config.ramp_levels
            time_steps += 1
            if time_steps > config.max_steps:
                raise MaxStepsExceededError(f"Step budget exhausted at ramp level {ramp:.2f}",
                                            steps=config.max_steps)
            marcher.advance(time_steps, ramp, stage=level)
            iterations, level_fallbacks, final, r0 = marcher.settle(ramp, time_steps, aa_depth, stage=level)
            logger.info(f"{sim.label}: ramp level {ramp:.2f} stationary after {iterations} iterations")
            stage_iterations.append(iterations)
            fallbacks += level_fallbacks
            time_steps += iterations
        iterations = sum(stage_iterations)

    result = RunResult(
        state=marcher.state,
        trajectory=marcher.trajectory,
        time_steps=time_steps,
        iterations=iterations,
        newton_iterations=marcher.newton_iterations,
        fallbacks=fallbacks,
        r0=r0,
        final_residual=final,
        avg_porosity=sim.form.average_porosity(marcher.state),
        stage_iterations=stage_iterations,
    )
    logger.info(f"{sim.label} finished: {time_steps} time steps, {iterations} stationary iterations, "
                f"phiAvg = {result.avg_porosity:.8f}")
    return result
