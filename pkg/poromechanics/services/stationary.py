import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from fem.services.assembly import assemble_residual
from poromechanics.exceptions import MaxStepsExceededError, StationarityError
from poromechanics.services.weak_forms import PoroelasticForm, SystemState
from poromechanics.utils.anderson import AndersonState, anderson_update

logger = logging.getLogger(__name__)


def stationary_residual(form: PoroelasticForm, state: SystemState, ramp: float,
                        load: Optional[np.ndarray] = None,
                        constrained: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Steady mass residual of the active formulation.

    The time derivative is omitted; the rows are those of the porosity test
    functions (the mixed pressure test functions for ``mixed_p``).

    Raises:
        NonFiniteResidualError: if some cell produces NaN/Inf
    """
    ramp_before = form.ramp
    form.ramp = ramp
    try:
        residual = assemble_residual(form.steady_kernel, state.values, form.dofmap)
    finally:
        form.ramp = ramp_before
    if load is not None:
        residual = residual + load
    if constrained is not None and len(constrained):
        residual[constrained] = 0.0
    return residual[form.dofmap.field_dofs(form.mass_field)]


@dataclass
class StationarityMonitor:
    """
    Relative stationarity test |R| <= tol R0.

    R0 is the residual norm captured when the source ramp completes. A
    floor ``atol`` keeps the test meaningful when R0 vanishes (no source).
    """
    tol: float
    atol: float = 1e-15
    r0: Optional[float] = None
    last: Optional[float] = None
    history: List[float] = field(default_factory=list)

    @property
    def captured(self) -> bool:
        return self.r0 is not None

    def capture(self, norm: float):
        if not math.isfinite(norm) or norm < 0.0:
            raise StationarityError(f"Cannot normalize by residual norm {norm}")
        self.r0 = float(norm)
        logger.info(f"Stationarity normalization R0 = {self.r0:.6e}")

    def reset(self):
        self.r0 = None
        self.last = None
        self.history.clear()

    def ratio(self, norm: float) -> float:
        if self.r0 is None:
            raise StationarityError("Residual ratio requested before R0 was captured")
        return norm / self.r0 if self.r0 > 0.0 else (0.0 if norm == 0.0 else math.inf)

    def threshold(self) -> float:
        if self.r0 is None:
            raise StationarityError("Stationarity threshold requested before R0 was captured")
        return max(self.tol * self.r0, self.atol)


def is_stationary(monitor: StationarityMonitor, residual) -> bool:
    """
    Args:
        monitor: monitor with R0 captured
        residual: steady residual vector, or its norm

    Raises:
        StationarityError: R0 has not been captured yet
    """
    norm = float(np.linalg.norm(residual)) if np.ndim(residual) else float(residual)
    if not math.isfinite(norm):
        raise StationarityError(f"Stationary residual norm is not finite: {norm}")
    threshold = monitor.threshold()
    monitor.last = norm
    monitor.history.append(norm)
    return norm <= threshold


@dataclass
class FixedPointResult:
    state: SystemState
    iterations: int
    fallbacks: int
    residual: float


# evaluate(x, step_index) -> (full state T(x), porosity of that state)
StepEvaluator = Callable[[np.ndarray, int], Tuple[SystemState, np.ndarray]]


def accelerated_fixed_point(evaluate: StepEvaluator, residual_norm: Callable[[SystemState], float],
                            x0: np.ndarray, monitor: StationarityMonitor, depth: int,
                            activation_step: int, max_steps: int,
                            on_iterate: Optional[Callable] = None) -> FixedPointResult:
    """
    Anderson-accelerated fixed-point iteration of S = porosity o T.

    Iteration k (k >= 1) evaluates T at the current porosity iterate as time
    step ``activation_step + k``; the full state it returns is tested for
    stationarity, and the next porosity iterate is the Anderson update of
    the history. Depth 0 is plain time stepping.

    Args:
        evaluate: applies one time step from porosity x, returns (state, new porosity)
        residual_norm: norm of the steady residual of a state
        x0: porosity at the activation step
        monitor: stationarity monitor with R0 captured
        depth: Anderson depth m
        activation_step: number of time steps already taken
        max_steps: total time step budget
        on_iterate: called as on_iterate(step, state, norm, fallback) after each evaluation

    Returns:
        FixedPointResult with the stationary state and the iteration count

    Raises:
        MaxStepsExceededError: the budget ran out before stationarity
    """
    if not monitor.captured:
        raise StationarityError("Fixed-point iteration started before R0 was captured")
    aa = AndersonState(depth)
    x = np.array(x0, dtype=float, copy=True)
    fallbacks = 0
    fallback = False
    for k in range(1, max_steps - activation_step + 1):
        step_index = activation_step + k
        state, g = evaluate(x, step_index)
        norm = residual_norm(state)
        stationary = is_stationary(monitor, norm)
        if on_iterate is not None:
            on_iterate(step_index, state, norm, fallback)
        if stationary:
            logger.info(f"Stationary after {k} fixed-point iterations (|R|/R0 = {monitor.ratio(norm):.3e})")
            return FixedPointResult(state=state, iterations=k, fallbacks=fallbacks, residual=norm)

        x_next = anderson_update(aa, x, g)
        fallback = bool(np.any(x_next <= 0.0))
        if fallback:
            fallbacks += 1
            logger.warning(f"Accelerated porosity not positive at step {step_index}; using the plain update")
            x_next = g.copy()
        x = x_next

    last = monitor.ratio(monitor.last) if monitor.last is not None else math.nan
    raise MaxStepsExceededError(
        f"No stationary state within {max_steps} time steps (|R|/R0 = {last:.3e})",
        steps=max_steps,
    )
