"""
Fixed-step time integration of a phase-space field.

A *field* is any callable ``state -> StateDerivative`` that also offers ``energy(state)``
and ``contains(state)``, e.g. :class:`src.services.dynamics.PhaseSpaceField`.
"""
import logging
import math
from typing import NamedTuple, Protocol

import numpy as np

from src.conf.config import config
from src.entity.errors import ChartExit, DerivativeUnavailable, NonConvergence, OutOfChart
from src.entity.models import BodyState, Sample, StateDerivative, TerminationReason, TrajectoryRecord
from src.schemas.run import StepMethod, StepperConfig

logger = logging.getLogger(__name__)


class Field(Protocol):
    def __call__(self, state: BodyState) -> StateDerivative: ...

    def energy(self, state: BodyState) -> float: ...

    def contains(self, state: BodyState) -> bool: ...


class StepResult(NamedTuple):
    state: BodyState
    projection: float


def _rate(field: Field, vector: np.ndarray, n: int) -> tuple[np.ndarray, float]:
    try:
        return field(BodyState.from_vector(vector, n)).to_vector()
    except (OutOfChart, DerivativeUnavailable) as err:
        raise ChartExit(str(err)) from err


def _rk4(field: Field, y: np.ndarray, h: float, n: int) -> tuple[np.ndarray, float]:
    k1, p1 = _rate(field, y, n)
    k2, p2 = _rate(field, y + 0.5 * h * k1, n)
    k3, p3 = _rate(field, y + 0.5 * h * k2, n)
    k4, p4 = _rate(field, y + h * k3, n)
    return y + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0, max(p1, p2, p3, p4)


def _implicit_midpoint(field: Field, y: np.ndarray, h: float, n: int) -> tuple[np.ndarray, float]:
    rate, projection = _rate(field, y, n)
    guess = y + h * rate
    for iteration in range(1, config.IMPLICIT_MAX_ITER + 1):
        rate, p = _rate(field, 0.5 * (y + guess), n)
        projection = max(projection, p)
        update = y + h * rate
        change = np.max(np.abs(update - guess))
        guess = update
        if change <= config.IMPLICIT_TOL * max(1.0, float(np.max(np.abs(update)))):
            logger.debug("implicit midpoint converged in %d iterations", iteration)
            return guess, projection
    raise NonConvergence(iterations=config.IMPLICIT_MAX_ITER, change=float(change))


_STEPPERS = {
    StepMethod.rk4: _rk4,
    StepMethod.implicit_midpoint: _implicit_midpoint,
}


def step(state: BodyState, field: Field, h: float, method: StepMethod = StepMethod.rk4) -> StepResult:
    """
    The step function advances the state by one step of ``h``.

    Spin increments only ever carry the antisymmetric part of ``dS/dt``; the symmetric
    part that was dropped is returned as ``projection``.

    :param state: BodyState: Current state
    :param field: Field: Phase-space vector field
    :param h: float: Step size
    :param method: StepMethod: ``rk4`` or ``implicit_midpoint``
    :return: StepResult(state, projection)
    """
    if not h > 0:
        raise ValueError("step must be positive")
    n = state.dim
    vector, projection = _STEPPERS[StepMethod(method)](field, state.to_vector(), h, n)
    logger.debug("antisymmetry projection %.3e", projection)
    new_state = BodyState.from_vector(vector, n)
    if not field.contains(new_state):
        raise ChartExit(x=new_state.position.tolist())
    return StepResult(new_state, projection)


def _sample(field: Field, t: float, state: BodyState, projection: float) -> Sample:
    return Sample(t=t, state=state, energy=field.energy(state), spin_norm=state.spin_norm,
                  projection=projection)


def step_times(stepper: StepperConfig) -> np.ndarray:
    """Grid ``0, h, 2h, ..., t_end``; the last step is shortened if ``t_end`` is not a multiple of ``h``."""
    count = math.ceil(stepper.t_end / stepper.step * (1.0 - 1e-12))
    times = np.arange(count + 1) * stepper.step
    times[-1] = stepper.t_end
    return times


def integrate(initial: BodyState, field: Field, stepper: StepperConfig) -> TrajectoryRecord:
    """
    The integrate function marches ``initial`` to ``t_end`` with a fixed step.

    Samples are kept every ``monitor_every`` steps plus the last one. If a state leaves the
    chart the march stops, the last valid state is recorded and the record's
    ``termination_reason`` is ``chart_exit``.

    :param initial: BodyState: Starting state, inside the chart
    :param field: Field: Phase-space vector field
    :param stepper: StepperConfig: Method, step, end time and sampling interval
    :return: TrajectoryRecord
    """
    if not field.contains(initial):
        raise OutOfChart(x=initial.position.tolist())
    times = step_times(stepper)
    record = TrajectoryRecord(method=stepper.method.value, step=stepper.step)
    record.samples.append(_sample(field, 0.0, initial, 0.0))
    logger.info("integrating %d steps of %s, h=%s", len(times) - 1, stepper.method.value, stepper.step)

    state = initial
    projection = 0.0
    last_kept = 0
    for k in range(1, len(times)):
        try:
            state, p = step(state, field, times[k] - times[k - 1], stepper.method)
        except ChartExit as err:
            logger.warning("chart exit at t=%s: %s", times[k - 1], err)
            if last_kept != k - 1:
                record.samples.append(_sample(field, float(times[k - 1]), state, projection))
            record.termination_reason = TerminationReason.chart_exit
            return record
        projection = max(projection, p)
        if k % stepper.monitor_every == 0 or k == len(times) - 1:
            record.samples.append(_sample(field, float(times[k]), state, projection))
            last_kept = k
            projection = 0.0

    logger.info("integration completed at t=%s", times[-1])
    return record


def relative_drift(values) -> float:
    """``max |v - v_0| / |v_0|``; absolute when ``v_0`` is zero."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return 0.0
    reference = abs(values[0])
    spread = float(np.max(np.abs(values - values[0])))
    return spread / reference if reference > 0 else spread


def observed_order(coarse_error: float, fine_error: float, refinement: float = 2.0) -> float:
    """Convergence order from errors at step ``h`` and ``h / refinement``."""
    return math.log(coarse_error / fine_error) / math.log(refinement)
