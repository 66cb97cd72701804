"""
Orchestration shared by the command line and the HTTP routes: config parsing, the
geometry check, a single simulation with its diagnostics, and parameter sweeps.
"""
import itertools
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from src.conf import messages
from src.entity.errors import (NUMERICAL_ERRORS, ConfigError, DimensionMismatch, ShapeMismatch, TangentBodyError,
                               ValidationFailure)
from src.entity.models import (BodyParams, BodyState, DerivativeBackend, MassPoint, TerminationReason,
                               TrajectoryRecord, spin_matrix)
from src.schemas.report import CheckResult, Diagnostics, GeometryReport, SweepRow
from src.schemas.run import RunConfig, StepperConfig, SweepGrid, TolerancesSchema
from src.services import body, dynamics, geometry, integrate, scenarios, validate
from src.services.scenarios import Scenario

logger = logging.getLogger(__name__)


@dataclass
class Simulation:
    scenario: Scenario
    params: BodyParams
    record: TrajectoryRecord
    diagnostics: Diagnostics


def parse_config(data: dict) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as err:
        first = err.errors()[0]
        field = ".".join(str(part) for part in first["loc"]) or None
        raise ConfigError(first["msg"], field=field) from err


def load_config(path) -> RunConfig:
    """
    The load_config function reads a JSON run config from disk.

    :param path: str | Path: Config file
    :return: RunConfig
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise ConfigError(f"Cannot read config {path}: {err.strerror}", field="config") from err
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"Invalid JSON: {err.msg}", field="config", line=err.lineno, column=err.colno) from err
    return parse_config(data)


def scenario_from(run: RunConfig) -> Scenario:
    return scenarios.builtin(run.scenario.name, run.scenario.radius, run.scenario.margin)


def _upper(values, dim: int, field: str) -> np.ndarray:
    count = dim * (dim - 1) // 2
    vector = np.zeros(count) if values is None else np.asarray(values, dtype=float)
    if vector.shape != (count,):
        raise ShapeMismatch(field=field, expected=count, got=len(vector))
    return vector


def body_from(run: RunConfig, dim: int) -> tuple[BodyParams, np.ndarray | None, np.ndarray | None]:
    """
    The body_from function turns the config's body block into dynamics parameters.

    :param run: RunConfig: Parsed config
    :param dim: int: Manifold dimension
    :return: ``(params, eta, spin)``; mass-point bodies give ``eta``, direct bodies give ``spin``
    """
    if run.body is None:
        raise ConfigError("Simulation needs a body", field="body")
    block = run.body
    if block.points is None:
        spin = spin_matrix(_upper(block.spin, dim, "body.spin"), dim)
        return BodyParams(mass=block.mass, inertia=block.inertia), None, spin

    model = body.build_body(MassPoint(p.mass, p.offset) for p in block.points)
    if model.dim != dim:
        raise DimensionMismatch(field="body.points", dim=model.dim, required=dim)
    params = body.body_params(model)
    eta = spin_matrix(_upper(block.angular_velocity, dim, "body.angular_velocity"), dim)
    return params, eta, None


def initial_state(run: RunConfig, scenario: Scenario, params: BodyParams,
                  eta: np.ndarray | None, spin: np.ndarray | None) -> BodyState:
    """
    Initial phase-space point. A velocity goes through the Legendre map; a momentum is taken
    as coordinate components, with ``S = I eta`` for mass-point bodies.
    """
    if run.initial is None:
        raise ConfigError("Simulation needs an initial state", field="initial")
    frame = scenario.frame
    position = np.asarray(run.initial.position, dtype=float)
    if position.shape != (frame.dim,):
        raise DimensionMismatch(field="initial.position", dim=len(position), required=frame.dim)
    if not frame.contains(position):
        raise ConfigError(messages.OUT_OF_CHART, field="initial.position", x=position.tolist())

    if run.initial.velocity is not None:
        xdot = np.asarray(run.initial.velocity, dtype=float)
        if eta is not None:
            return dynamics.momenta_from_velocities(position, xdot, eta, frame, params)
        gamma = geometry.connection_from_frame(frame, position).gamma
        p_frame = params.mass * xdot + np.einsum("acd,cd->a", gamma, spin)
        return BodyState.from_spin_matrix(position, dynamics.coordinate_momentum(p_frame, frame, position), spin)

    if eta is not None:
        spin = params.inertia * eta
    return BodyState.from_spin_matrix(position, run.initial.momentum, spin)


def _check(name: str, x, value: float, threshold: float, measured: float | None = None) -> CheckResult:
    return CheckResult(name=name, point=[float(v) for v in x], measured=measured, value=float(value),
                       threshold=threshold, passed=bool(value <= threshold))


def geometry_check(run: RunConfig, backend: DerivativeBackend = DerivativeBackend.analytic,
                   tol_scale: float = 1.0) -> GeometryReport:
    """
    The geometry_check function evaluates, on the scenario's chart grid, both structure-equation
    residuals, the curvature antisymmetries, the first Bianchi identity and, when the scenario
    knows its curvature, the sectional curvature against that value.

    :param run: RunConfig: Parsed config (only ``scenario`` and ``tolerances`` are used)
    :param backend: DerivativeBackend: Derivative backend under test
    :param tol_scale: float: Multiplies every threshold
    :return: GeometryReport
    """
    scenario = scenario_from(run)
    tol = run.tolerances.scaled(tol_scale)
    frame = scenario.frame
    checks = []
    for x in scenario.chart_grid():
        first, second = geometry.verify_structure_equations(frame, x, backend)
        curvature = geometry.curvature_from_connection(frame, x, backend)
        checks += [
            _check("first_structure", x, first, tol.structure),
            _check("curvature_form", x, second, tol.structure),
            _check("form_pair_antisymmetry", x, curvature.form_pair_residual(), tol.symmetry),
            _check("rotation_pair_antisymmetry", x, curvature.rotation_pair_residual(), tol.symmetry),
            _check("bianchi", x, curvature.bianchi_residual(), tol.symmetry),
        ]
        if scenario.curvature == 0.0:
            size = float(np.max(np.abs(curvature.riemann)))
            checks.append(_check("flat_curvature", x, size, tol.flat_curvature, size))
        elif scenario.curvature is not None:
            sectional = curvature.sectional()
            checks.append(_check("sectional_curvature", x, abs(sectional - scenario.curvature),
                                 tol.curvature, sectional))

    failures = sum(not c.passed for c in checks)
    logger.info("geometry check of %s: %d checks, %d failed", scenario.name, len(checks), failures)
    return GeometryReport(scenario=scenario.name, backend=DerivativeBackend(backend).value,
                          passed=failures == 0, failures=failures, checks=checks)


def _profile_stats(record: TrajectoryRecord, scenario: Scenario) -> tuple[float | None, float | None]:
    if scenario.dim != 2 or len(record) < 5:
        return None, None
    profile = validate.geodesic_curvature_profile(record, scenario.frame)
    return float(np.mean(profile)), float(np.std(profile))


def _residual_summary(residual, record: TrajectoryRecord, frame, params: BodyParams,
                      backend: DerivativeBackend) -> tuple[float | None, float | None, float | None]:
    """
    ``(fine, coarse, ratio)``: the residual on every sample, on every other sample, and
    ``coarse / fine``, which approaches 4 while the difference quotients dominate.
    """
    if len(record) < 3:
        return None, None, None
    fine = residual(record, frame, params, backend)
    if len(record) < 5:
        return fine, None, None
    coarse = residual(replace(record, samples=record.samples[::2]), frame, params, backend)
    return fine, coarse, (coarse / fine if fine > 0.0 else None)


def diagnose(record: TrajectoryRecord, scenario: Scenario, params: BodyParams,
             backend: DerivativeBackend = DerivativeBackend.analytic) -> Diagnostics:
    """
    The diagnose function collects drift, residual and shape measurements for a trajectory.

    Residuals need three samples. Their every-other-sample refinement and the two-dimensional
    geodesic-curvature profile need five. Entries that cannot be formed are ``None``.

    :param record: TrajectoryRecord: Integrated trajectory
    :param scenario: Scenario: Scenario the trajectory lives in
    :param params: BodyParams: Body parameters
    :param backend: DerivativeBackend: Backend for connection and curvature
    :return: Diagnostics
    """
    frame = scenario.frame
    spin_residual, spin_coarse, spin_ratio = _residual_summary(validate.covariant_spin_residual, record,
                                                                frame, params, backend)
    force_residual, force_coarse, force_ratio = _residual_summary(validate.papapetrou_residual, record,
                                                                   frame, params, backend)
    mean, std = _profile_stats(record, scenario)

    initial, final = record.samples[0].state, record.final_state
    oracle_error = None
    if (scenario.geodesic is not None and not np.any(initial.spin_upper)
            and record.termination_reason == TerminationReason.completed):
        target = scenarios.geodesic_oracle(scenario, initial, record.samples[-1].t, params)
        oracle_error = float(np.max(np.abs(final.position - target)))

    return Diagnostics(
        energy_drift_rel=integrate.relative_drift(record.energies),
        spin_norm_drift_rel=integrate.relative_drift(record.spin_norms),
        covariant_spin_residual=spin_residual,
        papapetrou_residual=force_residual,
        covariant_spin_residual_coarse=spin_coarse,
        covariant_spin_residual_ratio=spin_ratio,
        papapetrou_residual_coarse=force_coarse,
        papapetrou_residual_ratio=force_ratio,
        geodesic_curvature_mean=mean,
        geodesic_curvature_std=std,
        termination_reason=record.termination_reason,
        spin_energy=dynamics.spin_energy(initial, params),
        closure=float(np.max(np.abs(final.position - initial.position))),
        oracle_error=oracle_error,
        max_projection=record.max_projection,
        samples=len(record),
        final_time=record.samples[-1].t,
    )


def check_thresholds(diagnostics: Diagnostics, tolerances: TolerancesSchema) -> None:
    """Raise :class:`ValidationFailure` for every configured limit the diagnostics exceed."""
    limits = {
        "covariant_spin_residual": tolerances.covariant_spin,
        "papapetrou_residual": tolerances.papapetrou,
        "energy_drift_rel": tolerances.energy_drift,
    }
    exceeded = {}
    for key, limit in limits.items():
        value = getattr(diagnostics, key)
        if limit is not None and value is not None and value > limit:
            exceeded[key] = value
    if exceeded:
        raise ValidationFailure(**exceeded)


def _stepper(run: RunConfig) -> StepperConfig:
    if run.stepper is None:
        raise ConfigError("Simulation needs a stepper block", field="stepper")
    return run.stepper


def simulate(run: RunConfig) -> Simulation:
    """
    The simulate function runs one trajectory end to end: scenario, body, initial state,
    integration and diagnostics. A chart exit is reported through
    ``diagnostics.termination_reason``, never raised.

    :param run: RunConfig: Parsed config
    :return: Simulation
    """
    stepper = _stepper(run)
    scenario = scenario_from(run)
    params, eta, spin = body_from(run, scenario.dim)
    state = initial_state(run, scenario, params, eta, spin)
    field = dynamics.PhaseSpaceField(scenario.frame, params, stepper.backend)
    logger.info("simulating %s to t=%s", scenario.name, stepper.t_end)
    record = integrate.integrate(state, field, stepper)
    diagnostics = diagnose(record, scenario, params, stepper.backend)
    logger.info("simulation finished: %s", diagnostics.termination_reason)
    return Simulation(scenario, params, record, diagnostics)


def sweep_points(grid: SweepGrid) -> list[dict[str, float]]:
    names = list(grid.parameters)
    return [dict(zip(names, values)) for values in itertools.product(*grid.parameters.values())]


def apply_point(run: RunConfig, point: dict[str, float]) -> RunConfig:
    """
    Copy of ``run`` with one grid point's values substituted. The copy is validated again,
    so an out-of-range value raises :class:`ConfigError` naming its field.
    """
    data = run.model_dump(mode="json")
    for name, value in point.items():
        if name == "step":
            _stepper(run)
            data["stepper"]["step"] = value
        elif name == "radius":
            data["scenario"]["radius"] = value
        elif name in ("spin", "inertia"):
            block = data["body"]
            if block is None or block["points"] is not None:
                raise ConfigError(f"Sweeping '{name}' needs a direct (mass, inertia, spin) body",
                                  field="sweep.parameters")
            if name == "inertia":
                block["inertia"] = value
            else:
                components = [float(v) for v in _upper(block["spin"], scenario_from(run).dim, "body.spin")]
                components[0] = value
                block["spin"] = components
    return parse_config(data)


def _sweep_row(run: RunConfig, point: dict[str, float]) -> SweepRow:
    try:
        diagnostics = simulate(apply_point(run, point)).diagnostics
    except TangentBodyError as err:
        logger.warning("sweep point %s failed: %s", point, err)
        return SweepRow(parameters=point, status="failed", error=str(err))
    except NUMERICAL_ERRORS as err:
        logger.exception("sweep point %s failed", point)
        return SweepRow(parameters=point, status="failed", error=f"{type(err).__name__}: {err}")
    logger.info("sweep point %s: %s", point, diagnostics.termination_reason)
    return SweepRow(
        parameters=point,
        status=diagnostics.termination_reason,
        energy_drift_rel=diagnostics.energy_drift_rel,
        spin_norm_drift_rel=diagnostics.spin_norm_drift_rel,
        covariant_spin_residual=diagnostics.covariant_spin_residual,
        papapetrou_residual=diagnostics.papapetrou_residual,
        geodesic_curvature_mean=diagnostics.geodesic_curvature_mean,
    )


def sweep(run: RunConfig, jobs: int = 1) -> list[SweepRow]:
    """
    The sweep function simulates every point of the config's grid. Points are independent;
    with ``jobs > 1`` they run in a process pool, rows always come back in grid order.

    :param run: RunConfig: Parsed config with a ``sweep`` block
    :param jobs: int: Maximum number of worker processes
    :return: list[SweepRow]
    """
    if run.sweep is None:
        raise ConfigError(messages.EMPTY_GRID, field="sweep")
    points = sweep_points(run.sweep)
    if jobs <= 1:
        return [_sweep_row(run, point) for point in points]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_sweep_row, itertools.repeat(run, len(points)), points))
