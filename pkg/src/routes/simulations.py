from fastapi import APIRouter, HTTPException, Query, status

from src.entity.errors import ConfigError, TangentBodyError
from src.entity.models import DerivativeBackend, TerminationReason
from src.repository.outputs import trajectory_columns, trajectory_rows
from src.schemas.report import GeometryReport, SimulationResponse, SweepResponse
from src.schemas.run import RunConfig
from src.services import runner

router = APIRouter(tags=["simulations"])


def _http_error(err: TangentBodyError) -> HTTPException:
    if isinstance(err, ConfigError):
        return HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=str(err))
    return HTTPException(status_code=status.HTTP_500_INTERNAL_SERVER_ERROR, detail=str(err))


@router.post("/geometry-check", response_model=GeometryReport)
def geometry_check(body: RunConfig,
                   backend: DerivativeBackend = Query(DerivativeBackend.analytic),
                   tol_scale: float = Query(1.0, gt=0)):
    """
    The geometry_check function runs the structure-equation and curvature checks for the
    config's scenario on its chart grid.

    :param body: RunConfig: Run config; only ``scenario`` and ``tolerances`` are read
    :param backend: DerivativeBackend: Derivative backend under test
    :param tol_scale: float: Multiplies every threshold
    :return: GeometryReport
    """
    try:
        return runner.geometry_check(body, backend, tol_scale)
    except TangentBodyError as err:
        raise _http_error(err)


@router.post("/simulate", response_model=SimulationResponse)
def simulate(body: RunConfig):
    """
    The simulate function integrates one trajectory and returns its samples with the
    diagnostics. A chart exit answers 409 with the partial result as ``detail``.

    :param body: RunConfig: Run config with body, initial state and stepper
    :return: SimulationResponse
    """
    try:
        simulation = runner.simulate(body)
    except TangentBodyError as err:
        raise _http_error(err)
    response = SimulationResponse(
        diagnostics=simulation.diagnostics,
        trajectory=trajectory_rows(simulation.record),
        columns=trajectory_columns(simulation.scenario.dim),
    )
    if simulation.diagnostics.termination_reason == TerminationReason.chart_exit:
        raise HTTPException(status_code=status.HTTP_409_CONFLICT, detail=response.model_dump(mode="json"))
    return response


@router.post("/sweep", response_model=SweepResponse)
def sweep(body: RunConfig, jobs: int = Query(1, ge=1, le=64)):
    """
    The sweep function simulates every point of the config's parameter grid. Points that fail
    come back as rows with status ``failed``.

    :param body: RunConfig: Run config with a ``sweep`` block
    :param jobs: int: Worker processes
    :return: SweepResponse
    """
    try:
        return SweepResponse(rows=runner.sweep(body, jobs))
    except TangentBodyError as err:
        raise _http_error(err)
