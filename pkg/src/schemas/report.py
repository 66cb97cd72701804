from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

from src.entity.models import TerminationReason


class CheckResult(BaseModel):
    name: str
    point: Optional[list[float]] = None
    measured: Optional[float] = None
    value: float
    threshold: float
    passed: bool


class GeometryReport(BaseModel):
    scenario: str
    backend: str
    passed: bool
    failures: int = Field(ge=0)
    checks: list[CheckResult]


class Diagnostics(BaseModel):
    energy_drift_rel: float
    spin_norm_drift_rel: float
    covariant_spin_residual: Optional[float]
    papapetrou_residual: Optional[float]
    covariant_spin_residual_coarse: Optional[float] = None
    covariant_spin_residual_ratio: Optional[float] = None
    papapetrou_residual_coarse: Optional[float] = None
    papapetrou_residual_ratio: Optional[float] = None
    geodesic_curvature_mean: Optional[float]
    geodesic_curvature_std: Optional[float]
    termination_reason: TerminationReason
    spin_energy: Optional[float] = None
    closure: Optional[float] = None
    oracle_error: Optional[float] = None
    max_projection: float = 0.0
    samples: int = 0
    final_time: float = 0.0
    model_config = ConfigDict(use_enum_values=True)


class SweepRow(BaseModel):
    parameters: dict[str, float]
    status: Literal["completed", "chart_exit", "failed"]
    energy_drift_rel: Optional[float] = None
    spin_norm_drift_rel: Optional[float] = None
    covariant_spin_residual: Optional[float] = None
    papapetrou_residual: Optional[float] = None
    geodesic_curvature_mean: Optional[float] = None
    error: Optional[str] = None


class SimulationResponse(BaseModel):
    diagnostics: Diagnostics
    trajectory: list[list[float]]
    columns: list[str]


class SweepResponse(BaseModel):
    rows: list[SweepRow]
