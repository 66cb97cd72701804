import enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.conf import messages
from src.conf.config import config
from src.entity.models import DerivativeBackend


class StepMethod(str, enum.Enum):
    rk4 = "rk4"
    implicit_midpoint = "implicit_midpoint"


class ScenarioSchema(BaseModel):
    name: str = Field(min_length=1)
    radius: Optional[float] = Field(default=None, gt=0)
    margin: Optional[float] = Field(default=None, gt=0)
    model_config = ConfigDict(extra="forbid")


class MassPointSchema(BaseModel):
    mass: float = Field(gt=0)
    offset: list[float] = Field(min_length=2)


class BodySchema(BaseModel):
    """
    Either a mass-point list (spin follows from ``S = I eta``) or direct ``(m, I, S)``.

    ``spin`` and ``angular_velocity`` hold strict upper-triangle components in lexicographic order.
    """

    points: Optional[list[MassPointSchema]] = None
    angular_velocity: Optional[list[float]] = None
    mass: Optional[float] = Field(default=None, gt=0)
    inertia: float = Field(default=0.0, ge=0)
    spin: Optional[list[float]] = None
    model_config = ConfigDict(extra="forbid")

    @model_validator(mode="after")
    def exactly_one_body(self):
        if (self.points is None) == (self.mass is None):
            raise ValueError("body needs exactly one of 'points' or 'mass'")
        if self.points is not None and (self.spin is not None or self.inertia):
            raise ValueError("'spin' and 'inertia' are derived from 'points'")
        if self.points is None and self.angular_velocity is not None:
            raise ValueError("'angular_velocity' requires 'points'; give 'spin' directly")
        return self


class InitialSchema(BaseModel):
    """Initial position with either frame-component velocity ``xdot^a`` or coordinate momentum ``p_i``."""

    position: list[float] = Field(min_length=2)
    velocity: Optional[list[float]] = None
    momentum: Optional[list[float]] = None
    model_config = ConfigDict(extra="forbid")

    @model_validator(mode="after")
    def exactly_one_rate(self):
        if (self.velocity is None) == (self.momentum is None):
            raise ValueError("initial needs exactly one of 'velocity' or 'momentum'")
        rate = self.velocity if self.velocity is not None else self.momentum
        if len(rate) != len(self.position):
            raise ValueError(messages.SHAPE_MISMATCH)
        return self


class StepperConfig(BaseModel):
    method: StepMethod = StepMethod.rk4
    step: float = Field(gt=0)
    t_end: float = Field(gt=0)
    monitor_every: int = Field(default=1, ge=1)
    backend: DerivativeBackend = DerivativeBackend.analytic
    model_config = ConfigDict(extra="forbid")


class OutputSchema(BaseModel):
    trajectory: str = "trajectory.csv"
    diagnostics: str = "diagnostics.json"
    report: str = "geometry_report.json"
    summary: str = "sweep_summary.csv"


class TolerancesSchema(BaseModel):
    """Check thresholds; the validation limits are only enforced when set."""

    curvature: float = Field(default_factory=lambda: config.CURVATURE_TOL, gt=0)
    flat_curvature: float = Field(default_factory=lambda: config.FLAT_CURVATURE_TOL, gt=0)
    structure: float = Field(default_factory=lambda: config.STRUCTURE_TOL, gt=0)
    symmetry: float = Field(default_factory=lambda: config.SYMMETRY_TOL, gt=0)
    covariant_spin: Optional[float] = Field(default=None, gt=0)
    papapetrou: Optional[float] = Field(default=None, gt=0)
    energy_drift: Optional[float] = Field(default=None, gt=0)

    def scaled(self, factor: float) -> "TolerancesSchema":
        values = {key: (value * factor if value is not None else None)
                  for key, value in self.model_dump().items()}
        return TolerancesSchema(**values)


SWEEP_PARAMETERS = ("spin", "step", "radius", "inertia")


class SweepGrid(BaseModel):
    parameters: dict[str, list[float]]

    @field_validator("parameters")
    @classmethod
    def validate_grid(cls, v):
        if not v or any(not values for values in v.values()):
            raise ValueError(messages.EMPTY_GRID)
        if len(v) > 2:
            raise ValueError("Sweep grid spans at most 2 parameters")
        unknown = set(v) - set(SWEEP_PARAMETERS)
        if unknown:
            raise ValueError(f"Unknown sweep parameter(s): {sorted(unknown)}")
        return v


class RunConfig(BaseModel):
    scenario: ScenarioSchema
    body: Optional[BodySchema] = None
    initial: Optional[InitialSchema] = None
    stepper: Optional[StepperConfig] = None
    outputs: OutputSchema = Field(default_factory=OutputSchema)
    tolerances: TolerancesSchema = Field(default_factory=TolerancesSchema)
    sweep: Optional[SweepGrid] = None
