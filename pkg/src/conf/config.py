import logging

from pydantic import ConfigDict, field_validator
from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    CHART_MARGIN: float = 1e-6
    FD_STEP_SCALE: float | None = None
    CENTER_OF_MASS_TOL: float = 1e-10
    ISOTROPY_TOL: float = 1e-10
    IMPLICIT_TOL: float = 1e-13
    IMPLICIT_MAX_ITER: int = 50
    GEOMETRY_GRID: int = 5
    CURVATURE_TOL: float = 1e-6
    FLAT_CURVATURE_TOL: float = 1e-9
    STRUCTURE_TOL: float = 1e-10
    SYMMETRY_TOL: float = 1e-8
    LOG_LEVEL: str = "INFO"
    OUT_DIR: str = "out"

    @field_validator("LOG_LEVEL")
    @classmethod
    def validate_log_level(cls, v):
        if logging.getLevelName(v.upper()) not in (logging.DEBUG, logging.INFO, logging.WARNING,
                                                   logging.ERROR, logging.CRITICAL):
            raise ValueError("Invalid log level")
        return v.upper()

    @field_validator("FD_STEP_SCALE")
    @classmethod
    def validate_step_scale(cls, v):
        if v is not None and v <= 0:
            raise ValueError("FD_STEP_SCALE must be positive")
        return v

    model_config = ConfigDict(extra="ignore", env_file=".env", env_file_encoding="utf-8",
                              env_prefix="TANGENT_BODY_")


config = Settings()
