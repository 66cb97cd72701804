import csv
import logging
from pathlib import Path

import numpy as np

from src.entity.models import TrajectoryRecord, spin_pairs
from src.schemas.report import Diagnostics, GeometryReport, SweepRow

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ("status", "energy_drift_rel", "spin_norm_drift_rel", "covariant_spin_residual",
                 "papapetrou_residual", "geodesic_curvature_mean", "error")


def format_value(value) -> str:
    """17 significant digits, enough to round-trip a double."""
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    return f"{float(value):.17g}"


def trajectory_columns(n: int) -> list[str]:
    """
    The trajectory_columns function returns the trajectory CSV header:
    ``t, x1..xn, p1..pn, S12, S13, ..., H, spin_norm`` (labels are 1-based).

    :param n: int: Manifold dimension
    :return: list[str]
    """
    rows, cols = spin_pairs(n)
    return (["t"] + [f"x{i + 1}" for i in range(n)] + [f"p{i + 1}" for i in range(n)]
            + [f"S{a + 1}{b + 1}" for a, b in zip(rows, cols)] + ["H", "spin_norm"])


def trajectory_rows(record: TrajectoryRecord) -> list[list[float]]:
    return [[s.t, *s.state.position, *s.state.momentum, *s.state.spin_upper, s.energy, s.spin_norm]
            for s in record.samples]


def _prepare(path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def write_trajectory(record: TrajectoryRecord, path) -> Path:
    """
    The write_trajectory function writes one CSV row per kept sample.

    :param record: TrajectoryRecord: Integrated trajectory
    :param path: str | Path: Destination file, parent directories are created
    :return: The written path
    """
    path = _prepare(path)
    n = record.final_state.dim
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(trajectory_columns(n))
        for row in trajectory_rows(record):
            writer.writerow([format_value(v) for v in row])
    logger.info("trajectory written to %s (%d rows)", path, len(record))
    return path


def read_trajectory(path) -> tuple[list[str], np.ndarray]:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = np.array([[float(v) for v in row] for row in reader])
    return header, data


def write_diagnostics(diagnostics: Diagnostics, path) -> Path:
    path = _prepare(path)
    path.write_text(diagnostics.model_dump_json(indent=2))
    logger.info("diagnostics written to %s", path)
    return path


def write_report(report: GeometryReport, path) -> Path:
    path = _prepare(path)
    path.write_text(report.model_dump_json(indent=2))
    logger.info("geometry report written to %s", path)
    return path


def write_sweep_summary(rows: list[SweepRow], path) -> Path:
    """
    The write_sweep_summary function writes one CSV row per grid point: the swept
    parameters (in grid order) followed by the measured quantities.

    :param rows: list[SweepRow]: Sweep results in grid order
    :param path: str | Path: Destination file
    :return: The written path
    """
    path = _prepare(path)
    parameter_names = list(rows[0].parameters) if rows else []
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(parameter_names + list(SWEEP_COLUMNS))
        for row in rows:
            values = row.model_dump()
            writer.writerow([format_value(row.parameters[name]) for name in parameter_names]
                            + [format_value(values[column]) for column in SWEEP_COLUMNS])
    logger.info("sweep summary written to %s (%d rows)", path, len(rows))
    return path
