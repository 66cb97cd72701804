import csv
import json

import numpy as np
import pytest

from src.cli import main
from src.conf.config import config
from src.repository.outputs import SWEEP_COLUMNS, read_trajectory
from src.services import runner
from tests.conftest import flat_config, sphere_config


def write_config(tmp_path, data, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def run_cli(command, path, out_dir, *extra):
    return main([command, path, "--out-dir", str(out_dir), *extra])


@pytest.mark.parametrize("name", ["sphere(R=1)", "flat_polar_2d", "hyperbolic_upper_half"])
def test_geometry_check_passes(tmp_path, name):
    path = write_config(tmp_path, {"scenario": {"name": name}})
    assert run_cli("geometry-check", path, tmp_path / "out") == 0
    report = json.loads((tmp_path / "out" / "geometry_report.json").read_text())
    assert report["passed"] is True
    assert report["backend"] == "analytic"


def test_geometry_check_with_finite_differences(tmp_path):
    path = write_config(tmp_path, {"scenario": {"name": "sphere"}})
    code = run_cli("geometry-check", path, tmp_path, "--backend", "finite_difference")
    report = json.loads((tmp_path / "geometry_report.json").read_text())
    assert report["backend"] == "finite_difference"
    assert code == (0 if report["passed"] else 4)


def test_geometry_check_fails_with_tiny_tolerances(tmp_path):
    path = write_config(tmp_path, {"scenario": {"name": "sphere(R=2)"}})
    code = run_cli("geometry-check", path, tmp_path, "--backend", "finite_difference", "--tol-scale", "1e-20")
    assert code == 4


def test_unknown_scenario(tmp_path):
    path = write_config(tmp_path, {"scenario": {"name": "torus"}})
    assert run_cli("geometry-check", path, tmp_path) == 2


def test_invalid_json(tmp_path):
    path = tmp_path / "run.json"
    path.write_text("{not json")
    assert run_cli("simulate", str(path), tmp_path) == 2


def test_missing_config(tmp_path):
    assert run_cli("simulate", str(tmp_path / "absent.json"), tmp_path) == 2

def test_malformed_inline_radius(tmp_path):
    path = write_config(tmp_path, sphere_config(scenario={"name": "sphere(R=.)"}))
    assert run_cli("simulate", path, tmp_path) == 2


def test_unexpected_numerical_error(tmp_path, monkeypatch):
    def singular(run):
        raise np.linalg.LinAlgError("Singular matrix")

    monkeypatch.setattr(runner, "simulate", singular)
    assert run_cli("simulate", write_config(tmp_path, sphere_config()), tmp_path) == 5



def test_simulate_writes_outputs(tmp_path):
    path = write_config(tmp_path, flat_config())
    assert run_cli("simulate", path, tmp_path / "out") == 0

    header, data = read_trajectory(tmp_path / "out" / "trajectory.csv")
    assert header == ["t", "x1", "x2", "p1", "p2", "S12", "H", "spin_norm"]
    assert data.shape == (11, 8)
    assert data[-1, 0] == 1.0
    assert data[-1, 1] == pytest.approx(1.0)
    assert data[-1, 2] == pytest.approx(0.5)

    diagnostics = json.loads((tmp_path / "out" / "diagnostics.json").read_text())
    assert diagnostics["termination_reason"] == "completed"
    assert diagnostics["energy_drift_rel"] == 0.0


def test_simulate_is_bitwise_reproducible(tmp_path):
    path = write_config(tmp_path, sphere_config())
    assert run_cli("simulate", path, tmp_path / "first") == 0
    assert run_cli("simulate", path, tmp_path / "second") == 0
    first = (tmp_path / "first" / "trajectory.csv").read_bytes()
    assert first == (tmp_path / "second" / "trajectory.csv").read_bytes()


def test_chart_exit(tmp_path):
    data = sphere_config(body={"mass": 1.0}, initial={"position": [0.5, 0.0], "velocity": [-1.0, 0.0]},
                         stepper={"step": 0.01, "t_end": 2.0})
    assert run_cli("simulate", write_config(tmp_path, data), tmp_path) == 3
    diagnostics = json.loads((tmp_path / "diagnostics.json").read_text())
    assert diagnostics["termination_reason"] == "chart_exit"
    assert (tmp_path / "trajectory.csv").exists()


def test_validation_threshold(tmp_path):
    path = write_config(tmp_path, sphere_config(tolerances={"papapetrou": 1e-30}))
    assert run_cli("simulate", path, tmp_path) == 4
    assert run_cli("simulate", path, tmp_path, "--tol-scale", "1e30") == 0


def test_anisotropic_body(tmp_path):
    body = {"points": [{"mass": 1.0, "offset": [1.0, 0.0]}, {"mass": 1.0, "offset": [-1.0, 0.0]}],
            "angular_velocity": [1.0]}
    path = write_config(tmp_path, sphere_config(body=body))
    assert run_cli("simulate", path, tmp_path) == 2


def test_non_convergence(tmp_path, monkeypatch):
    monkeypatch.setattr(config, "IMPLICIT_MAX_ITER", 1)
    data = sphere_config(stepper={"method": "implicit_midpoint", "step": 0.01, "t_end": 0.1})
    assert run_cli("simulate", write_config(tmp_path, data), tmp_path) == 5


def test_empty_sweep_grid(tmp_path):
    path = write_config(tmp_path, sphere_config(sweep={"parameters": {}}))
    assert run_cli("sweep", path, tmp_path) == 2


def test_sweep_without_grid(tmp_path):
    path = write_config(tmp_path, sphere_config())
    assert run_cli("sweep", path, tmp_path) == 2


def read_summary(path):
    with path.open(newline="") as fh:
        return list(csv.DictReader(fh))


def test_sweep_over_spin(tmp_path):
    path = write_config(tmp_path, sphere_config(sweep={"parameters": {"spin": [-0.2, 0.0, 0.2]}}))
    assert run_cli("sweep", path, tmp_path) == 0
    rows = read_summary(tmp_path / "sweep_summary.csv")
    assert list(rows[0]) == ["spin", *SWEEP_COLUMNS]
    assert [float(row["spin"]) for row in rows] == [-0.2, 0.0, 0.2]
    curvature = [float(row["geodesic_curvature_mean"]) for row in rows]
    assert curvature[0] == pytest.approx(-curvature[2], abs=1e-8)
    assert curvature[1] == pytest.approx(0.0, abs=1e-8)
    assert curvature[2] < 0.0


def test_parallel_sweep_matches_sequential(tmp_path):
    grid = {"parameters": {"spin": [-0.1, 0.1], "step": [0.02, 0.01]}}
    path = write_config(tmp_path, sphere_config(sweep=grid))
    assert run_cli("sweep", path, tmp_path / "sequential") == 0
    assert run_cli("sweep", path, tmp_path / "parallel", "--jobs", "2") == 0
    sequential = (tmp_path / "sequential" / "sweep_summary.csv").read_bytes()
    assert sequential == (tmp_path / "parallel" / "sweep_summary.csv").read_bytes()


def test_sweep_survives_invalid_point(tmp_path):
    path = write_config(tmp_path, sphere_config(sweep={"parameters": {"step": [0.01, 0.0]}}))
    assert run_cli("sweep", path, tmp_path) == 0
    rows = read_summary(tmp_path / "sweep_summary.csv")
    assert [row["status"] for row in rows] == ["completed", "failed"]
    assert rows[1]["energy_drift_rel"] == ""
