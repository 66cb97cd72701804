from src.conf import messages
from tests.conftest import flat_config, sphere_config


def test_healthchecker(client):
    response = client.get("api/healthchecker")
    assert response.status_code == 200, response.text
    data = response.json()
    assert data["message"] == "Welcome to tangent-body!"
    assert "sphere" in data["scenarios"]


def test_geometry_check(client):
    response = client.post("api/geometry-check", json={"scenario": {"name": "sphere(R=2)"}})
    assert response.status_code == 200, response.text
    data = response.json()
    assert data["passed"] is True
    assert data["backend"] == "analytic"
    assert data["failures"] == 0


def test_geometry_check_finite_differences_with_tiny_tolerances(client):
    response = client.post("api/geometry-check", params={"backend": "finite_difference", "tol_scale": 1e-20},
                           json={"scenario": {"name": "sphere"}})
    assert response.status_code == 200, response.text
    data = response.json()
    assert data["passed"] is False
    assert data["failures"] > 0


def test_unknown_scenario(client):
    response = client.post("api/geometry-check", json={"scenario": {"name": "torus"}})
    assert response.status_code == 422, response.text
    assert response.json()["detail"].startswith(messages.UNKNOWN_SCENARIO)


def test_simulate(client):
    response = client.post("api/simulate", json=flat_config())
    assert response.status_code == 200, response.text
    data = response.json()
    assert data["columns"] == ["t", "x1", "x2", "p1", "p2", "S12", "H", "spin_norm"]
    assert len(data["trajectory"]) == 11
    assert data["diagnostics"]["termination_reason"] == "completed"


def test_simulate_rejects_ambiguous_body(client):
    response = client.post("api/simulate", json=flat_config(body={"mass": 1.0, "points": []}))
    assert response.status_code == 422, response.text


def test_simulate_chart_exit(client):
    data = sphere_config(body={"mass": 1.0}, initial={"position": [0.5, 0.0], "velocity": [-1.0, 0.0]},
                         stepper={"step": 0.01, "t_end": 2.0})
    response = client.post("api/simulate", json=data)
    assert response.status_code == 409, response.text
    detail = response.json()["detail"]
    assert detail["diagnostics"]["termination_reason"] == "chart_exit"
    assert len(detail["trajectory"]) == detail["diagnostics"]["samples"]


def test_simulate_wrong_spin_length(client):
    data = sphere_config(body={"mass": 1.0, "inertia": 0.5, "spin": [0.2, 0.1]})
    response = client.post("api/simulate", json=data)
    assert response.status_code == 422, response.text


def test_sweep(client):
    response = client.post("api/sweep", json=sphere_config(sweep={"parameters": {"spin": [-0.2, 0.2]}}))
    assert response.status_code == 200, response.text
    rows = response.json()["rows"]
    assert [row["parameters"]["spin"] for row in rows] == [-0.2, 0.2]
    assert rows[0]["geodesic_curvature_mean"] > 0.0
    assert rows[1]["geodesic_curvature_mean"] < 0.0


def test_sweep_empty_grid(client):
    response = client.post("api/sweep", json=sphere_config(sweep={"parameters": {}}))
    assert response.status_code == 422, response.text


def test_malformed_inline_radius(client):
    response = client.post("api/geometry-check", json={"scenario": {"name": "sphere(R=.)"}})
    assert response.status_code == 422, response.text
