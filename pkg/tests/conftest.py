import numpy as np
import pytest
from fastapi.testclient import TestClient

from main import app
from src.entity.models import BodyParams, BodyState, spin_matrix
from src.schemas.run import StepMethod, StepperConfig
from src.services import dynamics, geometry, integrate


def state_from_velocity(frame, position, velocity, spin_upper=None, params=BodyParams(1.0)) -> BodyState:
    """State with frame velocity ``velocity`` and spin given directly as upper-triangle components."""
    position = np.asarray(position, dtype=float)
    n = len(position)
    spin = spin_matrix(np.zeros(n * (n - 1) // 2) if spin_upper is None else spin_upper, n)
    gamma = geometry.connection_from_frame(frame, position).gamma
    p_frame = params.mass * np.asarray(velocity, dtype=float) + np.einsum("acd,cd->a", gamma, spin)
    return BodyState.from_spin_matrix(position, dynamics.coordinate_momentum(p_frame, frame, position), spin)


def run_trajectory(frame, state, params, step, t_end, method=StepMethod.rk4, monitor_every=1):
    field = dynamics.PhaseSpaceField(frame, params)
    stepper = StepperConfig(method=method, step=step, t_end=t_end, monitor_every=monitor_every)
    return integrate.integrate(state, field, stepper)


def sphere_config(**overrides) -> dict:
    data = {
        "scenario": {"name": "sphere(R=1)"},
        "body": {"mass": 1.0, "inertia": 0.5, "spin": [0.2]},
        "initial": {"position": [1.5707963267948966, 0.0], "velocity": [0.0, 1.0]},
        "stepper": {"method": "rk4", "step": 0.01, "t_end": 0.5, "monitor_every": 1},
    }
    data.update(overrides)
    return data


def flat_config(**overrides) -> dict:
    data = {
        "scenario": {"name": "flat_cartesian_2d"},
        "body": {"mass": 2.0, "inertia": 1.0, "spin": [0.7]},
        "initial": {"position": [0.0, 0.0], "momentum": [2.0, 1.0]},
        "stepper": {"method": "rk4", "step": 0.1, "t_end": 1.0, "monitor_every": 1},
    }
    data.update(overrides)
    return data


@pytest.fixture(scope="module")
def client():
    yield TestClient(app)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240601)
