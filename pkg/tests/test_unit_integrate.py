import numpy as np
import pytest

from src.conf.config import config
from src.entity.errors import NonConvergence, OutOfChart
from src.entity.models import BodyParams, BodyState, TerminationReason
from src.schemas.run import StepMethod, StepperConfig
from src.services import dynamics, integrate
from src.services.scenarios import builtin, geodesic_oracle
from tests.conftest import run_trajectory, state_from_velocity


GEODESIC_STARTS = {
    "sphere": ([np.pi / 2, 0.0], [0.6, 0.8]),
    "hyperbolic_upper_half": ([0.0, 1.0], [0.6, 0.8]),
    "flat_polar_2d": ([1.0, 0.0], [0.6, 0.8]),
    "flat_cartesian_2d": ([0.0, 0.0], [0.6, 0.8]),
}


def geodesic_error(name, method, step, t_end=2.0):
    scenario = builtin(name)
    params = BodyParams(1.0)
    position, velocity = GEODESIC_STARTS[name]
    start = state_from_velocity(scenario.frame, position, velocity, params=params)
    record = run_trajectory(scenario.frame, start, params, step, t_end, method=method)
    assert record.termination_reason == TerminationReason.completed
    exact = geodesic_oracle(scenario, start, t_end, params)
    return float(np.max(np.abs(record.final_state.position - exact)))


class TestFlatSteps:

    def setup_method(self):
        self.frame = builtin("flat_cartesian_2d").frame
        self.params = BodyParams(2.0, 1.0)
        self.state = BodyState([0.0, 0.0], [2.0, 1.0], [0.7])
        self.field = dynamics.PhaseSpaceField(self.frame, self.params)

    @pytest.mark.parametrize("method", list(StepMethod))
    def test_one_step_moves_at_constant_velocity(self, method):
        result = integrate.step(self.state, self.field, 0.1, method)
        np.testing.assert_allclose(result.state.position, [0.1, 0.05], rtol=1e-15, atol=1e-15)
        np.testing.assert_array_equal(result.state.momentum, self.state.momentum)
        np.testing.assert_array_equal(result.state.spin_upper, self.state.spin_upper)
        assert result.projection == 0.0

    def test_energy_is_exactly_constant(self):
        record = run_trajectory(self.frame, self.state, self.params, 0.1, 1.0)
        assert integrate.relative_drift(record.energies) == 0.0
        assert record.energies[0] == pytest.approx(1.25)

    def test_monitor_interval(self):
        record = run_trajectory(self.frame, self.state, self.params, 0.1, 1.0, monitor_every=3)
        assert len(record) == 5
        np.testing.assert_allclose(record.times, [0.0, 0.3, 0.6, 0.9, 1.0], atol=1e-12)

    def test_non_positive_step(self):
        with pytest.raises(ValueError):
            integrate.step(self.state, self.field, 0.0)


def test_step_times_shorten_last_step():
    times = integrate.step_times(StepperConfig(step=0.3, t_end=1.0))
    np.testing.assert_allclose(times, [0.0, 0.3, 0.6, 0.9, 1.0])
    assert times[-1] == 1.0


def test_step_times_exact_multiple():
    times = integrate.step_times(StepperConfig(step=0.1, t_end=1.0))
    assert len(times) == 11
    assert times[-1] == 1.0


@pytest.mark.parametrize("name", ["sphere", "hyperbolic_upper_half", "flat_polar_2d"])
def test_rk4_follows_geodesics_at_fourth_order(name):
    coarse = geodesic_error(name, StepMethod.rk4, 0.1)
    fine = geodesic_error(name, StepMethod.rk4, 0.05)
    assert fine < 1e-4
    assert 3.5 < integrate.observed_order(coarse, fine) < 4.5


def test_rk4_is_exact_on_flat_straight_lines():
    assert geodesic_error("flat_cartesian_2d", StepMethod.rk4, 0.1) < 1e-12


def test_full_sphere_period_with_small_step():
    scenario = builtin("sphere")
    params = BodyParams(1.0)
    start = state_from_velocity(scenario.frame, [np.pi / 2, 0.0], [0.6, 0.8], params=params)
    record = run_trajectory(scenario.frame, start, params, 1e-3, 2.0 * np.pi, monitor_every=1000)
    exact = geodesic_oracle(scenario, start, 2.0 * np.pi, params)
    np.testing.assert_allclose(exact, [np.pi / 2, 2.0 * np.pi], atol=1e-12)
    assert np.max(np.abs(record.final_state.position - exact)) < 1e-8


def test_implicit_midpoint_converges_at_second_order():
    coarse = geodesic_error("sphere", StepMethod.implicit_midpoint, 0.1)
    fine = geodesic_error("sphere", StepMethod.implicit_midpoint, 0.05)
    assert 3.5 < coarse / fine < 4.5


def test_sphere_energy_drift_is_small():
    frame = builtin("sphere").frame
    params = BodyParams(1.0, 0.5)
    start = state_from_velocity(frame, [1.2, 0.0], [0.3, 0.9], [0.4], params)
    record = run_trajectory(frame, start, params, 0.01, 2.0)
    assert integrate.relative_drift(record.energies) < 1e-7


def spinning_circle_drift(step):
    # s = 0.4 at speed 0.5 closes a circle of geodesic curvature 1.6 that stays clear of both poles
    frame = builtin("sphere").frame
    params = BodyParams(1.0, 0.5)
    start = state_from_velocity(frame, [np.pi / 2, 0.0], [0.0, 0.5], [0.4], params)
    record = run_trajectory(frame, start, params, step, 100.0)
    assert record.termination_reason == TerminationReason.completed
    return integrate.relative_drift(record.energies)


def test_rk4_energy_drift_shrinks_with_step():
    coarse = spinning_circle_drift(0.04)
    fine = spinning_circle_drift(0.02)
    assert 0.0 < fine < coarse
    assert 12.0 < coarse / fine < 48.0


def spinning_flat_3d(method, step=0.01):
    frame = builtin("flat_spherical_3d").frame
    params = BodyParams(1.0, 0.5)
    start = state_from_velocity(frame, [2.0, 1.0, 0.0], [0.3, 0.5, 0.4], [0.2, -0.1, 0.3], params)
    return run_trajectory(frame, start, params, step, 1.0, method=method)


def test_spin_norm_is_kept_by_rk4():
    record = spinning_flat_3d(StepMethod.rk4)
    assert integrate.relative_drift(record.spin_norms) < 1e-8
    assert record.max_projection < 1e-12


def test_spin_norm_is_kept_by_implicit_midpoint():
    record = spinning_flat_3d(StepMethod.implicit_midpoint)
    assert integrate.relative_drift(record.spin_norms) < 1e-10


def test_chart_exit_stops_in_order():
    frame = builtin("sphere").frame
    params = BodyParams(1.0)
    start = state_from_velocity(frame, [0.5, 0.0], [-1.0, 0.0], params=params)
    record = run_trajectory(frame, start, params, 0.01, 2.0)
    assert record.termination_reason == TerminationReason.chart_exit
    assert record.times[-1] == pytest.approx(0.49, abs=0.011)
    assert np.all(np.diff(record.times) > 0)
    assert 0.0 < record.final_state.position[0] < 0.02
    assert all(state.is_finite() for state in record.states)


def test_start_outside_chart():
    frame = builtin("sphere").frame
    field = dynamics.PhaseSpaceField(frame, BodyParams(1.0))
    with pytest.raises(OutOfChart):
        integrate.integrate(BodyState([0.0, 0.0], [0.0, 1.0]), field, StepperConfig(step=0.1, t_end=1.0))


def test_implicit_midpoint_non_convergence(monkeypatch):
    monkeypatch.setattr(config, "IMPLICIT_MAX_ITER", 1)
    frame = builtin("sphere").frame
    params = BodyParams(1.0, 0.5)
    start = state_from_velocity(frame, [1.2, 0.0], [0.3, 0.9], [0.4], params)
    with pytest.raises(NonConvergence):
        integrate.step(start, dynamics.PhaseSpaceField(frame, params), 0.1, StepMethod.implicit_midpoint)


def test_relative_drift():
    assert integrate.relative_drift([2.0, 2.1, 1.9]) == pytest.approx(0.05)
    assert integrate.relative_drift([0.0, 0.1, -0.05]) == pytest.approx(0.1)
    assert integrate.relative_drift([]) == 0.0


def test_observed_order():
    assert integrate.observed_order(16e-6, 1e-6) == pytest.approx(4.0)
    assert integrate.observed_order(9e-4, 1e-4, refinement=3.0) == pytest.approx(2.0)
