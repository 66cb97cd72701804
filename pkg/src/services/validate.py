"""
Post-hoc checks of the derived laws along sampled trajectories.

Time derivatives are second-order central differences at interior samples only; the
formula allows for a shortened final interval.
"""
import logging
from typing import NamedTuple

import numpy as np

from src.entity.errors import DimensionMismatch, TooFewSamples
from src.entity.models import BodyParams, ConnectionCoeffs, DerivativeBackend, FrameField, TrajectoryRecord
from src.services import dynamics, geometry

logger = logging.getLogger(__name__)


class ForceProfile(NamedTuple):
    times: np.ndarray
    speed: np.ndarray
    longitudinal: np.ndarray
    transverse: np.ndarray


def _require(traj: TrajectoryRecord, count: int) -> None:
    if len(traj) < count:
        raise TooFewSamples(samples=len(traj), required=count)


def central_rates(times: np.ndarray, values: np.ndarray) -> np.ndarray:
    """
    Second-order derivative estimates at ``times[1:-1]`` for samples stacked on axis 0.

    :param times: np.ndarray: Strictly increasing sample times
    :param values: np.ndarray: Samples, first axis matching ``times``
    :return: np.ndarray with one row fewer at each end
    """
    values = np.asarray(values, dtype=float)
    h1 = np.diff(times)[:-1]
    h2 = np.diff(times)[1:]
    shape = (-1,) + (1,) * (values.ndim - 1)
    back = (-h2 / (h1 * (h1 + h2))).reshape(shape)
    mid = ((h2 - h1) / (h1 * h2)).reshape(shape)
    ahead = (h1 / (h2 * (h1 + h2))).reshape(shape)
    return back * values[:-2] + mid * values[1:-1] + ahead * values[2:]


def _connections(traj: TrajectoryRecord, frame: FrameField, backend: DerivativeBackend) -> list[np.ndarray]:
    return [geometry.connection_from_frame(frame, s.position, backend).gamma for s in traj.states]


def _velocities(traj: TrajectoryRecord, frame: FrameField, gammas: list[np.ndarray],
                params: BodyParams) -> np.ndarray:
    return np.stack([dynamics.velocity_from_momenta(s, frame, ConnectionCoeffs(g), params)
                     for s, g in zip(traj.states, gammas)])


def covariant_spin_residual(traj: TrajectoryRecord, frame: FrameField, params: BodyParams,
                            backend: DerivativeBackend = DerivativeBackend.analytic) -> float:
    """
    The covariant_spin_residual function measures ``max |DS_ab/dt|`` over interior samples,
    ``DS_ab/dt = dS_ab/dt + xdot^c (gamma_cad S_db + gamma_cbd S_ad)``.

    :param traj: TrajectoryRecord: At least three samples
    :param frame: FrameField: Manifold description
    :param params: BodyParams: Mass and inertia, for the velocity reconstruction
    :param backend: DerivativeBackend: Source of the connection
    :return: float
    """
    _require(traj, 3)
    gammas = _connections(traj, frame, backend)
    xdot = _velocities(traj, frame, gammas, params)
    spins = np.stack([s.spin for s in traj.states])
    rates = central_rates(traj.times, spins)
    residual = 0.0
    for k in range(1, len(traj) - 1):
        generator = np.einsum("c,cab->ab", xdot[k], gammas[k])
        transport = generator @ spins[k] - spins[k] @ generator
        residual = max(residual, float(np.max(np.abs(rates[k - 1] + transport))))
    return residual


def _covariant_acceleration(traj: TrajectoryRecord, gammas: list[np.ndarray], xdot: np.ndarray) -> np.ndarray:
    rates = central_rates(traj.times, xdot)
    interior = range(1, len(traj) - 1)
    return np.stack([rates[k - 1] + np.einsum("c,cab,b->a", xdot[k], gammas[k], xdot[k]) for k in interior])


def papapetrou_residual(traj: TrajectoryRecord, frame: FrameField, params: BodyParams,
                        backend: DerivativeBackend = DerivativeBackend.analytic) -> float:
    """
    The papapetrou_residual function measures ``max |m D xdot_a/dt - R_cdab xdot^b S_cd|``
    over interior samples, with ``xdot`` reconstructed from the momenta.

    :param traj: TrajectoryRecord: At least three samples
    :param frame: FrameField: Manifold description
    :param params: BodyParams: Mass and inertia
    :param backend: DerivativeBackend: Source of connection and curvature
    :return: float
    """
    _require(traj, 3)
    gammas = _connections(traj, frame, backend)
    xdot = _velocities(traj, frame, gammas, params)
    acceleration = _covariant_acceleration(traj, gammas, xdot)
    residual = 0.0
    for k in range(1, len(traj) - 1):
        state = traj.states[k]
        riemann = geometry.curvature_from_connection(frame, state.position, backend).riemann
        force = dynamics.papapetrou_force(riemann, xdot[k], state.spin)
        residual = max(residual, float(np.max(np.abs(params.mass * acceleration[k - 1] - force))))
    return residual


def force_profile(traj: TrajectoryRecord, frame: FrameField, params: BodyParams,
                  backend: DerivativeBackend = DerivativeBackend.analytic) -> ForceProfile:
    """
    Measured force ``m D xdot/dt`` at interior samples, split along ``xdot`` and along
    ``J xdot`` (``xdot`` turned by a quarter turn from frame axis 1 towards axis 2). Two-dimensional only.
    """
    if frame.dim != 2:
        raise DimensionMismatch(dim=frame.dim, required=2)
    _require(traj, 3)
    gammas = _connections(traj, frame, backend)
    xdot = _velocities(traj, frame, gammas, params)
    force = params.mass * _covariant_acceleration(traj, gammas, xdot)
    v = xdot[1:-1]
    speed = np.linalg.norm(v, axis=1)
    normal = np.stack([-v[:, 1], v[:, 0]], axis=1) / speed[:, None]
    return ForceProfile(
        times=traj.times[1:-1],
        speed=speed,
        longitudinal=np.einsum("ka,ka->k", force, v) / speed,
        transverse=np.einsum("ka,ka->k", force, normal),
    )


def speed_profile(traj: TrajectoryRecord, frame: FrameField, params: BodyParams) -> np.ndarray:
    """Frame norm of the reconstructed velocity ``|xdot|`` at every sample."""
    gammas = _connections(traj, frame, DerivativeBackend.analytic)
    return np.linalg.norm(_velocities(traj, frame, gammas, params), axis=1)


def geodesic_curvature_profile(traj: TrajectoryRecord, frame: FrameField) -> np.ndarray:
    """
    The geodesic_curvature_profile function returns the signed geodesic curvature of the
    center-of-mass path, ``kappa = (v^1 a^2 - v^2 a^1) / |v|^3``.

    Only positions are used: ``v^a = e^a_i dx^i/dt`` from differenced positions and
    ``a = Dv/dt`` from differenced ``v`` plus the connection term, so the profile covers
    ``times[2:-2]``.

    :param traj: TrajectoryRecord: At least five samples
    :param frame: FrameField: Two-dimensional manifold description
    :return: np.ndarray
    """
    if frame.dim != 2:
        raise DimensionMismatch(dim=frame.dim, required=2)
    _require(traj, 5)
    times = traj.times
    positions = np.stack([s.position for s in traj.states])
    coordinate_velocity = central_rates(times, positions)
    inner = positions[1:-1]
    v = np.stack([geometry.frame_matrices(frame, x)[0] @ u for x, u in zip(inner, coordinate_velocity)])
    rates = central_rates(times[1:-1], v)
    profile = []
    for k in range(1, len(v) - 1):
        gamma = geometry.connection_from_frame(frame, inner[k]).gamma
        a = rates[k - 1] + np.einsum("c,cab,b->a", v[k], gamma, v[k])
        profile.append((v[k, 0] * a[1] - v[k, 1] * a[0]) / np.linalg.norm(v[k]) ** 3)
    logger.debug("geodesic curvature profile over %d samples", len(profile))
    return np.array(profile)
