"""
Mechanics of the tangent rigid body.

Evolved variables are ``(x^i, p_i, S_ab)``: the coordinate momenta ``p_i`` Poisson-commute
with each other and with the spin, so ``(x, p)`` obey canonical Hamilton equations while
``S`` follows the rotation-algebra bracket. Frame momenta ``p_a = e^i_a p_i`` are derived
on demand.

The kinetic Lagrangian pairs the rotational term over both antisymmetric indices,
``L = m/2 |xdot|^2 + I/2 sum_ab (eta_ab + gamma_cab xdot^c)^2``, so that
``S_ab = dL/d eta_ab = I (eta_ab + gamma_cab xdot^c)`` and
``p_a = dL/d xdot^a = m xdot_a + gamma_acd S_cd`` hold verbatim.
"""
import logging
from dataclasses import dataclass

import numpy as np

from src.entity.errors import ConfigError, ShapeMismatch
from src.entity.models import (AngularVelocity, BodyParams, BodyState, ConnectionCoeffs, DerivativeBackend,
                               FrameField, StateDerivative)
from src.services import geometry

logger = logging.getLogger(__name__)


def _gamma(frame: FrameField, x: np.ndarray, gamma: ConnectionCoeffs | None,
           backend: DerivativeBackend = DerivativeBackend.analytic) -> np.ndarray:
    if gamma is None:
        gamma = geometry.connection_from_frame(frame, x, backend)
    return gamma.gamma


def _eta(eta) -> np.ndarray:
    return eta.eta if isinstance(eta, AngularVelocity) else AngularVelocity(eta).eta


def frame_momentum(state: BodyState, frame: FrameField) -> np.ndarray:
    """``p_a = e^i_a p_i``."""
    _, inverse = geometry.frame_matrices(frame, state.position)
    return inverse.T @ state.momentum


def coordinate_momentum(momentum: np.ndarray, frame: FrameField, x) -> np.ndarray:
    """``p_i = e^a_i p_a``, the inverse of :func:`frame_momentum`."""
    coframe, _ = geometry.frame_matrices(frame, x)
    return coframe.T @ np.asarray(momentum, dtype=float)


def material_velocity(eta, xdot: np.ndarray, gamma: ConnectionCoeffs, r: np.ndarray) -> np.ndarray:
    """
    Covariant time derivative of a body point's frame components,
    ``rdot^a = (eta_ba + xdot^c gamma_cba) r^b``.

    :param eta: AngularVelocity | np.ndarray: Angular velocity ``eta_ab``
    :param xdot: np.ndarray: Frame components of the center-of-mass velocity
    :param gamma: ConnectionCoeffs: Connection at the center of mass
    :param r: np.ndarray: Frame components of the point's offset
    :return: np.ndarray
    """
    generator = _eta(eta) + gamma.form(np.asarray(xdot, dtype=float))
    return np.asarray(r, dtype=float) @ generator


def lagrangian(xdot: np.ndarray, eta, gamma: ConnectionCoeffs, params: BodyParams) -> float:
    """
    The lagrangian function returns the kinetic energy
    ``m/2 |xdot|^2 + I/2 sum_ab (eta_ab + gamma_cab xdot^c)^2``.

    :param xdot: np.ndarray: Frame components of the velocity
    :param eta: AngularVelocity | np.ndarray: Angular velocity
    :param gamma: ConnectionCoeffs: Connection at the current point
    :param params: BodyParams: Mass and scalar inertia
    :return: float
    """
    xdot = np.asarray(xdot, dtype=float)
    rotation = _eta(eta) + gamma.form(xdot)
    return float(0.5 * params.mass * xdot @ xdot + 0.5 * params.inertia * np.sum(rotation ** 2))


def momenta_from_velocities(position, xdot: np.ndarray, eta, frame: FrameField, params: BodyParams,
                            gamma: ConnectionCoeffs | None = None) -> BodyState:
    """
    The momenta_from_velocities function performs the Legendre map from velocities to momenta.

    ``S_ab = I (eta_ab + gamma_cab xdot^c)`` and
    ``p_a = (m delta_ab + I gamma_acd gamma_bcd) xdot^b + I gamma_acd eta_cd = m xdot_a + gamma_acd S_cd``,
    returned as coordinate components ``p_i = e^a_i p_a``.

    :param position: ChartPoint: Center-of-mass coordinates
    :param xdot: np.ndarray: Frame components of the velocity
    :param eta: AngularVelocity | np.ndarray: Angular velocity
    :param frame: FrameField: Manifold description
    :param params: BodyParams: Mass and scalar inertia
    :param gamma: ConnectionCoeffs | None: Connection at ``position`` (computed when omitted)
    :return: BodyState at ``position`` with the corresponding momenta and spin
    """
    position = np.asarray(position, dtype=float)
    xdot = np.asarray(xdot, dtype=float)
    g = _gamma(frame, position, gamma)
    spin = params.inertia * (_eta(eta) + np.einsum("c,cab->ab", xdot, g))
    p_frame = params.mass * xdot + np.einsum("acd,cd->a", g, spin)
    return BodyState.from_spin_matrix(position, coordinate_momentum(p_frame, frame, position), spin)


def kinetic_momentum(state: BodyState, frame: FrameField, gamma: ConnectionCoeffs | None = None) -> np.ndarray:
    """``p_a - gamma_acd S_cd``, which equals ``m xdot_a``."""
    g = _gamma(frame, state.position, gamma)
    return frame_momentum(state, frame) - np.einsum("acd,cd->a", g, state.spin)


def velocity_from_momenta(state: BodyState, frame: FrameField, gamma: ConnectionCoeffs | None,
                          params: BodyParams) -> np.ndarray:
    """``xdot^a = delta^ab (p_b - gamma_bcd S_cd) / m``."""
    return kinetic_momentum(state, frame, gamma) / params.mass


def angular_velocity(state: BodyState, xdot: np.ndarray, frame: FrameField, params: BodyParams,
                     gamma: ConnectionCoeffs | None = None) -> AngularVelocity:
    """``I eta_ab = S_ab - gamma_cab xdot^c``; only defined for ``I > 0``."""
    if params.inertia == 0:
        raise ConfigError("Angular velocity is undefined for a body without inertia", field="inertia")
    g = _gamma(frame, state.position, gamma)
    return AngularVelocity(state.spin / params.inertia - np.einsum("c,cab->ab", xdot, g))


def hamiltonian(state: BodyState, frame: FrameField, gamma: ConnectionCoeffs | None,
                params: BodyParams) -> float:
    """
    The hamiltonian function returns ``H = |p_a - gamma_acd S_cd|^2 / 2m``.

    The constant ``S^2 / 2I`` term is left out of the evolved Hamiltonian; see
    :func:`spin_energy`.

    :param state: BodyState: Phase-space point
    :param frame: FrameField: Manifold description
    :param gamma: ConnectionCoeffs | None: Connection at the state's position
    :param params: BodyParams: Mass and scalar inertia
    :return: float
    """
    kinetic = kinetic_momentum(state, frame, gamma)
    return float(kinetic @ kinetic / (2.0 * params.mass))


def spin_energy(state: BodyState, params: BodyParams) -> float | None:
    """``S^2 / 2I`` with ``S^2 = sum_ab S_ab S_ab``; ``None`` when ``I = 0`` but the spin is not zero."""
    if not np.any(state.spin_upper):
        return 0.0
    if params.inertia == 0:
        return None
    return state.spin_norm / params.inertia


def spin_generator(n: int, a: int, b: int) -> np.ndarray:
    """Coefficient matrix ``A`` with ``sum_ij A_ij S_ij = S_ab`` (zero-based labels)."""
    out = np.zeros((n, n))
    out[a, b] += 0.5
    out[b, a] -= 0.5
    return out


def spin_bracket(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """
    The spin_bracket function extends
    ``[S_ab, S_cd] = 1/2 (d_ac S_bd + d_bd S_ac - d_ad S_bc - d_bc S_ad)`` bilinearly.

    With ``F_A = sum_ij A_ij S_ij`` the bracket of two linear spin functions is again linear,
    ``[F_A, F_B] = F_C`` with ``C = BA - AB``.

    :param a: np.ndarray: Antisymmetric coefficient matrix
    :param b: np.ndarray: Antisymmetric coefficient matrix of the same size
    :return: Antisymmetric coefficient matrix ``C``
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape != b.shape:
        raise ShapeMismatch(left=a.shape, right=b.shape)
    return b @ a - a @ b


def spin_poisson_bracket(grad_f: np.ndarray, grad_g: np.ndarray, spin: np.ndarray) -> float:
    """Bracket of two spin functions from their gradients ``df/dS_ab``, evaluated at ``spin``."""
    return float(np.sum(spin_bracket(grad_f, grad_g) * spin))


def spin_rate(state: BodyState, frame: FrameField, gamma: ConnectionCoeffs | None,
              params: BodyParams) -> np.ndarray:
    """
    ``dS_ab/dt = -xdot^c (gamma_cad S_db + gamma_cbd S_ad)``: the spin is parallel-transported
    along the center-of-mass path.
    """
    g = _gamma(frame, state.position, gamma)
    xdot = velocity_from_momenta(state, frame, ConnectionCoeffs(g), params)
    generator = np.einsum("c,cab->ab", xdot, g)
    spin = state.spin
    return -(generator @ spin - spin @ generator)


def spin_rate_from_bracket(state: BodyState, frame: FrameField, gamma: ConnectionCoeffs | None,
                           params: BodyParams) -> np.ndarray:
    """
    ``[H, S_ab]`` assembled from the rotation-algebra bracket and ``dH/dS_cd = -xdot^e gamma_ecd``.

    An independent evaluation path for :func:`spin_rate`.
    """
    g = _gamma(frame, state.position, gamma)
    xdot = velocity_from_momenta(state, frame, ConnectionCoeffs(g), params)
    gradient = -np.einsum("e,ecd->cd", xdot, g)
    n = state.dim
    spin = state.spin
    out = np.zeros((n, n))
    for a, b in zip(*np.triu_indices(n, k=1)):
        out[a, b] = spin_poisson_bracket(gradient, spin_generator(n, a, b), spin)
        out[b, a] = -out[a, b]
    return out


def momentum_rate(state: BodyState, frame: FrameField, params: BodyParams,
                  backend: DerivativeBackend = DerivativeBackend.analytic,
                  step: float | None = None) -> np.ndarray:
    """
    The momentum_rate function returns ``dp_i/dt = -dH/dx^i`` at fixed ``p_i`` and ``S_ab``.

    The analytic path differentiates ``H`` through the frame:
    ``-dH/dx^k = -xdot^a (d_k e^i_a p_i - d_k gamma_acd S_cd)``. The finite-difference path
    differences :func:`hamiltonian` centrally in each coordinate.

    :param state: BodyState: Phase-space point
    :param frame: FrameField: Manifold description
    :param params: BodyParams: Mass and scalar inertia
    :param backend: DerivativeBackend: Analytic frame derivatives or central differences of H
    :param step: float | None: Finite-difference step scale
    :return: np.ndarray
    """
    x = state.position
    if backend == DerivativeBackend.finite_difference:
        def energy(y):
            moved = BodyState(y, state.momentum, state.spin_upper)
            return np.array(hamiltonian(moved, frame, None, params))

        return -geometry._central_difference(energy, frame, x, step)

    _, inverse = geometry.frame_matrices(frame, x)
    jacobian = geometry.coframe_jacobian(frame, x, backend, step)
    gamma_rate = geometry.connection_jacobian(frame, x, backend, step)
    xdot = velocity_from_momenta(state, frame, None, params)
    inverse_rate = -np.einsum("id,dlk,la->kia", inverse, jacobian, inverse)
    p_rate = np.einsum("kia,i->ka", inverse_rate, state.momentum)
    coupling_rate = np.einsum("kacd,cd->ka", gamma_rate, state.spin)
    return -(p_rate - coupling_rate) @ xdot


def state_derivative(state: BodyState, frame: FrameField, params: BodyParams,
                     backend: DerivativeBackend = DerivativeBackend.analytic) -> StateDerivative:
    """
    The state_derivative function assembles the full phase-space vector field
    ``(dx^i/dt, dp_i/dt, dS_ab/dt)`` with ``dx^i/dt = e^i_a xdot^a``.

    :param state: BodyState: Phase-space point
    :param frame: FrameField: Manifold description
    :param params: BodyParams: Mass and scalar inertia
    :param backend: DerivativeBackend: Source of frame derivatives
    :return: StateDerivative
    """
    _, inverse = geometry.frame_matrices(frame, state.position)
    gamma = geometry.connection_from_frame(frame, state.position, backend)
    xdot = velocity_from_momenta(state, frame, gamma, params)
    return StateDerivative(
        position_rate=inverse @ xdot,
        momentum_rate=momentum_rate(state, frame, params, backend),
        spin_rate=spin_rate(state, frame, gamma, params),
    )


def geodesic_state_derivative(state: BodyState, frame: FrameField, params: BodyParams) -> StateDerivative:
    """
    Vector field of the metric-only Hamiltonian ``g^ij p_i p_j / 2m``, built from ``g_ij`` and
    its coordinate derivatives without touching the connection.
    """
    x = state.position
    coframe, _ = geometry.frame_matrices(frame, x)
    jacobian = geometry.coframe_jacobian(frame, x)
    metric_inverse = np.linalg.inv(geometry.metric_at(frame, x))
    metric_rate = np.einsum("aik,aj->kij", jacobian, coframe) + np.einsum("ai,ajk->kij", coframe, jacobian)
    inverse_rate = -np.einsum("il,klm,mj->kij", metric_inverse, metric_rate, metric_inverse)
    p = state.momentum
    n = state.dim
    return StateDerivative(
        position_rate=metric_inverse @ p / params.mass,
        momentum_rate=-np.einsum("kij,i,j->k", inverse_rate, p, p) / (2.0 * params.mass),
        spin_rate=np.zeros((n, n)),
    )


@dataclass(frozen=True)
class PhaseSpaceField:
    """The tangent-body vector field bound to a frame and body; what the integrators step."""

    frame: FrameField
    params: BodyParams
    backend: DerivativeBackend = DerivativeBackend.analytic

    def __call__(self, state: BodyState) -> StateDerivative:
        return state_derivative(state, self.frame, self.params, self.backend)

    def energy(self, state: BodyState) -> float:
        return hamiltonian(state, self.frame, None, self.params)

    def contains(self, state: BodyState) -> bool:
        return self.frame.contains(state.position) and state.is_finite()


def papapetrou_force(riemann: np.ndarray, xdot: np.ndarray, spin: np.ndarray) -> np.ndarray:
    """
    Curvature-spin force ``F_a = R_cdab xdot^b S_cd`` on the center of mass.

    Along any solution ``m D xdot_a / dt = F_a`` holds with this contraction and coefficient one.

    :param riemann: np.ndarray: ``R_cdab`` in the layout of :class:`CurvatureTensor`
    :param xdot: np.ndarray: Frame components of the velocity
    :param spin: np.ndarray: Antisymmetric spin matrix
    :return: np.ndarray
    """
    return np.einsum("cdab,b,cd->a", riemann, xdot, spin)


def constant_curvature_riemann(n: int, curvature: float) -> np.ndarray:
    """``R_cdab = K (delta_ca delta_db - delta_cb delta_da)``."""
    delta = np.eye(n)
    return curvature * (np.einsum("ca,db->cdab", delta, delta) - np.einsum("cb,da->cdab", delta, delta))


def constant_curvature_force_factor(n: int = 2) -> float:
    """
    The constant ``c`` in ``|F| = c K s |xdot|`` for a constant-curvature space, found by
    contracting the constant-curvature tensor against a unit spin ``S_12 = 1`` and a unit
    velocity in the spin plane.
    """
    riemann = constant_curvature_riemann(n, 1.0)
    spin = np.zeros((n, n))
    spin[0, 1], spin[1, 0] = 1.0, -1.0
    xdot = np.zeros(n)
    xdot[1] = 1.0
    force = papapetrou_force(riemann, xdot, spin)
    return float(np.linalg.norm(force))
