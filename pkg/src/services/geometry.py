"""
Frame-field geometry: metric, commutation coefficients, connection and curvature.

Conventions (fixed once, checked only through convention-independent quantities):

* ``d theta^a = -1/2 C^a_bc theta^b ^ theta^c``, so ``C^a_bc = e^i_b e^j_c (d_j e^a_i - d_i e^a_j)``.
* ``omega_ab = gamma_cab theta^c`` with ``gamma_abc = -gamma_acb`` and the first structure
  equation ``d theta^a = omega_ba ^ theta^b``; solving it gives
  ``gamma_abc = 1/2 (C_abc - C_bca - C_cab)``.
* ``Omega_ab = d omega_ab + omega_ac ^ omega_cb = 1/2 R_cdab theta^c ^ theta^d``. The ``1/2``
  makes the round sphere of radius R give ``R_1212 = 1/R**2``.
"""
import logging
from typing import Callable, NamedTuple

import numpy as np

from src.conf.config import config
from src.entity.errors import DerivativeUnavailable, OutOfChart, ShapeMismatch, SingularFrame
from src.entity.models import ConnectionCoeffs, CurvatureTensor, DerivativeBackend, FrameField

logger = logging.getLogger(__name__)

EPS = np.finfo(float).eps
MAX_CONDITION = 1e12


class StructureResiduals(NamedTuple):
    first: float
    second: float


def fd_steps(x: np.ndarray, scale: float | None = None) -> np.ndarray:
    """
    Per-coordinate central-difference steps ``h_i = max(|x^i|, 1) * scale``.

    :param x: np.ndarray: Chart point
    :param scale: float | None: Step scale, ``eps**(1/3)`` unless configured otherwise
    :return: Array of steps, one per coordinate
    """
    if scale is None:
        scale = config.FD_STEP_SCALE if config.FD_STEP_SCALE is not None else EPS ** (1.0 / 3.0)
    return np.maximum(np.abs(x), 1.0) * scale


def as_chart_point(frame: FrameField, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (frame.dim,):
        raise ShapeMismatch(expected=(frame.dim,), got=x.shape)
    if not frame.contains(x):
        raise OutOfChart(frame=frame.name, x=x.tolist())
    return x


def frame_matrices(frame: FrameField, x) -> tuple[np.ndarray, np.ndarray]:
    """
    Evaluate the coframe and its inverse at a chart point.

    :param frame: FrameField: Manifold description
    :param x: ChartPoint: Point inside the chart domain
    :return: ``(E, E_inv)`` with ``E[a, i] = e^a_i`` and ``E_inv[i, a] = e^i_a``
    """
    x = as_chart_point(frame, x)
    coframe = np.asarray(frame.coframe(x), dtype=float)
    if coframe.shape != (frame.dim, frame.dim):
        raise ShapeMismatch(expected=(frame.dim, frame.dim), got=coframe.shape)
    if not np.all(np.isfinite(coframe)):
        raise SingularFrame(x=x.tolist())
    try:
        condition = np.linalg.cond(coframe)
        if not np.isfinite(condition) or condition > MAX_CONDITION:
            raise SingularFrame(x=x.tolist(), condition=condition)
        inverse = np.linalg.inv(coframe)
    except np.linalg.LinAlgError as err:
        raise SingularFrame(x=x.tolist()) from err
    return coframe, inverse


def metric_at(frame: FrameField, x) -> np.ndarray:
    """``g_ij = delta_ab e^a_i e^b_j``."""
    coframe, _ = frame_matrices(frame, x)
    g = coframe.T @ coframe
    return 0.5 * (g + g.T)


def _central_difference(f: Callable[[np.ndarray], np.ndarray], frame: FrameField, x: np.ndarray,
                        step: float | None) -> np.ndarray:
    """Stack ``d_k f`` along a new trailing axis (one slot per coordinate k)."""
    h = fd_steps(x, step)
    slices = []
    for k in range(frame.dim):
        shift = np.zeros_like(x)
        shift[k] = h[k]
        forward, backward = x + shift, x - shift
        if not (frame.contains(forward) and frame.contains(backward)):
            raise DerivativeUnavailable(x=x.tolist(), coordinate=k)
        slices.append((np.asarray(f(forward)) - np.asarray(f(backward))) / (2.0 * h[k]))
    return np.stack(slices, axis=-1)


def _uses_analytic(available: bool, backend: DerivativeBackend) -> bool:
    if backend == DerivativeBackend.analytic and not available:
        logger.debug("analytic derivatives unavailable, using central differences")
    return backend == DerivativeBackend.analytic and available


def coframe_jacobian(frame: FrameField, x, backend: DerivativeBackend = DerivativeBackend.analytic,
                     step: float | None = None) -> np.ndarray:
    """``[a, i, j] = d_j e^a_i``, analytic when the frame supplies it, else central differences."""
    x = as_chart_point(frame, x)
    if _uses_analytic(frame.has_analytic_derivatives, backend):
        return np.asarray(frame.coframe_derivatives(x), dtype=float)
    return _central_difference(lambda y: np.asarray(frame.coframe(y), dtype=float), frame, x, step)


def _commutation(inverse: np.ndarray, jacobian: np.ndarray) -> np.ndarray:
    curl = jacobian - jacobian.transpose(0, 2, 1)
    return np.einsum("ib,jc,aij->abc", inverse, inverse, curl)


def _gamma_from_commutation(c: np.ndarray) -> np.ndarray:
    return 0.5 * (c - np.einsum("bca->abc", c) - np.einsum("cab->abc", c))


def commutation_coefficients(frame: FrameField, x, backend: DerivativeBackend = DerivativeBackend.analytic,
                             step: float | None = None) -> np.ndarray:
    """
    The commutation_coefficients function returns ``C^a_bc`` defined by
    ``d theta^a = -1/2 C^a_bc theta^b ^ theta^c``.

    :param frame: FrameField: Manifold description
    :param x: ChartPoint: Evaluation point
    :param backend: DerivativeBackend: Source of the coframe derivatives
    :param step: float | None: Finite-difference step scale
    :return: Array ``[a, b, c]``, antisymmetric in (b, c)
    """
    _, inverse = frame_matrices(frame, x)
    return _commutation(inverse, coframe_jacobian(frame, x, backend, step))


def connection_from_frame(frame: FrameField, x, backend: DerivativeBackend = DerivativeBackend.analytic,
                          step: float | None = None) -> ConnectionCoeffs:
    """
    The connection_from_frame function solves the first structure equation for the
    connection coefficients by the cyclic combination of commutation coefficients.

    :param frame: FrameField: Manifold description
    :param x: ChartPoint: Evaluation point
    :param backend: DerivativeBackend: Source of the coframe derivatives
    :param step: float | None: Finite-difference step scale
    :return: ConnectionCoeffs with ``gamma_abc = -gamma_acb`` exactly
    """
    c = commutation_coefficients(frame, x, backend, step)
    return ConnectionCoeffs(_gamma_from_commutation(c))


def _best_connection(frame: FrameField, backend: DerivativeBackend) -> Callable[[np.ndarray], np.ndarray]:
    inner = DerivativeBackend.analytic if frame.has_analytic_derivatives else backend
    return lambda y: connection_from_frame(frame, y, inner).gamma


def connection_jacobian(frame: FrameField, x, backend: DerivativeBackend = DerivativeBackend.analytic,
                        step: float | None = None) -> np.ndarray:
    """
    Coordinate derivatives of the connection coefficients, ``[k, a, b, c] = d_k gamma_abc``.

    The analytic path needs first and second coframe derivatives; otherwise ``gamma`` is
    differenced centrally, evaluated at the stencil points with the most accurate first
    derivatives the frame offers.
    """
    x = as_chart_point(frame, x)
    analytic = frame.has_analytic_derivatives and frame.has_analytic_second_derivatives
    if not _uses_analytic(analytic, backend):
        return np.moveaxis(_central_difference(_best_connection(frame, backend), frame, x, step), -1, 0)

    _, inverse = frame_matrices(frame, x)
    jacobian = np.asarray(frame.coframe_derivatives(x), dtype=float)
    hessian = np.asarray(frame.coframe_second_derivatives(x), dtype=float)
    curl = jacobian - jacobian.transpose(0, 2, 1)
    curl_rate = hessian - hessian.transpose(0, 2, 1, 3)
    # d_k e^i_b = -e^i_d (d_k e^d_l) e^l_b
    inverse_rate = -np.einsum("id,dlk,lb->kib", inverse, jacobian, inverse)
    c_rate = (np.einsum("kib,jc,aij->kabc", inverse_rate, inverse, curl)
              + np.einsum("ib,kjc,aij->kabc", inverse, inverse_rate, curl)
              + np.einsum("ib,jc,aijk->kabc", inverse, inverse, curl_rate))
    return 0.5 * (c_rate - np.einsum("kbca->kabc", c_rate) - np.einsum("kcab->kabc", c_rate))


def _riemann(gamma: np.ndarray, c: np.ndarray, frame_rate: np.ndarray) -> np.ndarray:
    """``R_cdab`` from ``gamma``, ``C`` and frame derivatives ``frame_rate[f, a, b, c] = d_f gamma_abc``."""
    derivative_term = frame_rate - frame_rate.transpose(1, 0, 2, 3)
    commutator_term = np.einsum("eab,ecd->cdab", gamma, c)
    quadratic = np.einsum("cae,deb->cdab", gamma, gamma)
    return derivative_term - commutator_term + quadratic - quadratic.transpose(1, 0, 2, 3)


def curvature_from_connection(frame: FrameField, x, backend: DerivativeBackend = DerivativeBackend.analytic,
                              step: float | None = None) -> CurvatureTensor:
    """
    The curvature_from_connection function evaluates the second structure equation
    ``Omega_ab = d omega_ab + omega_ac ^ omega_cb`` in the orthonormal frame.

    :param frame: FrameField: Manifold description
    :param x: ChartPoint: Evaluation point
    :param backend: DerivativeBackend: Source of the coframe and connection derivatives
    :param step: float | None: Finite-difference step scale
    :return: CurvatureTensor ``R_cda^b``
    """
    _, inverse = frame_matrices(frame, x)
    c = commutation_coefficients(frame, x, backend, step)
    gamma = _gamma_from_commutation(c)
    frame_rate = np.einsum("kf,kabc->fabc", inverse, connection_jacobian(frame, x, backend, step))
    return CurvatureTensor(_riemann(gamma, c, frame_rate))


def _reference_exterior_derivative(frame: FrameField, x: np.ndarray, backend: DerivativeBackend,
                                   step: float | None) -> np.ndarray:
    reference = DerivativeBackend.analytic if frame.has_analytic_derivatives else backend
    return -commutation_coefficients(frame, x, reference, step)


def first_structure_residual(frame: FrameField, x, backend: DerivativeBackend = DerivativeBackend.analytic,
                             step: float | None = None) -> float:
    """
    Max-norm of ``d theta^a - omega_ba ^ theta^b`` with ``gamma`` from ``backend``.

    ``d theta`` is always taken from the most accurate derivatives the frame has, so a
    finite-difference ``gamma`` shows its truncation error here.
    """
    x = as_chart_point(frame, x)
    gamma = connection_from_frame(frame, x, backend, step).gamma
    # frame components of omega_ba ^ theta^b, indexed [a, b, c] against theta^b ^ theta^c
    from_connection = np.einsum("bca->abc", gamma) - np.einsum("cba->abc", gamma)
    exterior = _reference_exterior_derivative(frame, x, backend, step)
    return float(np.max(np.abs(exterior - from_connection)))


def curvature_form_residual(frame: FrameField, x, backend: DerivativeBackend = DerivativeBackend.analytic,
                            step: float | None = None) -> float:
    """
    Max-norm difference between the curvature 2-form built two ways, in coordinate components:
    ``d omega + omega ^ omega`` from the coordinate connection form, and ``R_cdab e^c_i e^d_j``.
    """
    x = as_chart_point(frame, x)
    coframe, _ = frame_matrices(frame, x)
    gamma = connection_from_frame(frame, x, backend, step).gamma
    form = np.einsum("cab,ci->abi", gamma, coframe)

    analytic = (backend == DerivativeBackend.analytic and frame.has_analytic_derivatives
                and frame.has_analytic_second_derivatives)
    if analytic:
        gamma_rate = connection_jacobian(frame, x, backend, step)
        jacobian = coframe_jacobian(frame, x, backend, step)
        form_rate = (np.einsum("kcab,ci->kabi", gamma_rate, coframe)
                     + np.einsum("cab,cik->kabi", gamma, jacobian))
    else:
        best = _best_connection(frame, backend)

        def coordinate_form(y):
            return np.einsum("cab,ci->abi", best(y), np.asarray(frame.coframe(y), dtype=float))

        form_rate = np.moveaxis(_central_difference(coordinate_form, frame, x, step), -1, 0)

    exterior_path = (np.einsum("iabj->abij", form_rate) - np.einsum("jabi->abij", form_rate)
                     + np.einsum("aci,cbj->abij", form, form) - np.einsum("acj,cbi->abij", form, form))
    riemann = curvature_from_connection(frame, x, backend, step).riemann
    tensor_path = np.einsum("cdab,ci,dj->abij", riemann, coframe, coframe)
    return float(np.max(np.abs(exterior_path - tensor_path)))


def verify_structure_equations(frame: FrameField, x, backend: DerivativeBackend = DerivativeBackend.analytic,
                               step: float | None = None) -> StructureResiduals:
    """
    The verify_structure_equations function is the regression harness for both structure equations.

    :param frame: FrameField: Manifold description
    :param x: ChartPoint: Evaluation point
    :param backend: DerivativeBackend: Backend under test
    :param step: float | None: Finite-difference step scale
    :return: StructureResiduals(first, second)
    """
    return StructureResiduals(first_structure_residual(frame, x, backend, step),
                              curvature_form_residual(frame, x, backend, step))


def transport_vector(frame: FrameField, path: Callable[[float], np.ndarray],
                     path_velocity: Callable[[float], np.ndarray], vector: np.ndarray,
                     s_end: float, n_steps: int = 200) -> np.ndarray:
    """
    Parallel-transport frame components ``V_a`` along ``x(s)``, ``s`` in ``[0, s_end]``.

    Integrates ``dV_a/ds = -(dx^i/ds) e^c_i gamma_cab V_b`` with classical RK4.
    """
    def rate(s, v):
        x = path(s)
        coframe, _ = frame_matrices(frame, x)
        velocity = coframe @ np.asarray(path_velocity(s), dtype=float)
        gamma = connection_from_frame(frame, x).gamma
        return -np.einsum("c,cab,b->a", velocity, gamma, v)

    v = np.array(vector, dtype=float)
    h = s_end / n_steps
    for k in range(n_steps):
        s = k * h
        k1 = rate(s, v)
        k2 = rate(s + 0.5 * h, v + 0.5 * h * k1)
        k3 = rate(s + 0.5 * h, v + 0.5 * h * k2)
        k4 = rate(s + h, v + h * k3)
        v = v + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
    return v
