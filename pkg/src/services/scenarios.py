import re
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from src.conf.config import config
from src.entity.errors import ConfigError, OracleUnavailable, UnknownScenario
from src.entity.models import BodyParams, BodyState, FrameField
from src.services.geometry import metric_at


GeodesicMap = Callable[[np.ndarray, np.ndarray, float], np.ndarray]


@dataclass(frozen=True)
class Scenario:
    name: str
    frame: FrameField
    curvature: float | None = None
    geodesic: GeodesicMap | None = None
    grid_bounds: tuple[tuple[float, float], ...] = ()
    params: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.frame.dim

    def chart_grid(self, count: int | None = None) -> list[np.ndarray]:
        """``count`` points per axis on a tensor grid (only the first two axes vary beyond 2D)."""
        count = count or config.GEOMETRY_GRID
        axes = [np.linspace(lo, hi, count) for lo, hi in self.grid_bounds[:2]]
        rest = [0.5 * (lo + hi) for lo, hi in self.grid_bounds[2:]]
        return [np.array([u, v, *rest]) for u in axes[0] for v in axes[1]]


def _unwrap_angle(trace: Callable[[float], float], t: float, start: float, resolution: float) -> float:
    """Continuous branch of an angle ``trace(t)`` starting from ``start``."""
    steps = max(int(np.ceil(abs(t) / resolution)), 1) + 1
    angles = np.array([trace(s) for s in np.linspace(0.0, t, steps)])
    angles[0] = start
    return float(np.unwrap(angles)[-1])


# -- flat plane, Cartesian ---------------------------------------------------------------

def _flat_cartesian(n: int, margin: float) -> Scenario:
    def geodesic(x0, v0, t):
        return x0 + v0 * t

    frame = FrameField(
        dim=n,
        coframe=lambda x: np.eye(n),
        coframe_derivatives=lambda x: np.zeros((n, n, n)),
        coframe_second_derivatives=lambda x: np.zeros((n, n, n, n)),
        name=f"flat_cartesian_{n}d",
    )
    return Scenario(frame.name, frame, curvature=0.0, geodesic=geodesic,
                    grid_bounds=tuple((-2.0, 2.0) for _ in range(n)))


# -- flat plane, polar (r, phi) -----------------------------------------------------------

def _flat_polar(margin: float) -> Scenario:
    def coframe(x):
        return np.diag([1.0, x[0]])

    def jacobian(x):
        d = np.zeros((2, 2, 2))
        d[1, 1, 0] = 1.0
        return d

    def geodesic(x0, v0, t):
        r0, phi0 = x0
        start = r0 * np.array([np.cos(phi0), np.sin(phi0)])
        velocity = np.array([[np.cos(phi0), -r0 * np.sin(phi0)],
                             [np.sin(phi0), r0 * np.cos(phi0)]]) @ v0

        def point(s):
            return start + velocity * s

        phi = _unwrap_angle(lambda s: np.arctan2(point(s)[1], point(s)[0]), t, phi0, 0.05 / max(
            np.linalg.norm(velocity) / r0, 1e-12))
        return np.array([np.linalg.norm(point(t)), phi])

    frame = FrameField(
        dim=2, coframe=coframe, coframe_derivatives=jacobian,
        coframe_second_derivatives=lambda x: np.zeros((2, 2, 2, 2)),
        chart_domain=lambda x: x[0] > margin, name="flat_polar_2d",
    )
    return Scenario(frame.name, frame, curvature=0.0, geodesic=geodesic,
                    grid_bounds=((0.5, 3.0), (-np.pi, np.pi)))


# -- round sphere (colatitude theta, longitude phi) ---------------------------------------

def _sphere(radius: float, margin: float) -> Scenario:
    if not radius > 0:
        raise ConfigError("Sphere radius must be positive", field="scenario.radius", radius=radius)

    def coframe(x):
        return np.diag([radius, radius * np.sin(x[0])])

    def jacobian(x):
        d = np.zeros((2, 2, 2))
        d[1, 1, 0] = radius * np.cos(x[0])
        return d

    def hessian(x):
        d = np.zeros((2, 2, 2, 2))
        d[1, 1, 0, 0] = -radius * np.sin(x[0])
        return d

    def embed(theta, phi):
        return np.array([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)])

    def geodesic(x0, v0, t):
        theta0, phi0 = x0
        start = embed(theta0, phi0)
        tangent = (np.array([np.cos(theta0) * np.cos(phi0), np.cos(theta0) * np.sin(phi0), -np.sin(theta0)]) * v0[0]
                   + np.array([-np.sin(theta0) * np.sin(phi0), np.sin(theta0) * np.cos(phi0), 0.0]) * v0[1])
        rate = np.linalg.norm(tangent)
        if rate == 0.0:
            return np.array(x0, dtype=float)
        direction = tangent / rate

        def point(s):
            return start * np.cos(rate * s) + direction * np.sin(rate * s)

        end = point(t)
        phi = _unwrap_angle(lambda s: np.arctan2(point(s)[1], point(s)[0]), t, phi0, 0.05 / rate)
        return np.array([np.arccos(np.clip(end[2], -1.0, 1.0)), phi])

    frame = FrameField(
        dim=2, coframe=coframe, coframe_derivatives=jacobian, coframe_second_derivatives=hessian,
        chart_domain=lambda x: margin < x[0] < np.pi - margin, name="sphere",
    )
    return Scenario("sphere", frame, curvature=1.0 / radius ** 2, geodesic=geodesic,
                    grid_bounds=((0.3, np.pi - 0.3), (-np.pi, np.pi)), params={"radius": radius})


# -- hyperbolic upper half-plane (u, y), y > 0 --------------------------------------------

def _hyperbolic(margin: float) -> Scenario:
    def coframe(x):
        return np.eye(2) / x[1]

    def jacobian(x):
        d = np.zeros((2, 2, 2))
        d[0, 0, 1] = d[1, 1, 1] = -1.0 / x[1] ** 2
        return d

    def hessian(x):
        d = np.zeros((2, 2, 2, 2))
        d[0, 0, 1, 1] = d[1, 1, 1, 1] = 2.0 / x[1] ** 3
        return d

    def geodesic(x0, v0, t):
        u0, y0 = x0
        speed = np.hypot(*v0) / y0
        if v0[0] == 0.0:
            return np.array([u0, y0 * np.exp(np.sign(v0[1]) * speed * t)])
        center = u0 + y0 * v0[1] / v0[0]
        radius = np.hypot(u0 - center, y0)
        sigma = np.arctanh((u0 - center) / radius) + np.sign(v0[0]) * speed * t
        return np.array([center + radius * np.tanh(sigma), radius / np.cosh(sigma)])

    frame = FrameField(
        dim=2, coframe=coframe, coframe_derivatives=jacobian, coframe_second_derivatives=hessian,
        chart_domain=lambda x: x[1] > margin, name="hyperbolic_upper_half",
    )
    return Scenario(frame.name, frame, curvature=-1.0, geodesic=geodesic,
                    grid_bounds=((-2.0, 2.0), (0.5, 3.0)))


# -- Euclidean space in spherical coordinates (r, theta, phi) -----------------------------

def _flat_spherical(margin: float) -> Scenario:
    def coframe(x):
        r, theta, _ = x
        return np.diag([1.0, r, r * np.sin(theta)])

    def jacobian(x):
        r, theta, _ = x
        d = np.zeros((3, 3, 3))
        d[1, 1, 0] = 1.0
        d[2, 2, 0] = np.sin(theta)
        d[2, 2, 1] = r * np.cos(theta)
        return d

    def hessian(x):
        r, theta, _ = x
        d = np.zeros((3, 3, 3, 3))
        d[2, 2, 0, 1] = d[2, 2, 1, 0] = np.cos(theta)
        d[2, 2, 1, 1] = -r * np.sin(theta)
        return d

    def to_cartesian(x):
        r, theta, phi = x
        return r * np.array([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)])

    def geodesic(x0, v0, t):
        r, theta, phi = x0
        basis = np.array([
            [np.sin(theta) * np.cos(phi), r * np.cos(theta) * np.cos(phi), -r * np.sin(theta) * np.sin(phi)],
            [np.sin(theta) * np.sin(phi), r * np.cos(theta) * np.sin(phi), r * np.sin(theta) * np.cos(phi)],
            [np.cos(theta), -r * np.sin(theta), 0.0],
        ])
        start, velocity = to_cartesian(x0), basis @ v0

        def point(s):
            return start + velocity * s

        end = point(t)
        resolution = 0.05 * max(np.hypot(*start[:2]), 1e-12) / max(np.linalg.norm(velocity), 1e-12)
        azimuth = _unwrap_angle(lambda s: np.arctan2(point(s)[1], point(s)[0]), t, phi, resolution)
        radius = np.linalg.norm(end)
        return np.array([radius, np.arccos(np.clip(end[2] / radius, -1.0, 1.0)), azimuth])

    frame = FrameField(
        dim=3, coframe=coframe, coframe_derivatives=jacobian, coframe_second_derivatives=hessian,
        chart_domain=lambda x: x[0] > margin and margin < x[1] < np.pi - margin, name="flat_spherical_3d",
    )
    return Scenario(frame.name, frame, curvature=0.0, geodesic=geodesic,
                    grid_bounds=((0.5, 3.0), (0.3, np.pi - 0.3), (-np.pi, np.pi)))


# -- flat plane with a position-dependent frame rotation ---------------------------------

def _flat_rotated(twist: tuple[float, float] = (0.3, 0.7)) -> Scenario:
    gradient = np.array(twist, dtype=float)

    def rotation(alpha):
        return np.array([[np.cos(alpha), np.sin(alpha)], [-np.sin(alpha), np.cos(alpha)]])

    def rotation_rate(alpha):
        return np.array([[-np.sin(alpha), np.cos(alpha)], [-np.cos(alpha), -np.sin(alpha)]])

    def coframe(x):
        return rotation(gradient @ x)

    def jacobian(x):
        return np.einsum("ai,j->aij", rotation_rate(gradient @ x), gradient)

    def hessian(x):
        return np.einsum("ai,j,k->aijk", -rotation(gradient @ x), gradient, gradient)

    frame = FrameField(dim=2, coframe=coframe, coframe_derivatives=jacobian,
                       coframe_second_derivatives=hessian, name="flat_rotated_2d")
    return Scenario(frame.name, frame, curvature=0.0, geodesic=lambda x0, v0, t: x0 + v0 * t,
                    grid_bounds=((-2.0, 2.0), (-2.0, 2.0)), params={"twist": list(twist)})


SCENARIO_NAMES = ("flat_cartesian_2d", "flat_polar_2d", "sphere", "hyperbolic_upper_half",
                  "flat_cartesian_3d", "flat_spherical_3d", "flat_rotated_2d")

_SPHERE_PATTERN = re.compile(r"^sphere\(\s*(?:R\s*=\s*)?([0-9.eE+-]+)\s*\)$")


def builtin(name: str, radius: float | None = None, margin: float | None = None) -> Scenario:
    """
    The builtin function returns one of the built-in scenarios.

    ``sphere`` takes its radius either from ``radius`` or inline, as in ``sphere(R=2)``.

    :param name: str: Scenario name
    :param radius: float | None: Sphere radius
    :param margin: float | None: Distance kept from chart singularities
    :return: A Scenario
    """
    margin = config.CHART_MARGIN if margin is None else margin
    match = _SPHERE_PATTERN.match(name.strip())
    if match:
        try:
            inline = float(match.group(1))
        except ValueError as err:
            raise ConfigError(f"Invalid sphere radius '{match.group(1)}'", field="scenario.name",
                              name=name) from err
        return _sphere(inline, margin)
    if name == "sphere":
        return _sphere(1.0 if radius is None else radius, margin)
    if name == "flat_cartesian_2d":
        return _flat_cartesian(2, margin)
    if name == "flat_cartesian_3d":
        return _flat_cartesian(3, margin)
    if name == "flat_polar_2d":
        return _flat_polar(margin)
    if name == "hyperbolic_upper_half":
        return _hyperbolic(margin)
    if name == "flat_spherical_3d":
        return _flat_spherical(margin)
    if name == "flat_rotated_2d":
        return _flat_rotated()
    raise UnknownScenario(field="scenario.name", name=name)


def coordinate_velocity(scenario: Scenario, state: BodyState, params: BodyParams) -> np.ndarray:
    """``x_dot^i = g^ij p_j / m``, the zero-spin velocity."""
    return np.linalg.solve(metric_at(scenario.frame, state.position), state.momentum) / params.mass


def geodesic_oracle(scenario: Scenario, start: BodyState, t: float, params: BodyParams) -> np.ndarray:
    """
    The geodesic_oracle function returns the exact geodesic position at time ``t`` for a
    zero-spin start.

    :param scenario: Scenario: Scenario with a closed-form geodesic map
    :param start: BodyState: Initial state; its spin must vanish
    :param t: float: Time
    :param params: BodyParams: Body mass (converts momentum to velocity)
    :return: ChartPoint
    """
    if scenario.geodesic is None:
        raise OracleUnavailable(scenario=scenario.name)
    if np.any(start.spin_upper != 0.0):
        raise ConfigError("Geodesic oracle needs a zero-spin start", field="spin")
    velocity = coordinate_velocity(scenario, start, params)
    return np.asarray(scenario.geodesic(start.position, velocity, t), dtype=float)
