import enum
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from src.entity.errors import ConfigError, ShapeMismatch

ChartPoint = np.ndarray
CoframeMap = Callable[[np.ndarray], np.ndarray]


def _frozen(array) -> np.ndarray:
    out = np.array(array, dtype=float)
    out.setflags(write=False)
    return out


def _whole_chart(x: np.ndarray) -> bool:
    return True


@dataclass(frozen=True)
class FrameField:
    """
    Orthonormal coframe ``theta^a = e^a_i(x) dx^i`` on a single chart.

    ``coframe(x)[a, i] = e^a_i``; ``coframe_derivatives(x)[a, i, j] = d_j e^a_i``;
    ``coframe_second_derivatives(x)[a, i, j, k] = d_k d_j e^a_i``. Either derivative map
    may be omitted, the geometry service then falls back to central differences.
    """

    dim: int
    coframe: CoframeMap
    coframe_derivatives: CoframeMap | None = None
    coframe_second_derivatives: CoframeMap | None = None
    chart_domain: Callable[[np.ndarray], bool] = _whole_chart
    name: str = "frame"

    def __post_init__(self):
        if self.dim < 2:
            raise ConfigError("Manifold dimension must be at least 2", field="dim")

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return x.shape == (self.dim,) and bool(np.all(np.isfinite(x))) and bool(self.chart_domain(x))

    @property
    def has_analytic_derivatives(self) -> bool:
        return self.coframe_derivatives is not None

    @property
    def has_analytic_second_derivatives(self) -> bool:
        return self.coframe_second_derivatives is not None


@dataclass(frozen=True)
class ConnectionCoeffs:
    """``gamma[a, b, c] = gamma_abc``; the first index pairs with the coframe, (b, c) is the rotation pair."""

    gamma: np.ndarray

    def __post_init__(self):
        gamma = np.asarray(self.gamma, dtype=float)
        if gamma.ndim != 3 or len(set(gamma.shape)) != 1:
            raise ShapeMismatch(shape=gamma.shape)
        # exact antisymmetry in the rotation pair
        object.__setattr__(self, "gamma", _frozen(0.5 * (gamma - gamma.transpose(0, 2, 1))))

    @property
    def dim(self) -> int:
        return self.gamma.shape[0]

    def form(self, v: np.ndarray) -> np.ndarray:
        """Connection 1-form evaluated on frame vector ``v``: ``omega_bc(v) = v^a gamma_abc``."""
        return np.einsum("a,abc->bc", v, self.gamma)


@dataclass(frozen=True)
class CurvatureTensor:
    """
    ``riemann[c, d, a, b] = R_cda^b`` with ``Omega_a^b = 1/2 R_cda^b theta^c ^ theta^d``.

    Indices are orthonormal-frame labels so raising and lowering is trivial.
    """

    riemann: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "riemann", _frozen(self.riemann))

    @property
    def dim(self) -> int:
        return self.riemann.shape[0]

    def sectional(self, a: int = 0, b: int = 1) -> float:
        return float(self.riemann[a, b, a, b])

    def form_pair_residual(self) -> float:
        return float(np.max(np.abs(self.riemann + self.riemann.transpose(1, 0, 2, 3))))

    def rotation_pair_residual(self) -> float:
        return float(np.max(np.abs(self.riemann + self.riemann.transpose(0, 1, 3, 2))))

    def bianchi_residual(self) -> float:
        r = self.riemann
        # R_cdab + R_dacb + R_acdb
        cyclic = r + np.einsum("dacb->cdab", r) + np.einsum("acdb->cdab", r)
        return float(np.max(np.abs(cyclic)))


@dataclass(frozen=True)
class MassPoint:
    mass: float
    offset: np.ndarray

    def __post_init__(self):
        if not self.mass > 0:
            raise ConfigError("Mass must be positive", field="mass", mass=self.mass)
        offset = _frozen(self.offset)
        if offset.ndim != 1 or not np.all(np.isfinite(offset)):
            raise ConfigError("Offset must be a finite vector", field="offset")
        object.__setattr__(self, "offset", offset)


@dataclass(frozen=True)
class BodyModel:
    points: tuple[MassPoint, ...]
    total_mass: float
    inertia: np.ndarray
    scalar_inertia: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "inertia", _frozen(self.inertia))

    @property
    def dim(self) -> int:
        return self.inertia.shape[0]


@dataclass(frozen=True)
class BodyParams:
    mass: float
    inertia: float = 0.0

    def __post_init__(self):
        if not self.mass > 0:
            raise ConfigError("Mass must be positive", field="mass", mass=self.mass)
        if not self.inertia >= 0:
            raise ConfigError("Inertia must be non-negative", field="inertia", inertia=self.inertia)


@dataclass(frozen=True)
class AngularVelocity:
    eta: np.ndarray

    def __post_init__(self):
        eta = np.asarray(self.eta, dtype=float)
        if eta.ndim != 2 or eta.shape[0] != eta.shape[1]:
            raise ShapeMismatch(shape=eta.shape)
        object.__setattr__(self, "eta", _frozen(0.5 * (eta - eta.T)))


def spin_pairs(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Strict upper-triangle index pairs in lexicographic order (12, 13, ..., 23, ...)."""
    return np.triu_indices(n, k=1)


def spin_matrix(components: np.ndarray, n: int) -> np.ndarray:
    rows, cols = spin_pairs(n)
    out = np.zeros((n, n))
    out[rows, cols] = components
    out[cols, rows] = -np.asarray(components)
    return out


def spin_components(matrix: np.ndarray) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=float)
    return matrix[spin_pairs(matrix.shape[0])].copy()


@dataclass(frozen=True)
class BodyState:
    """
    Phase-space point ``(x^i, p_i, S_ab)``.

    The spin is stored as its strict upper triangle, so ``S_ab + S_ba = 0`` holds exactly;
    :attr:`spin` materializes the full matrix.
    """

    position: np.ndarray
    momentum: np.ndarray
    spin_upper: np.ndarray = field(default=None)

    def __post_init__(self):
        position = _frozen(self.position)
        momentum = _frozen(self.momentum)
        n = position.shape[0] if position.ndim == 1 else -1
        if n < 2 or momentum.shape != (n,):
            raise ShapeMismatch(position=position.shape, momentum=momentum.shape)
        upper = np.zeros(n * (n - 1) // 2) if self.spin_upper is None else self.spin_upper
        upper = _frozen(upper)
        if upper.shape != (n * (n - 1) // 2,):
            raise ShapeMismatch(spin=upper.shape)
        object.__setattr__(self, "position", position)
        object.__setattr__(self, "momentum", momentum)
        object.__setattr__(self, "spin_upper", upper)

    @classmethod
    def from_spin_matrix(cls, position, momentum, spin=None) -> "BodyState":
        n = len(position)
        if spin is None:
            return cls(position, momentum)
        spin = np.asarray(spin, dtype=float)
        if spin.shape != (n, n):
            raise ShapeMismatch(spin=spin.shape)
        return cls(position, momentum, spin_components(spin))

    @property
    def dim(self) -> int:
        return self.position.shape[0]

    @property
    def spin(self) -> np.ndarray:
        return spin_matrix(self.spin_upper, self.dim)

    @property
    def spin_norm(self) -> float:
        """``1/2 sum_ab S_ab S_ab``."""
        return float(np.sum(self.spin_upper ** 2))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.to_vector())))

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.position, self.momentum, self.spin_upper])

    @classmethod
    def from_vector(cls, vector: np.ndarray, n: int) -> "BodyState":
        vector = np.asarray(vector, dtype=float)
        return cls(vector[:n], vector[n:2 * n], vector[2 * n:])


@dataclass(frozen=True)
class StateDerivative:
    position_rate: np.ndarray
    momentum_rate: np.ndarray
    spin_rate: np.ndarray

    def to_vector(self) -> tuple[np.ndarray, float]:
        """Flatten onto the state layout; also returns the symmetric part dropped from ``spin_rate``."""
        rate = np.asarray(self.spin_rate, dtype=float)
        projection = float(np.max(np.abs(0.5 * (rate + rate.T)), initial=0.0))
        antisymmetric = 0.5 * (rate - rate.T)
        vector = np.concatenate([self.position_rate, self.momentum_rate, spin_components(antisymmetric)])
        return vector, projection


class TerminationReason(str, enum.Enum):
    completed = "completed"
    chart_exit = "chart_exit"


@dataclass(frozen=True)
class Sample:
    t: float
    state: BodyState
    energy: float
    spin_norm: float
    projection: float = 0.0


@dataclass
class TrajectoryRecord:
    samples: list[Sample] = field(default_factory=list)
    termination_reason: TerminationReason = TerminationReason.completed
    method: str = "rk4"
    step: float = 0.0

    def __len__(self):
        return len(self.samples)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.samples])

    @property
    def states(self) -> list[BodyState]:
        return [s.state for s in self.samples]

    @property
    def energies(self) -> np.ndarray:
        return np.array([s.energy for s in self.samples])

    @property
    def spin_norms(self) -> np.ndarray:
        return np.array([s.spin_norm for s in self.samples])

    @property
    def final_state(self) -> BodyState:
        return self.samples[-1].state

    @property
    def max_projection(self) -> float:
        return max((s.projection for s in self.samples), default=0.0)


class DerivativeBackend(str, enum.Enum):
    analytic = "analytic"
    finite_difference = "finite_difference"
