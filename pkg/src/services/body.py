import logging
from typing import Iterable, NamedTuple

import numpy as np

from src.conf.config import config
from src.entity.errors import AnisotropicBody, CenterOffset, EmptyBody, ShapeMismatch
from src.entity.models import BodyModel, BodyParams, MassPoint

logger = logging.getLogger(__name__)


class Isotropy(NamedTuple):
    isotropic: bool
    scalar_inertia: float


def is_isotropic(body: BodyModel, tol: float | None = None) -> Isotropy:
    """
    The is_isotropic function checks ``I^ab = I delta^ab`` with ``I = trace(I^ab) / n``.

    :param body: BodyModel: Body to test
    :param tol: float | None: Max allowed entry of ``I^ab - I delta^ab``
    :return: Isotropy(isotropic, scalar_inertia)
    """
    tol = config.ISOTROPY_TOL if tol is None else tol
    n = body.dim
    scalar = float(np.trace(body.inertia) / n)
    deviation = np.max(np.abs(body.inertia - scalar * np.eye(n)))
    return Isotropy(bool(deviation <= tol), scalar)


def build_body(points: Iterable[MassPoint], tol: float | None = None) -> BodyModel:
    """
    The build_body function assembles the tangent rigid body from its mass points.

    The center-of-mass constraint ``sum m_a r_a = 0`` is checked relative to
    ``sum m_a |r_a|``; a body whose points all sit at the origin passes trivially.

    :param points: Iterable[MassPoint]: Masses with their tangent-space offsets
    :param tol: float | None: Relative center-of-mass tolerance
    :return: BodyModel with total mass, inertia tensor and (when isotropic) scalar inertia
    """
    tol = config.CENTER_OF_MASS_TOL if tol is None else tol
    points = tuple(points)
    if not points:
        raise EmptyBody(field="body.points")
    n = points[0].offset.shape[0]
    if any(p.offset.shape != (n,) for p in points):
        raise ShapeMismatch(field="body.points", expected=n)

    masses = np.array([p.mass for p in points])
    offsets = np.stack([p.offset for p in points])
    total_mass = float(masses.sum())
    moment = masses @ offsets
    scale = float(masses @ np.linalg.norm(offsets, axis=1))
    if np.max(np.abs(moment)) > tol * scale:
        raise CenterOffset(moment, field="body.points")

    inertia = np.einsum("k,ka,kb->ab", masses, offsets, offsets)
    body = BodyModel(points, total_mass, inertia)
    isotropy = is_isotropic(body)
    if isotropy.isotropic:
        body = BodyModel(points, total_mass, inertia, isotropy.scalar_inertia)
    logger.debug("body built: m=%s, I=%s", total_mass, inertia.tolist())
    return body


def body_params(body: BodyModel, tol: float | None = None) -> BodyParams:
    """Dynamics parameters ``(m, I)``; anisotropic bodies are rejected."""
    isotropy = is_isotropic(body, tol)
    if not isotropy.isotropic:
        raise AnisotropicBody(field="body.points", inertia=body.inertia.tolist())
    return BodyParams(mass=body.total_mass, inertia=isotropy.scalar_inertia)


def regular_polygon(k: int, radius: float = 1.0, mass: float = 1.0) -> list[MassPoint]:
    angles = 2.0 * np.pi * np.arange(k) / k
    return [MassPoint(mass, radius * np.array([np.cos(a), np.sin(a)])) for a in angles]
