import numpy as np
import pytest

from src.entity.errors import AnisotropicBody, CenterOffset, ConfigError, EmptyBody, ShapeMismatch
from src.entity.models import MassPoint
from src.services.body import body_params, build_body, is_isotropic, regular_polygon


@pytest.mark.parametrize("k", range(3, 9))
def test_regular_polygon_is_isotropic(k):
    points = regular_polygon(k, radius=1.5, mass=0.4)
    body = build_body(points)

    by_hand = np.zeros((2, 2))
    for point in points:
        by_hand += point.mass * np.outer(point.offset, point.offset)

    np.testing.assert_allclose(body.inertia, by_hand, rtol=1e-14, atol=1e-14)
    assert body.total_mass == pytest.approx(0.4 * k)
    assert body.scalar_inertia == pytest.approx(0.5 * k * 0.4 * 1.5 ** 2, rel=1e-12)
    params = body_params(body)
    assert params.mass == pytest.approx(0.4 * k)
    assert params.inertia == body.scalar_inertia


def test_octahedron_is_isotropic_in_three_dimensions():
    offsets = np.vstack([np.eye(3), -np.eye(3)])
    body = build_body(MassPoint(1.0, r) for r in offsets)
    assert body.dim == 3
    np.testing.assert_array_equal(body.inertia, 2.0 * np.eye(3))
    assert is_isotropic(body).isotropic


def test_axis_pair_is_rejected_for_dynamics():
    body = build_body([MassPoint(1.0, [1.0, 0.0]), MassPoint(1.0, [-1.0, 0.0])])
    assert body.scalar_inertia is None
    assert not is_isotropic(body).isotropic
    with pytest.raises(AnisotropicBody) as err:
        body_params(body)
    assert err.value.field == "body.points"


def test_center_offset_is_rejected():
    with pytest.raises(CenterOffset) as err:
        build_body([MassPoint(1.0, [1.0, 0.0]), MassPoint(1.0, [0.5, 0.0])])
    np.testing.assert_allclose(err.value.offset, [1.5, 0.0])


def test_point_mass_at_origin():
    body = build_body([MassPoint(3.0, [0.0, 0.0])])
    assert body.total_mass == 3.0
    assert body_params(body).inertia == 0.0


def test_empty_body():
    with pytest.raises(EmptyBody):
        build_body([])


def test_mixed_dimensions():
    with pytest.raises(ShapeMismatch):
        build_body([MassPoint(1.0, [1.0, 0.0]), MassPoint(1.0, [-1.0, 0.0, 0.0])])


def test_non_positive_mass():
    with pytest.raises(ConfigError):
        MassPoint(0.0, [1.0, 0.0])
