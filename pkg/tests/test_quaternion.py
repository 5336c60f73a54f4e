import numpy as np
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from jamdf import quaternion as quat

vec = arrays(float, 3, elements=st.floats(-3, 3))


def test_identity_rotation_is_noop():
    v = np.array([0.3, -1.0, 2.0])
    np.testing.assert_allclose(quat.rotate(quat.IDENTITY, v), v)


def test_yaw_quarter_turn_maps_x_to_y():
    q = quat.from_yaw(np.pi / 2)
    np.testing.assert_allclose(quat.rotate(q, [1.0, 0, 0]), [0, 1.0, 0], atol=1e-15)


@given(vec, vec)
def test_product_matches_matrix_composition(a, b):
    p, q = quat.from_rotvec(a), quat.from_rotvec(b)
    np.testing.assert_allclose(quat.to_matrix(quat.multiply(p, q)),
                               quat.to_matrix(p) @ quat.to_matrix(q), atol=1e-12)


@given(arrays(float, 3, elements=st.floats(-3, 3)))
def test_rotvec_round_trip(rv):
    back = quat.to_rotvec(quat.from_rotvec(rv))
    np.testing.assert_allclose(quat.to_matrix(quat.from_rotvec(back)), quat.to_matrix(quat.from_rotvec(rv)),
                               atol=1e-12)


def test_matrix_is_orthonormal(rng):
    q = quat.normalize(rng.standard_normal((50, 4)))
    r = quat.to_matrix(q)
    np.testing.assert_allclose(r @ np.swapaxes(r, -1, -2), np.broadcast_to(np.eye(3), r.shape), atol=1e-12)
    np.testing.assert_allclose(np.linalg.det(r), 1.0, atol=1e-12)
