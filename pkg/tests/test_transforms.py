import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cellprog.errors import TransformError
from cellprog.transforms import (
    OrientationTriple,
    Point3,
    Transform,
    UnitQuaternion,
    compose,
    euler_to_quat,
    euler_to_rot,
    invert,
    locked_sum_angle,
    quat_to_rot,
    remap_point,
    remap_pose,
    rot_to_euler,
    rot_to_quat,
    rot_x,
    rot_y,
    rot_z,
    wrap_angle,
)

import oracles

angles = st.floats(-math.pi, math.pi, allow_nan=False)
coords = st.floats(-2000, 2000, allow_nan=False)
quats = st.tuples(*[st.floats(-1, 1, allow_nan=False)] * 4).filter(lambda q: sum(c * c for c in q) > 1e-3)


@st.composite
def transforms(draw, c=coords):
    q = draw(quats)
    return Transform(quat_to_rot(q), (draw(c), draw(c), draw(c)))


def random_transform(rng):
    return Transform(oracles.random_rotation(rng), [rng.uniform(-1000, 1000) for _ in range(3)])


# ------------------------------------------------------------ Transform

def test_construction_rejects_non_rotation():
    with pytest.raises(TransformError):
        Transform(np.diag([1.0, 1.0, 1.1]))
    with pytest.raises(TransformError):
        Transform(np.diag([1.0, 1.0, -1.0]))
    Transform(np.diag([1.0, 1.0, 1.1]), check=False)


def test_transform_is_immutable():
    t = Transform()
    with pytest.raises(AttributeError):
        t.translation = np.zeros(3)
    with pytest.raises(ValueError):
        t.rotation[0, 0] = 2.0


def test_rows_round_trip():
    rows = [0, -1, 0, 1, 0, 0, 0, 0, 1, 10, 20, 30]
    t = Transform.from_rows(rows)
    assert t.to_rows() == [float(v) for v in rows]
    assert np.array_equal(t.matrix[3], [0, 0, 0, 1])


# --------------------------------------------------------------- compose

def test_compose_identity():
    t = random_transform(random.Random(1))
    assert compose(Transform.identity(), t).allclose(t, 0.0)
    assert compose(t, Transform.identity()).allclose(t, 1e-12)


def test_compose_with_inverse_is_identity():
    t = random_transform(random.Random(2))
    assert compose(t, invert(t)).allclose(Transform.identity(), 1e-12)


def test_compose_matches_dense_multiply():
    a = Transform(rot_x(math.radians(30)), (1, 2, 3))
    b = Transform(rot_z(math.radians(45)), (0, 0, 1))
    expected = oracles.matmul4(a.matrix.tolist(), b.matrix.tolist())
    assert oracles.max_abs_diff(compose(a, b).matrix, expected) < 1e-12
    assert (a @ b).allclose(compose(a, b), 0.0)


@settings(max_examples=200, deadline=None)
@given(transforms(), transforms(), transforms())
def test_compose_is_associative(a, b, c):
    assert compose(compose(a, b), c).allclose(compose(a, compose(b, c)), 1e-9)


def test_compose_associative_tight():
    rng = random.Random(3)
    for _ in range(200):
        a, b, c = (Transform(oracles.random_rotation(rng), [rng.uniform(-1, 1) for _ in range(3)]) for _ in range(3))
        assert compose(compose(a, b), c).allclose(compose(a, compose(b, c)), 1e-12)


def test_compose_reprojects_drifted_rotation():
    drift = rot_z(0.3) * (1 + 1e-10)
    a = Transform(drift, check=False)
    out = compose(a, Transform.identity())
    assert out.is_rigid(1e-14)


# ---------------------------------------------------------------- invert

def test_invert_identity():
    assert invert(Transform.identity()).allclose(Transform.identity(), 0.0)


def test_invert_pure_translation():
    inv = invert(Transform.from_translation((0, 0, 5)))
    assert np.array_equal(inv.translation, [0, 0, -5])
    assert np.array_equal(inv.rotation, np.eye(3))


def test_invert_matches_general_inverse():
    rng = random.Random(4)
    for _ in range(1000):
        t = random_transform(rng)
        expected = oracles.gauss_jordan_inverse(t.matrix.tolist())
        assert oracles.max_abs_diff(invert(t).matrix, expected) < 1e-9


@settings(max_examples=200, deadline=None)
@given(transforms(st.floats(-100, 100, allow_nan=False)))
def test_invert_is_two_sided(t):
    assert compose(t, invert(t)).allclose(Transform.identity(), 1e-12)
    assert compose(invert(t), t).allclose(Transform.identity(), 1e-12)


# ----------------------------------------------------------- remapping

def test_remap_pose_identity_base():
    t = random_transform(random.Random(5))
    assert remap_pose(Transform.identity(), t).allclose(t, 1e-12)


def test_remap_pose_into_itself():
    t = random_transform(random.Random(6))
    assert remap_pose(t, t).allclose(Transform.identity(), 1e-12)


@settings(max_examples=200, deadline=None)
@given(transforms(), transforms())
def test_remap_then_compose_reconstructs(base, target):
    assert compose(base, remap_pose(base, target)).allclose(target, 1e-9)


def test_remap_point_examples():
    assert remap_point(Transform.identity(), (1, 2, 3)) == Point3(1, 2, 3)
    assert remap_point(Transform.from_translation((1, 0, 0)), (1, 0, 0)) == Point3(0, 0, 0)


def test_remap_point_equals_remap_pose_translation():
    rng = random.Random(7)
    for _ in range(200):
        base = random_transform(rng)
        p = [rng.uniform(-1000, 1000) for _ in range(3)]
        via_pose = remap_pose(base, Transform.from_translation(p)).translation
        assert np.max(np.abs(np.array(remap_point(base, p)) - via_pose)) < 1e-12


# ---------------------------------------------------------------- Euler

def test_euler_zero_is_identity():
    assert np.array_equal(euler_to_rot(OrientationTriple(0, 0, 0)), np.eye(3))


def test_euler_pure_beta():
    r = euler_to_rot(OrientationTriple(0, math.pi / 2, 0))
    assert r[0, 2] == pytest.approx(1.0)
    assert r[2, 0] == pytest.approx(-1.0)


def test_euler_order_is_x_then_y_then_z():
    e = OrientationTriple(0.3, -0.7, 1.1)
    assert np.allclose(euler_to_rot(e), rot_x(0.3) @ rot_y(-0.7) @ rot_z(1.1), atol=0)


@settings(max_examples=300, deadline=None)
@given(angles, angles, angles)
def test_euler_to_rot_is_proper_rotation(a, b, g):
    r = euler_to_rot(OrientationTriple(a, b, g))
    assert np.max(np.abs(r.T @ r - np.eye(3))) < 1e-12
    assert abs(np.linalg.det(r) - 1) < 1e-12


def test_rot_to_euler_identity():
    assert rot_to_euler(np.eye(3)) == OrientationTriple(0.0, 0.0, 0.0, False)


def test_rot_to_euler_positive_lock():
    e = rot_to_euler(rot_y(math.pi / 2))
    assert e.gimbal_locked
    assert e.alpha == 0.0 and e.beta == math.pi / 2
    assert e.gamma == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("sign", [1, -1])
@pytest.mark.parametrize("a,g", [(0.4, -1.2), (-2.5, 3.0), (0.0, 0.7), (1.0, 1.0)])
def test_gimbal_branches_reproduce_input(sign, a, g):
    r = rot_x(a) @ rot_y(sign * math.pi / 2) @ rot_z(g)
    e = rot_to_euler(r)
    assert e.gimbal_locked
    assert e.alpha == 0.0
    assert e.beta == sign * math.pi / 2
    assert oracles.frobenius(euler_to_rot(e), r) < 1e-6
    # the observable combination agrees with the locked-angle relation
    combined = locked_sum_angle(r)
    expected = e.gamma if sign > 0 else -e.gamma
    assert abs(wrap_angle(combined - expected)) < 1e-9
    assert abs(wrap_angle(combined - (a + sign * g))) < 1e-9


def test_rot_to_euler_rejects_non_rotation():
    with pytest.raises(TransformError):
        rot_to_euler(np.diag([1, 1, 1.1]))


def test_euler_angles_in_half_open_range():
    e = rot_to_euler(rot_x(math.pi))
    assert e.alpha == math.pi
    assert wrap_angle(-math.pi) == math.pi
    assert wrap_angle(3 * math.pi) == math.pi


def test_euler_round_trip_random():
    rng = random.Random(8)
    for _ in range(2000):
        r = oracles.random_rotation(rng)
        e = rot_to_euler(r)
        for ang in (e.alpha, e.beta, e.gamma):
            assert -math.pi < ang <= math.pi
        assert oracles.frobenius(euler_to_rot(e), r) < 1e-9


# ----------------------------------------------------------- quaternions

def test_quat_identity():
    assert rot_to_quat(np.eye(3)) == UnitQuaternion(1.0, 0.0, 0.0, 0.0)
    assert np.array_equal(quat_to_rot(UnitQuaternion(1, 0, 0, 0)), np.eye(3))


def test_quat_half_turn_about_z_is_canonical():
    q = rot_to_quat(np.diag([-1.0, -1.0, 1.0]))
    assert (q.w, q.x, q.y, q.z) == (0.0, 0.0, 0.0, 1.0)
    q = rot_to_quat(rot_z(math.pi))
    assert np.allclose(q.as_array(), [0, 0, 0, 1], atol=1e-15)


def test_quat_half_angle_definition():
    q = (math.cos(math.pi / 8), 0, 0, math.sin(math.pi / 8))
    assert np.max(np.abs(quat_to_rot(q) - rot_z(math.pi / 4))) < 1e-15


def test_quat_canonical_sign_rules():
    assert UnitQuaternion.from_components(-1, 0, 0, 0) == UnitQuaternion(1, 0, 0, 0)
    assert UnitQuaternion.from_components(0, 0, -1, 0) == UnitQuaternion(0, 0, 1, 0)
    with pytest.raises(TransformError):
        UnitQuaternion(-1.0, 0.0, 0.0, 0.0)
    with pytest.raises(TransformError):
        UnitQuaternion(1.0, 1.0, 0.0, 0.0)
    with pytest.raises(TransformError):
        quat_to_rot((0, 0, 0, 0))


def test_quat_round_trip_random():
    rng = random.Random(9)
    for _ in range(2000):
        r = np.array(oracles.random_rotation(rng))
        q = rot_to_quat(r)
        assert q.w >= 0
        assert abs(sum(c * c for c in q) - 1) < 1e-12
        assert np.max(np.abs(quat_to_rot(q) - r)) < 1e-12


@pytest.mark.parametrize("axis", [(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 0), (1, -2, 3)])
def test_quat_near_half_turn_is_stable(axis):
    for angle in (math.pi, math.pi - 1e-9, math.pi - 1e-4):
        r = np.array(oracles.axis_angle_matrix(axis, angle))
        assert np.max(np.abs(quat_to_rot(rot_to_quat(r)) - r)) < 1e-12


@settings(max_examples=300, deadline=None)
@given(quats)
def test_quat_to_rot_has_unit_determinant(q):
    r = quat_to_rot(q)
    assert abs(np.linalg.det(r) - 1) < 1e-12
    assert np.max(np.abs(r.T @ r - np.eye(3))) < 1e-12


@settings(max_examples=300, deadline=None)
@given(angles, angles, angles)
def test_quaternion_paths_commute(a, b, g):
    e = OrientationTriple(a, b, g)
    direct = euler_to_quat(e)
    # via an independent matrix built from elementary quaternions
    qx = [math.cos(a / 2), math.sin(a / 2), 0, 0]
    qy = [math.cos(b / 2), 0, math.sin(b / 2), 0]
    qz = [math.cos(g / 2), 0, 0, math.sin(g / 2)]
    composed = UnitQuaternion.from_components(*oracles.quat_mul(oracles.quat_mul(qx, qy), qz))
    assert np.max(np.abs(direct.as_array() - composed.as_array())) < 1e-9 or (
        abs(direct.w) < 1e-9 and oracles.quat_angle(direct, composed) < 1e-9
    )
    # and back through Euler
    again = euler_to_quat(rot_to_euler(euler_to_rot(e)))
    assert oracles.quat_angle(again, direct) < 1e-6
