"""SE(3)/SO(3) math: rigid transforms, frame remapping, X-Y-Z Euler angles
and unit quaternions.

Rotations are plain ``(3, 3)`` float arrays. :class:`Transform` stores its
blocks as read-only arrays so instances can be shared freely.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import TransformError

#: Rigid-transform validity tolerance enforced at construction.
RIGID_TOL = 1e-9
#: Drift above which composed rotations are projected back onto SO(3).
DRIFT_TOL = 1e-12
#: ``hypot(r11, r12)`` below this selects the gimbal-lock branch.
GIMBAL_TOL = 1e-8
#: Unit-norm tolerance for :class:`UnitQuaternion`.
QUAT_NORM_TOL = 1e-12


class Point3(NamedTuple):
    x: float
    y: float
    z: float


def _frozen(a, shape) -> np.ndarray:
    arr = np.array(a, dtype=float).reshape(shape)
    arr.setflags(write=False)
    return arr


def orthonormality_error(r) -> float:
    """Largest absolute entry of ``R^T R - I``."""
    r = np.asarray(r, dtype=float)
    return float(np.max(np.abs(r.T @ r - np.eye(3))))


def is_rotation(r, tol: float = RIGID_TOL) -> bool:
    r = np.asarray(r, dtype=float)
    if r.shape != (3, 3) or not np.all(np.isfinite(r)):
        return False
    return orthonormality_error(r) <= tol and abs(np.linalg.det(r) - 1.0) <= tol


def nearest_rotation(r) -> np.ndarray:
    """Project a near-rotation onto SO(3) (polar decomposition via SVD)."""
    u, _, vt = np.linalg.svd(np.asarray(r, dtype=float))
    d = np.sign(np.linalg.det(u @ vt))
    return u @ np.diag([1.0, 1.0, d]) @ vt


class Transform:
    """Homogeneous rigid transform: rotation block plus translation in mm.

    Construction rejects rotations that are not orthonormal with
    determinant +1 within ``1e-9``. Pass ``check=False`` to hold raw data
    (e.g. a hand-authored scene) that is validated later.
    """

    __slots__ = ("rotation", "translation")

    def __init__(self, rotation=None, translation=None, *, check: bool = True):
        rot = np.eye(3) if rotation is None else rotation
        trans = (0.0, 0.0, 0.0) if translation is None else translation
        rot = _frozen(rot, (3, 3))
        trans = _frozen(trans, (3,))
        if not (np.all(np.isfinite(rot)) and np.all(np.isfinite(trans))):
            raise TransformError("transform entries must be finite")
        if check and not is_rotation(rot):
            raise TransformError(
                f"rotation block is not a proper rotation "
                f"(orthonormality error {orthonormality_error(rot):.3g}, "
                f"det {np.linalg.det(rot):.12g})"
            )
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", trans)

    def __setattr__(self, name, value):
        raise AttributeError("Transform is immutable")

    @classmethod
    def identity(cls) -> Transform:
        return cls()

    @classmethod
    def from_matrix(cls, m, *, check: bool = True) -> Transform:
        m = np.asarray(m, dtype=float)
        if m.shape != (4, 4):
            raise TransformError(f"expected a 4x4 matrix, got {m.shape}")
        if not np.allclose(m[3], [0.0, 0.0, 0.0, 1.0], atol=RIGID_TOL):
            raise TransformError("bottom row of a homogeneous transform must be 0 0 0 1")
        return cls(m[:3, :3], m[:3, 3], check=check)

    @classmethod
    def from_rows(cls, values: Sequence[float], *, check: bool = True) -> Transform:
        """Build from 12 numbers: three rotation rows then translation x y z."""
        if len(values) != 12:
            raise TransformError(f"expected 12 numbers, got {len(values)}")
        return cls(np.reshape(values[:9], (3, 3)), values[9:], check=check)

    @classmethod
    def from_translation(cls, xyz) -> Transform:
        return cls(None, xyz)

    def to_rows(self) -> list[float]:
        return [float(v) for v in self.rotation.ravel()] + [float(v) for v in self.translation]

    @property
    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    @property
    def position(self) -> Point3:
        return Point3(*(float(v) for v in self.translation))

    def is_rigid(self, tol: float = RIGID_TOL) -> bool:
        return is_rotation(self.rotation, tol)

    def orthonormalized(self) -> Transform:
        """Copy with the rotation projected onto SO(3)."""
        return Transform(nearest_rotation(self.rotation), self.translation)

    def apply(self, p) -> np.ndarray:
        """Map a point given in this transform's child frame to its parent frame."""
        return self.rotation @ np.asarray(p, dtype=float) + self.translation

    def with_translation(self, xyz) -> Transform:
        return Transform(self.rotation, xyz, check=False)

    def allclose(self, other: Transform, atol: float = 1e-9) -> bool:
        return bool(
            np.allclose(self.rotation, other.rotation, rtol=0.0, atol=atol)
            and np.allclose(self.translation, other.translation, rtol=0.0, atol=atol)
        )

    def __eq__(self, other):
        if not isinstance(other, Transform):
            return NotImplemented
        return bool(
            np.array_equal(self.rotation, other.rotation)
            and np.array_equal(self.translation, other.translation)
        )

    def __hash__(self):
        return hash((self.rotation.tobytes(), self.translation.tobytes()))

    def __matmul__(self, other: Transform) -> Transform:
        return compose(self, other)

    def __repr__(self):
        return f"Transform(rotation={self.rotation.tolist()!r}, translation={self.translation.tolist()!r})"


def compose(a: Transform, b: Transform) -> Transform:
    """Homogeneous product ``a @ b``."""
    rot = a.rotation @ b.rotation
    if orthonormality_error(rot) > DRIFT_TOL:
        rot = nearest_rotation(rot)
    return Transform(rot, a.rotation @ b.translation + a.translation, check=False)


def invert(t: Transform) -> Transform:
    # transpose + (-R^T p); never a general matrix inverse
    rt = t.rotation.T
    return Transform(rt, -rt @ t.translation, check=False)


def remap_pose(base_in_U: Transform, target_in_U: Transform) -> Transform:
    """Express a pose given in the scene frame {U} in the base frame {B}."""
    return compose(invert(base_in_U), target_in_U)


def remap_point(base_in_U: Transform, p_in_U) -> Point3:
    """Express a point given in {U} in the base frame {B}."""
    r_bu = base_in_U.rotation.T
    p_uorg = -r_bu @ base_in_U.translation
    p = r_bu @ np.asarray(p_in_U, dtype=float) + p_uorg
    return Point3(*(float(v) for v in p))


def rot_x(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def wrap_angle(a: float) -> float:
    """Wrap to the half-open interval (-pi, pi]."""
    w = math.remainder(a, 2.0 * math.pi)
    return math.pi if w <= -math.pi else w


@dataclass(frozen=True)
class OrientationTriple:
    """X-Y-Z Euler angles in radians, ``R = Rx(alpha) Ry(beta) Rz(gamma)``."""

    alpha: float
    beta: float
    gamma: float
    gimbal_locked: bool = False

    def degrees(self) -> tuple[float, float, float]:
        return (math.degrees(self.alpha), math.degrees(self.beta), math.degrees(self.gamma))

    @classmethod
    def from_degrees(cls, a: float, b: float, g: float) -> OrientationTriple:
        return cls(math.radians(a), math.radians(b), math.radians(g))


def euler_to_rot(e: OrientationTriple) -> np.ndarray:
    return rot_x(e.alpha) @ rot_y(e.beta) @ rot_z(e.gamma)


def _require_rotation(r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if r.shape != (3, 3):
        raise TransformError(f"expected a 3x3 rotation, got shape {r.shape}")
    if not is_rotation(r):
        raise TransformError(
            f"matrix is not a rotation (orthonormality error {orthonormality_error(r):.3g})"
        )
    return r


def rot_to_euler(r) -> OrientationTriple:
    """Extract X-Y-Z Euler angles, taking alpha = 0 when gimbal-locked."""
    r = _require_rotation(r)
    (r11, r12, r13), (r21, r22, r23), (r31, r32, r33) = r.tolist()
    c_beta = math.hypot(r11, r12)
    if c_beta < GIMBAL_TOL:
        if r13 > 0.0:
            beta = math.pi / 2
            gamma = math.atan2(r21, -r31)
        else:
            beta = -math.pi / 2
            gamma = math.atan2(r21, r31)
        return OrientationTriple(0.0, beta, wrap_angle(gamma), gimbal_locked=True)
    beta = math.atan2(r13, c_beta)
    alpha = math.atan2(-r23 / c_beta, r33 / c_beta)
    gamma = math.atan2(-r12 / c_beta, r11 / c_beta)
    return OrientationTriple(wrap_angle(alpha), wrap_angle(beta), wrap_angle(gamma))


def locked_sum_angle(r) -> float:
    """``atan2(r32, r22)``: the only combination of alpha and gamma that is
    observable at gimbal lock (alpha + gamma for beta = +pi/2, alpha - gamma
    for beta = -pi/2)."""
    r = np.asarray(r, dtype=float)
    return math.atan2(r[2, 1], r[1, 1])


def _canonical_sign(w, x, y, z):
    if w < 0.0:
        return -w, -x, -y, -z
    if w == 0.0:
        for c in (x, y, z):
            if c != 0.0:
                return (w, x, y, z) if c > 0.0 else (w, -x, -y, -z)
    return w, x, y, z


@dataclass(frozen=True)
class UnitQuaternion:
    """Unit quaternion ``w + xi + yj + zk`` in canonical sign (w >= 0)."""

    w: float
    x: float
    y: float
    z: float

    def __post_init__(self):
        n2 = self.w ** 2 + self.x ** 2 + self.y ** 2 + self.z ** 2
        if abs(n2 - 1.0) > QUAT_NORM_TOL:
            raise TransformError(f"quaternion is not unit length (|q|^2 = {n2!r})")
        if _canonical_sign(self.w, self.x, self.y, self.z) != (self.w, self.x, self.y, self.z):
            raise TransformError("quaternion is not in canonical sign")

    @classmethod
    def from_components(cls, w, x, y, z) -> UnitQuaternion:
        """Normalize and canonicalize an arbitrary non-zero 4-vector."""
        v = np.array([w, x, y, z], dtype=float)
        n = float(np.linalg.norm(v))
        if not math.isfinite(n) or n == 0.0:
            raise TransformError("zero or non-finite quaternion")
        v = v / n
        return cls(*_canonical_sign(*(float(c) for c in v)))

    @classmethod
    def coerce(cls, q) -> UnitQuaternion:
        if isinstance(q, UnitQuaternion):
            return q
        return cls.from_components(*q)

    def as_array(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z])

    def __iter__(self) -> Iterable[float]:
        return iter((self.w, self.x, self.y, self.z))


def rot_to_quat(r) -> UnitQuaternion:
    """Largest-pivot extraction (trace or a diagonal entry)."""
    r = _require_rotation(r)
    tr = r[0, 0] + r[1, 1] + r[2, 2]
    pivot = int(np.argmax([tr, r[0, 0], r[1, 1], r[2, 2]]))
    if pivot == 0:
        s = 2.0 * math.sqrt(1.0 + tr)
        w = 0.25 * s
        x = (r[2, 1] - r[1, 2]) / s
        y = (r[0, 2] - r[2, 0]) / s
        z = (r[1, 0] - r[0, 1]) / s
    elif pivot == 1:
        s = 2.0 * math.sqrt(1.0 + r[0, 0] - r[1, 1] - r[2, 2])
        w = (r[2, 1] - r[1, 2]) / s
        x = 0.25 * s
        y = (r[0, 1] + r[1, 0]) / s
        z = (r[0, 2] + r[2, 0]) / s
    elif pivot == 2:
        s = 2.0 * math.sqrt(1.0 + r[1, 1] - r[0, 0] - r[2, 2])
        w = (r[0, 2] - r[2, 0]) / s
        x = (r[0, 1] + r[1, 0]) / s
        y = 0.25 * s
        z = (r[1, 2] + r[2, 1]) / s
    else:
        s = 2.0 * math.sqrt(1.0 + r[2, 2] - r[0, 0] - r[1, 1])
        w = (r[1, 0] - r[0, 1]) / s
        x = (r[0, 2] + r[2, 0]) / s
        y = (r[1, 2] + r[2, 1]) / s
        z = 0.25 * s
    return UnitQuaternion.from_components(w, x, y, z)


def quat_to_rot(q) -> np.ndarray:
    q = UnitQuaternion.coerce(q)
    w, x, y, z = q.w, q.x, q.y, q.z
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def euler_to_quat(e: OrientationTriple) -> UnitQuaternion:
    return rot_to_quat(euler_to_rot(e))


def quat_to_euler(q) -> OrientationTriple:
    return rot_to_euler(quat_to_rot(q))


def rotation_angle_between(r_a, r_b) -> float:
    """Geodesic angle (radians) of the relative rotation ``r_a^T r_b``."""
    q = rot_to_quat(np.asarray(r_a).T @ np.asarray(r_b))
    return 2.0 * math.atan2(math.sqrt(q.x ** 2 + q.y ** 2 + q.z ** 2), abs(q.w))
