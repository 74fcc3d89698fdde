"""Densification of risk segments: equally spaced positions and SLERP
orientations."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import InterpolationError, TransformError
from .extraction import MotionTarget
from .transforms import (
    OrientationTriple,
    Point3,
    Transform,
    UnitQuaternion,
    quat_to_euler,
    quat_to_rot,
    rot_to_quat,
    euler_to_quat,
)

#: Below this angle SLERP degrades to normalized linear interpolation.
SMALL_ANGLE = 1e-7
#: Quaternion dot products below this (relative rotation ~pi) are rejected.
ANTIPODAL_DOT = 1e-9


@dataclass(frozen=True)
class InterpolationSpec:
    n: int
    dt: float = 1.0

    def __post_init__(self):
        if isinstance(self.n, bool) or not isinstance(self.n, int) or self.n < 2:
            raise InterpolationError("number of interpolated points must be an integer >= 2")
        if not (self.dt > 0.0 and math.isfinite(self.dt)):
            raise InterpolationError("sampling width must be positive")

    def velocity(self, p_start, p_end) -> np.ndarray:
        """Constant directional velocity that reaches ``p_end`` at k = n-1."""
        return (np.asarray(p_end, float) - np.asarray(p_start, float)) / ((self.n - 1) * self.dt)


def interpolate_positions(p_start, p_end, spec: InterpolationSpec) -> list[Point3]:
    """``r(k) = r(0) + v k dt`` for k = 0..n-1 with endpoints exact."""
    r0 = np.asarray(p_start, dtype=float)
    v = spec.velocity(p_start, p_end)
    out = [Point3(*(float(c) for c in r0))]
    for k in range(1, spec.n - 1):
        out.append(Point3(*(float(c) for c in r0 + v * (k * spec.dt))))
    out.append(Point3(*(float(c) for c in p_end)))
    return out


def _unit(q) -> np.ndarray:
    v = np.asarray(tuple(q), dtype=float)
    if v.shape != (4,):
        raise TransformError("a quaternion has 4 components")
    n = float(np.linalg.norm(v))
    if n == 0.0 or not math.isfinite(n):
        raise TransformError("zero or non-finite quaternion")
    return v / n


def slerp(q0, qn, t: float) -> UnitQuaternion:
    """Spherical linear interpolation along the shorter arc.

    Inputs may be :class:`UnitQuaternion` or any non-zero 4-sequence
    ``(w, x, y, z)``; the result is canonicalized.
    """
    if not (0.0 <= t <= 1.0):
        raise InterpolationError(f"interpolation parameter {t} outside [0, 1]")
    a = _unit(q0)
    b = _unit(qn)
    # endpoints come back exactly as given (canonicalized once)
    if t == 0.0:
        return UnitQuaternion.coerce(q0)
    if t == 1.0:
        return UnitQuaternion.coerce(qn)
    dot = float(a @ b)
    if dot < 0.0:
        b = -b
        dot = -dot
    if dot < ANTIPODAL_DOT:
        raise InterpolationError(
            "endpoint orientations differ by a half turn, so the rotation direction is "
            "ambiguous; add an intermediate tool model between them"
        )
    # same angle as acos(a.b), but accurate when the endpoints are close
    theta = 2.0 * math.atan2(float(np.linalg.norm(a - b)), float(np.linalg.norm(a + b)))
    if theta < SMALL_ANGLE:
        q = (1.0 - t) * a + t * b
    else:
        s = math.sin(theta)
        q = (math.sin((1.0 - t) * theta) / s) * a + (math.sin(t * theta) / s) * b
    return UnitQuaternion.from_components(*q)


def slerp_euler(e0: OrientationTriple, en: OrientationTriple, t: float) -> OrientationTriple:
    """Interpolate Euler orientations by way of quaternions."""
    return quat_to_euler(slerp(euler_to_quat(e0), euler_to_quat(en), t))


def interpolate_segment(a: MotionTarget, b: MotionTarget, spec: InterpolationSpec) -> list[MotionTarget]:
    """``n`` linear targets from ``a`` to ``b`` inclusive."""
    for end in (a, b):
        if end.motion != "linear":
            raise InterpolationError(
                f"{end.source_id or 'target'}: only linear segments can be densified, got {end.motion}"
            )
    positions = interpolate_positions(a.pose_in_B.translation, b.pose_in_B.translation, spec)
    q0 = rot_to_quat(a.pose_in_B.rotation)
    qn = rot_to_quat(b.pose_in_B.rotation)
    out = [a]
    for k in range(1, spec.n - 1):
        t = k / (spec.n - 1)
        rot = quat_to_rot(slerp(q0, qn, t))
        out.append(
            replace(
                b,
                pose_in_B=Transform(rot, positions[k], check=False),
                op="none",
                op_suffix=None,
                source_id=f"{b.source_id}~{k}",
            )
        )
    out.append(b)
    return out
