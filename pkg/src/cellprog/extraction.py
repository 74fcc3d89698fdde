"""Scene document -> ordered motion targets expressed in the base frame."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .errors import ExtractionError, PlanWarning
from .scene import STEP_PREFIX, PathEntity, SceneDocument, ToolModel, step_sequence
from .transforms import Transform, remap_point, remap_pose

MOTION_KINDS = ("joint", "linear", "circular", "spline")
OPS = ("none", "set_output_on", "set_output_off", "wait_timer")

SUFFIX_OPS = {"A": "set_output_on", "B": "set_output_off", "T": "wait_timer"}
PATH_MOTION = {"line": "linear", "arc": "circular", "spline": "spline"}


class StepName(NamedTuple):
    sequence: int
    op_suffix: str | None = None


def parse_step_name(name: str) -> StepName | None:
    """Parse ``step_<n>[letter]``.

    Returns None for tools that are not motion tools (no ``step_`` prefix);
    raises :class:`ExtractionError` when the prefix is there but the rest
    is malformed.
    """
    if not name.startswith(STEP_PREFIX):
        return None
    parsed = step_sequence(name)
    if parsed is None:
        raise ExtractionError("malformed step name", name)
    return StepName(*parsed)


@dataclass(frozen=True)
class MotionTarget:
    pose_in_B: Transform
    motion: str
    speed_percent: float
    op: str = "none"
    via_poses_in_B: tuple[Transform, ...] | None = None
    source_id: str = ""
    sequence: int = 0
    op_suffix: str | None = None

    def __post_init__(self):
        if self.motion not in MOTION_KINDS:
            raise ValueError(f"unknown motion kind {self.motion!r}")
        if self.op not in OPS:
            raise ValueError(f"unknown op {self.op!r}")
        if not (0.0 < self.speed_percent <= 100.0):
            raise ValueError("speed_percent must be in (0, 100]")
        has_via = self.motion in ("circular", "spline")
        if has_via != (self.via_poses_in_B is not None):
            raise ValueError(f"{self.motion} target via poses mismatch")
        if self.motion == "circular" and len(self.via_poses_in_B) != 1:
            raise ValueError("circular targets carry exactly one via pose")
        if self.motion == "spline" and len(self.via_poses_in_B) < 1:
            raise ValueError("spline targets carry at least one via pose")


def _suffix_op(tool: ToolModel, suffix: str | None) -> str:
    if suffix is None:
        return "none"
    op = SUFFIX_OPS.get(suffix)
    if op is None:
        warnings.warn(
            f"{tool.name}: operation suffix {suffix!r} has no defined meaning; emitting motion only",
            PlanWarning,
            stacklevel=3,
        )
        return "none"
    return op


def _base_frame(doc: SceneDocument) -> Transform:
    bases = doc.base_frames()
    if len(bases) != 1:
        raise ExtractionError(f"expected exactly one base frame, found {len(bases)}", "<scene>")
    return bases[0].transform_in_U.orthonormalized()


def _path_target(path: PathEntity, base: Transform, rot_B, speed: float, sequence: int) -> MotionTarget:
    pts = [np.array(remap_point(base, p)) for p in path.points_in_U]
    end = Transform(rot_B, pts[-1], check=False)
    motion = PATH_MOTION[path.kind]
    vias = None
    if motion != "linear":
        vias = tuple(Transform(rot_B, p, check=False) for p in pts[1:-1])
    return MotionTarget(end, motion, speed, via_poses_in_B=vias, source_id=path.id, sequence=sequence)


def extract_targets(doc: SceneDocument, *, allow_empty: bool = False) -> list[MotionTarget]:
    """Ordered motion targets in {B}.

    Step tools are sorted by sequence number; each contributes one target
    whose position is its WorkPoint and whose orientation is the tool's own.
    A path follows the step tool that orients it (in document order);
    paths without an orienting tool come last and keep the orientation of
    whatever target precedes them.
    """
    base = _base_frame(doc)
    speed = doc.params.speed_percent

    steps: list[tuple[StepName, ToolModel]] = []
    for tool in doc.tools:
        step = parse_step_name(tool.name)
        if step is not None:
            steps.append((step, tool))
    steps.sort(key=lambda s: (s[0].sequence, s[1].name))
    step_names = {t.name for _, t in steps}

    by_tool: dict[str, list[PathEntity]] = {}
    loose: list[PathEntity] = []
    for path in doc.paths:
        if path.orientation_tool is None:
            loose.append(path)
        elif path.orientation_tool not in step_names:
            what = "non-motion" if doc.tool(path.orientation_tool) else "non-existent"
            raise ExtractionError(f"orientation_tool {path.orientation_tool!r} refers to a {what} tool", path.id)
        else:
            by_tool.setdefault(path.orientation_tool, []).append(path)

    targets: list[MotionTarget] = []
    for step, tool in steps:
        t_in_U = tool.transform_in_U.orthonormalized()
        rot_B = remap_pose(base, t_in_U).rotation
        pos_B = remap_point(base, tool.position_in_U)
        targets.append(
            MotionTarget(
                Transform(rot_B, pos_B, check=False),
                doc.params.default_motion,
                speed,
                op=_suffix_op(tool, step.op_suffix),
                source_id=tool.name,
                sequence=step.sequence,
                op_suffix=step.op_suffix,
            )
        )
        for path in by_tool.get(tool.name, ()):
            targets.append(_path_target(path, base, rot_B, speed, step.sequence))

    for path in loose:
        rot_B = targets[-1].pose_in_B.rotation if targets else np.eye(3)
        seq = targets[-1].sequence if targets else 0
        targets.append(_path_target(path, base, rot_B, speed, seq))

    if not targets and not allow_empty:
        raise ExtractionError("scene produces no motion targets", "<scene>")
    return targets


def insert_approach_departure(targets: list[MotionTarget], approach_distance: float) -> list[MotionTarget]:
    """Bracket every target that carries an op with linear approach and
    departure targets backed off along the tool's local -z axis."""
    if approach_distance < 0.0:
        raise ValueError("approach_distance must be >= 0")
    if approach_distance == 0.0:
        return list(targets)
    out = []
    for t in targets:
        if t.op == "none":
            out.append(t)
            continue
        offset = t.pose_in_B.apply((0.0, 0.0, -approach_distance))
        pose = Transform(t.pose_in_B.rotation, offset, check=False)
        common = dict(motion="linear", speed_percent=t.speed_percent, sequence=t.sequence)
        out.append(MotionTarget(pose, source_id=f"{t.source_id}@approach", **common))
        out.append(t)
        out.append(MotionTarget(pose, source_id=f"{t.source_id}@depart", **common))
    return out


def as_linear(t: MotionTarget) -> MotionTarget:
    """Same pose as a plain linear target (used as a segment start)."""
    return replace(t, motion="linear", op="none", via_poses_in_B=None, op_suffix=None)
