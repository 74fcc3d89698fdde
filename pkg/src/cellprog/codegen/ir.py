"""Backend-neutral program representation and lowering from motion targets."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import CodegenError
from ..extraction import MotionTarget
from ..scene import ProcessParams
from ..transforms import OrientationTriple, Transform, UnitQuaternion, rot_to_euler, rot_to_quat

#: Poses closer than this (mm, and rotation-matrix entries) share a declaration.
DEDUP_TOL = 1e-9

ENCODINGS = ("euler", "quaternion")
MOVE_KINDS = {
    "joint": "move_joint",
    "linear": "move_linear",
    "circular": "move_circular",
    "spline": "move_spline",
}
INSTRUCTION_KINDS = (
    "move_joint", "move_linear", "move_circular", "move_spline",
    "set_output", "wait_timer", "label", "jump",
)


@dataclass(frozen=True)
class PoseDecl:
    name: str
    x: float
    y: float
    z: float
    orientation: OrientationTriple | UnitQuaternion


@dataclass(frozen=True)
class Instruction:
    kind: str
    pose_ref: str | None = None
    via_refs: tuple[str, ...] = ()
    speed: float | None = None
    channel: int | None = None
    on: bool | None = None
    seconds: float | None = None
    label: str | None = None
    count: int | None = None

    @property
    def is_motion(self) -> bool:
        return self.kind.startswith("move_")


@dataclass(frozen=True)
class ProgramIR:
    name: str
    encoding: str
    declarations: tuple[PoseDecl, ...]
    instructions: tuple[Instruction, ...]
    cycles: int = 1
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.encoding not in ENCODINGS:
            raise CodegenError(f"unknown pose encoding {self.encoding!r}")
        if self.cycles < 1:
            raise CodegenError("cycles must be >= 1")
        names = [d.name for d in self.declarations]
        if len(set(names)) != len(names):
            raise CodegenError("duplicate pose declaration names")
        want = OrientationTriple if self.encoding == "euler" else UnitQuaternion
        for d in self.declarations:
            if not isinstance(d.orientation, want):
                raise CodegenError(f"{d.name}: orientation does not match {self.encoding} encoding")
        declared = set(names)
        for ins in self.instructions:
            if ins.kind not in INSTRUCTION_KINDS:
                raise CodegenError(f"unknown instruction kind {ins.kind!r}")
            if ins.is_motion and ins.pose_ref is None:
                raise CodegenError(f"{ins.kind} without a pose reference")
            if ins.kind == "move_circular" and len(ins.via_refs) != 1:
                raise CodegenError("circular moves carry exactly one via pose")
            if ins.kind == "move_spline" and not ins.via_refs:
                raise CodegenError("spline moves carry at least one via pose")
            for ref in (ins.pose_ref, *ins.via_refs):
                if ref is not None and ref not in declared:
                    raise CodegenError(f"instruction references undeclared pose {ref}")

    def motion_count(self) -> int:
        return sum(1 for i in self.instructions if i.is_motion)


class _PoseTable:
    def __init__(self, encoding: str):
        self.encoding = encoding
        self.poses: list[Transform] = []
        self.decls: list[PoseDecl] = []

    def ref(self, pose: Transform) -> str:
        for known, decl in zip(self.poses, self.decls):
            if (
                np.max(np.abs(known.translation - pose.translation)) <= DEDUP_TOL
                and np.max(np.abs(known.rotation - pose.rotation)) <= DEDUP_TOL
            ):
                return decl.name
        name = f"P{len(self.decls) + 1:04d}"
        if self.encoding == "euler":
            orient = rot_to_euler(pose.rotation)
        else:
            orient = rot_to_quat(pose.rotation)
        x, y, z = (float(v) for v in pose.translation)
        self.poses.append(pose)
        self.decls.append(PoseDecl(name, x, y, z, orient))
        return name


def lower(
    targets: Sequence[MotionTarget],
    params: ProcessParams,
    encoding: str = "euler",
    name: str = "JOB",
) -> ProgramIR:
    """Targets -> declarations plus an instruction list."""
    if not targets:
        raise CodegenError("nothing to lower: empty target list")
    if encoding not in ENCODINGS:
        raise CodegenError(f"unknown pose encoding {encoding!r}")
    if params.cycles < 1:
        raise CodegenError("cycles must be >= 1")

    table = _PoseTable(encoding)
    body: list[Instruction] = []
    home = None
    if params.home_pose_in_B is not None:
        home = Instruction("move_joint", table.ref(params.home_pose_in_B), speed=params.speed_percent)

    for t in targets:
        if t.motion in ("circular", "spline") and not t.via_poses_in_B:
            raise CodegenError(f"{t.source_id}: {t.motion} target has no via poses")
        vias = tuple(table.ref(v) for v in t.via_poses_in_B or ())
        body.append(Instruction(MOVE_KINDS[t.motion], table.ref(t.pose_in_B), vias, speed=t.speed_percent))
        if t.op in ("set_output_on", "set_output_off"):
            body.append(Instruction("set_output", channel=params.channel_for(t.op_suffix), on=t.op == "set_output_on"))
            body.append(Instruction("wait_timer", seconds=params.timer_seconds))
        elif t.op == "wait_timer":
            body.append(Instruction("wait_timer", seconds=params.timer_seconds))

    if params.cycles > 1:
        body = [
            Instruction("label", label="LABEL1", count=params.cycles),
            *body,
            Instruction("jump", label="LABEL1", count=params.cycles),
        ]
    if home is not None:
        body = [home, *body, home]

    return ProgramIR(
        name=name,
        encoding=encoding,
        declarations=tuple(table.decls),
        instructions=tuple(body),
        cycles=params.cycles,
        metadata={"targets": len(targets), "home": home is not None},
    )
