"""RAPID-style (ABB ``.mod``) emitter: positions in mm, unit quaternions."""
from __future__ import annotations

import math

from ..errors import CodegenError
from .fmt import coord
from .ir import ProgramIR

INDENT = "    "
WOBJ = "wobjB"
TOOL = "tool0"
EXTAX = "[9E+09,9E+09,9E+09,9E+09,9E+09,9E+09]"


def speed_term(percent: float) -> str:
    """``v<round(10 * percent)>``, e.g. 23 % -> ``v230``."""
    return f"v{max(1, math.floor(10.0 * percent + 0.5))}"


def module_name(name: str) -> str:
    cleaned = "".join(c if c.isalnum() else "_" for c in name)
    if not cleaned or not cleaned[0].isalpha():
        cleaned = "M" + cleaned
    return cleaned


def _seconds(v: float) -> str:
    return coord(v)


def emit_rapid(ir: ProgramIR) -> str:
    if ir.encoding != "quaternion":
        raise CodegenError("RAPID output needs quaternion-encoded poses; lower with encoding='quaternion'")
    speeds = sorted(
        {speed_term(i.speed) for i in ir.instructions if i.is_motion},
        key=lambda s: int(s[1:]),
    )
    lines = [f"MODULE {module_name(ir.name)}"]
    # work object of the calibration frame; its user frame is taught on the controller
    lines.append(f"{INDENT}PERS wobjdata {WOBJ}:=[FALSE,TRUE,\"\",[[0,0,0],[1,0,0,0]],[[0,0,0],[1,0,0,0]]];")
    for s in speeds:
        lines.append(f"{INDENT}CONST speeddata {s}:=[{s[1:]},500,5000,1000];")
    for d in ir.declarations:
        q = d.orientation
        pos = ",".join(coord(v) for v in (d.x, d.y, d.z))
        rot = ",".join(coord(v) for v in (q.w, q.x, q.y, q.z))
        lines.append(f"{INDENT}CONST robtarget {d.name}:=[[{pos}],[{rot}],[0,0,0,0],{EXTAX}];")
    lines.append(f"{INDENT}PROC main()")

    depth = 2
    tail = f"{TOOL}\\WObj:={WOBJ};"
    for ins in ir.instructions:
        pad = INDENT * depth
        k = ins.kind
        if ins.is_motion:
            v = speed_term(ins.speed)
        if k == "move_joint":
            lines.append(f"{pad}MoveJ {ins.pose_ref}, {v}, fine, {tail}")
        elif k == "move_linear":
            lines.append(f"{pad}MoveL {ins.pose_ref}, {v}, fine, {tail}")
        elif k == "move_circular":
            lines.append(f"{pad}MoveC {ins.via_refs[0]}, {ins.pose_ref}, {v}, fine, {tail}")
        elif k == "move_spline":
            # no native spline: fly-by linear moves through the fit points
            for via in ins.via_refs:
                lines.append(f"{pad}MoveL {via}, {v}, z10, {tail}")
            lines.append(f"{pad}MoveL {ins.pose_ref}, {v}, fine, {tail}")
        elif k == "set_output":
            lines.append(f"{pad}SetDO do{ins.channel}, {1 if ins.on else 0};")
        elif k == "wait_timer":
            lines.append(f"{pad}WaitTime {_seconds(ins.seconds)};")
        elif k == "label":
            lines.append(f"{pad}FOR cycle FROM 1 TO {ins.count} DO")
            depth += 1
        elif k == "jump":
            depth -= 1
            lines.append(f"{INDENT * depth}ENDFOR")
        else:  # pragma: no cover
            raise CodegenError(f"cannot emit {k}")
    lines.append(f"{INDENT}ENDPROC")
    lines.append("ENDMODULE")
    return "\n".join(lines) + "\n"
