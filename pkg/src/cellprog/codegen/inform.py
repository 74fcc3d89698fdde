"""INFORM-style (Motoman ``.jbi``) emitter: positions in mm, X-Y-Z Euler
angles in degrees."""
from __future__ import annotations

from ..errors import CodegenError
from .fmt import coord, fixed2
from .ir import ProgramIR

#: Fixed placeholder; emitted text must not depend on the wall clock.
DATE_LINE = "///DATE 2000/01/01 00:00"
COUNTER = "I000"


def job_name(name: str) -> str:
    cleaned = "".join(c if c.isalnum() else "_" for c in name.upper())
    return cleaned or "JOB"


def emit_inform(ir: ProgramIR) -> str:
    if ir.encoding != "euler":
        raise CodegenError("INFORM output needs Euler-encoded poses; lower with encoding='euler'")
    lines = [
        "/JOB",
        f"//NAME {job_name(ir.name)}",
        "//POS",
        f"///NPOS {len(ir.declarations)},0,0,0,0,0",
        "///USER 1",
        "///TOOL 0",
        "///POSTYPE USER",
        "///RECTAN",
        "///RCONF 0,0,0,0,0,0,0,0",
    ]
    for d in ir.declarations:
        rx, ry, rz = d.orientation.degrees()
        values = ",".join(coord(v) for v in (d.x, d.y, d.z, rx, ry, rz))
        lines.append(f"{d.name}={values}")
    lines += ["//INST", DATE_LINE, "///ATTR SC,RW", "///GROUP1 RB1", "NOP"]

    for ins in ir.instructions:
        k = ins.kind
        if k == "move_joint":
            lines.append(f"MOVJ {ins.pose_ref} VJ={fixed2(ins.speed)}")
        elif k == "move_linear":
            lines.append(f"MOVL {ins.pose_ref} V={fixed2(ins.speed)}")
        elif k in ("move_circular", "move_spline"):
            op = "MOVC" if k == "move_circular" else "MOVS"
            for via in ins.via_refs:
                lines.append(f"{op} {via} V={fixed2(ins.speed)}")
            # FPT closes the arc/spline group at its end point
            lines.append(f"{op} {ins.pose_ref} V={fixed2(ins.speed)} FPT")
        elif k == "set_output":
            lines.append(f"DOUT OT#({ins.channel}) {'ON' if ins.on else 'OFF'}")
        elif k == "wait_timer":
            lines.append(f"TIMER T={fixed2(ins.seconds)}")
        elif k == "label":
            lines.append(f"SET {COUNTER} 0")
            lines.append(f"*{ins.label}")
        elif k == "jump":
            lines.append(f"INC {COUNTER}")
            lines.append(f"JUMP *{ins.label} IF {COUNTER}<{ins.count}")
        else:  # pragma: no cover - ProgramIR rejects unknown kinds
            raise CodegenError(f"cannot emit {k}")
    lines.append("END")
    return "\n".join(lines) + "\n"
