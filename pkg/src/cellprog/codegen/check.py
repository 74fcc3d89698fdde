"""Re-parse emitted program text against the dialect grammars.

``check_program`` is the verification half of emit/parse round trips; the
small readers next to it recover pose declarations and motion counts so
the two dialects can be compared with each other.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

DIALECTS = ("inform", "rapid")

_NUM = r"-?\d+(?:\.\d+)?"
_VAR = r"[IBD]\d{3}"


@dataclass(frozen=True)
class Diagnostic:
    line: int
    code: str
    message: str


# ----------------------------------------------------------------- INFORM

_I_POSE = re.compile(rf"^(P\d+)=({_NUM}(?:,{_NUM}){{5}})$")
_I_BODY = [
    ("move", re.compile(rf"^MOVJ (P\d+) VJ={_NUM}$")),
    ("move", re.compile(rf"^MOVL (P\d+) V={_NUM}$")),
    ("group", re.compile(rf"^(MOVC|MOVS) (P\d+) V={_NUM}( FPT)?$")),
    ("move", re.compile(rf"^IMOV (P\d+) V={_NUM}(?: TF)?$")),
    ("plain", re.compile(r"^DOUT OT#\(\d+\) (?:ON|OFF)$")),
    ("plain", re.compile(rf"^TIMER T={_NUM}$")),
    ("label", re.compile(r"^\*(\w+)$")),
    ("jump", re.compile(rf"^JUMP \*(\w+)(?: IF {_VAR}(?:=|<>|<=|>=|<|>)-?\d+)?$")),
    ("plain", re.compile(rf"^SET {_VAR} -?\d+$")),
    ("plain", re.compile(rf"^INC {_VAR}$")),
    ("add", re.compile(r"^ADD (P\d+) (P\d+)$")),
    ("plain", re.compile(r"^'.*$")),
]


def _check_inform(lines: list[str]) -> list[Diagnostic]:
    diags: list[Diagnostic] = []
    declared: set[str] = set()
    refs: list[tuple[int, str]] = []
    labels: set[str] = set()
    jumps: list[tuple[int, str]] = []
    group: list[tuple[int, str]] = []  # open MOVC/MOVS run
    state = "job"

    def close_group(lineno):
        if group:
            diags.append(Diagnostic(lineno, "open-motion-group", f"{group[0][1]} group not closed by an FPT point"))
            group.clear()

    for no, raw in enumerate(lines, start=1):
        line = raw.strip()
        if state == "job":
            if line != "/JOB":
                diags.append(Diagnostic(no, "structure", "program must start with /JOB"))
            state = "name"
        elif state == "name":
            if not re.fullmatch(r"//NAME \w+", line):
                diags.append(Diagnostic(no, "structure", "expected //NAME <job>"))
            state = "pos"
        elif state == "pos":
            if line != "//POS":
                diags.append(Diagnostic(no, "structure", "expected //POS"))
            state = "records"
        elif state == "records":
            if line == "//INST":
                state = "inst"
            elif line.startswith("///"):
                pass
            else:
                m = _I_POSE.match(line)
                if not m:
                    diags.append(Diagnostic(no, "syntax", f"bad pose record: {line!r}"))
                elif m.group(1) in declared:
                    diags.append(Diagnostic(no, "duplicate-pose", f"{m.group(1)} declared twice"))
                else:
                    declared.add(m.group(1))
        elif state == "inst":
            if line == "NOP":
                state = "body"
            elif not line.startswith("///"):
                diags.append(Diagnostic(no, "structure", "expected attribute lines then NOP"))
        elif state == "body":
            if line == "END":
                close_group(no)
                state = "end"
                continue
            for kind, rx in _I_BODY:
                m = rx.match(line)
                if m:
                    break
            else:
                close_group(no)
                diags.append(Diagnostic(no, "syntax", f"unrecognized instruction: {line!r}"))
                continue
            if kind == "group":
                op, ref, fpt = m.groups()
                if group and group[0][1] != op:
                    close_group(no)
                group.append((no, op))
                refs.append((no, ref))
                if fpt:
                    size = len(group)
                    if op == "MOVC" and size != 2:
                        diags.append(Diagnostic(no, "bad-motion-group", f"MOVC group needs one via point, got {size - 1}"))
                    if op == "MOVS" and size < 2:
                        diags.append(Diagnostic(no, "bad-motion-group", "MOVS group needs at least one via point"))
                    group.clear()
                continue
            close_group(no)
            if kind == "move":
                refs.append((no, m.group(1)))
            elif kind == "add":
                refs += [(no, m.group(1)), (no, m.group(2))]
            elif kind == "label":
                labels.add(m.group(1))
            elif kind == "jump":
                jumps.append((no, m.group(1)))
        elif state == "end":
            if line:
                diags.append(Diagnostic(no, "structure", "text after END"))

    if state != "end":
        diags.append(Diagnostic(len(lines), "structure", "program does not terminate with END"))
    for no, ref in refs:
        if ref not in declared:
            diags.append(Diagnostic(no, "undeclared-pose", f"{ref} is not declared in //POS"))
    for no, lab in jumps:
        if lab not in labels:
            diags.append(Diagnostic(no, "undeclared-label", f"*{lab} is not defined"))
    return diags


# ------------------------------------------------------------------ RAPID

_EXTAX = r"\[9E\+09(?:,9E\+09){5}\]"
_R_ROBTARGET = re.compile(
    rf"^CONST robtarget (\w+):=\[\[({_NUM}(?:,{_NUM}){{2}})\],\[({_NUM}(?:,{_NUM}){{3}})\],\[0,0,0,0\],{_EXTAX}\];$"
)
_R_SPEED = re.compile(r"^CONST speeddata (v\d+):=\[\d+,\d+,\d+,\d+\];$")
_R_WOBJ = re.compile(r"^PERS wobjdata (\w+):=\[.*\];$")
_TAIL = r"tool0\\WObj:=(\w+);"
_R_MOVE = re.compile(rf"^(MoveJ|MoveL) (\w+), (v\d+), (fine|z\d+), {_TAIL}$")
_R_MOVEC = re.compile(rf"^MoveC (\w+), (\w+), (v\d+), (fine|z\d+), {_TAIL}$")
_R_SETDO = re.compile(r"^SetDO do\d+, [01];$")
_R_WAIT = re.compile(rf"^WaitTime {_NUM};$")
_R_FOR = re.compile(r"^FOR \w+ FROM \d+ TO \d+ DO$")


def _check_rapid(lines: list[str]) -> list[Diagnostic]:
    diags: list[Diagnostic] = []
    robtargets: set[str] = set()
    speeds: set[str] = set()
    wobjs: set[str] = set()
    uses: list[tuple[int, str, str]] = []
    state = "module"
    depth = 0

    for no, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("!"):
            continue
        if state == "module":
            if not re.fullmatch(r"MODULE \w+", line):
                diags.append(Diagnostic(no, "structure", "expected MODULE <name>"))
            state = "decls"
        elif state == "decls":
            if line == "PROC main()":
                state = "proc"
                continue
            m = _R_ROBTARGET.match(line)
            if m:
                if m.group(1) in robtargets:
                    diags.append(Diagnostic(no, "duplicate-pose", f"{m.group(1)} declared twice"))
                robtargets.add(m.group(1))
                continue
            m = _R_SPEED.match(line) or _R_WOBJ.match(line)
            if m:
                (speeds if line.startswith("CONST speeddata") else wobjs).add(m.group(1))
                continue
            diags.append(Diagnostic(no, "syntax", f"bad declaration: {line!r}"))
        elif state == "proc":
            if line == "ENDPROC":
                if depth:
                    diags.append(Diagnostic(no, "structure", "FOR without ENDFOR"))
                state = "endmodule"
                continue
            m = _R_MOVE.match(line)
            if m:
                uses += [(no, "pose", m.group(2)), (no, "speed", m.group(3)), (no, "wobj", m.group(5))]
                continue
            m = _R_MOVEC.match(line)
            if m:
                uses += [
                    (no, "pose", m.group(1)), (no, "pose", m.group(2)),
                    (no, "speed", m.group(3)), (no, "wobj", m.group(5)),
                ]
                continue
            if _R_SETDO.match(line) or _R_WAIT.match(line):
                continue
            if _R_FOR.match(line):
                depth += 1
                continue
            if line == "ENDFOR":
                if depth == 0:
                    diags.append(Diagnostic(no, "structure", "ENDFOR without FOR"))
                depth = max(0, depth - 1)
                continue
            diags.append(Diagnostic(no, "syntax", f"unrecognized statement: {line!r}"))
        elif state == "endmodule":
            if line != "ENDMODULE":
                diags.append(Diagnostic(no, "structure", "expected ENDMODULE"))
            state = "done"
        else:
            diags.append(Diagnostic(no, "structure", "text after ENDMODULE"))

    if state != "done":
        diags.append(Diagnostic(len(lines), "structure", "module is not closed"))
    known = {"pose": robtargets, "speed": speeds, "wobj": wobjs}
    codes = {"pose": "undeclared-pose", "speed": "undeclared-speed", "wobj": "undeclared-wobj"}
    for no, what, name in uses:
        if name not in known[what]:
            diags.append(Diagnostic(no, codes[what], f"{name} is not declared"))
    return diags


def _dialect(dialect: str) -> str:
    if dialect not in DIALECTS:
        raise ValueError(f"unknown dialect {dialect!r}")
    return dialect


def check_program(text: str, dialect: str) -> list[Diagnostic]:
    """Grammar and reference diagnostics; empty means the program is valid."""
    lines = text.splitlines()
    if _dialect(dialect) == "inform":
        return _check_inform(lines)
    return _check_rapid(lines)


def read_declarations(text: str, dialect: str) -> dict[str, tuple[float, ...]]:
    """Pose name -> numbers (x, y, z then Euler degrees or w, x, y, z)."""
    out = {}
    for raw in text.splitlines():
        line = raw.strip()
        if _dialect(dialect) == "inform":
            m = _I_POSE.match(line)
            if m:
                out[m.group(1)] = tuple(float(v) for v in m.group(2).split(","))
        else:
            m = _R_ROBTARGET.match(line)
            if m:
                nums = m.group(2).split(",") + m.group(3).split(",")
                out[m.group(1)] = tuple(float(v) for v in nums)
    return out


def count_motions(text: str, dialect: str) -> int:
    """Motion statements counted once per commanded end point.

    INFORM: MOVJ/MOVL/IMOV lines plus the FPT line closing each arc or
    spline group. RAPID: moves that stop at ``fine``; spline fit points are
    fly-by (``z``) moves and are not counted.
    """
    n = 0
    for raw in text.splitlines():
        line = raw.strip()
        if _dialect(dialect) == "inform":
            if re.match(r"^(MOVJ|MOVL|IMOV) ", line) or (re.match(r"^MOV[CS] ", line) and line.endswith(" FPT")):
                n += 1
        elif re.match(r"^Move[JLC] ", line) and ", fine, " in line:
            n += 1
    return n
