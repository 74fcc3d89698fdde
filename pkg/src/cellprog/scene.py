"""Scene document model, JSON scene format reader/writer and structural
validation.

A scene file is UTF-8 JSON::

    {
      "units": "millimeter",
      "frames": [{"id": "B", "base": true, "transform": [12 numbers]}],
      "tools": [{"name": "step_1", "transform": [...], "workpoint": [x, y, z]}],
      "paths": [{"id": "L1", "kind": "line", "points": [x, y, z, x, y, z],
                 "orientation_tool": "step_1", "risk": false}],
      "params": {"speed_percent": 23, "cycles": 1, "approach_distance": 0,
                 "sample_width_dt": 0.1, "default_motion": "joint"}
    }

Transforms are 12 numbers: the three rotation rows followed by the
translation. Every length is converted to millimeters once, at parse time.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from .errors import SceneError
from .transforms import Point3, Transform

UNIT_FACTORS = {"millimeter": 1.0, "centimeter": 10.0, "meter": 1000.0}
PATH_KINDS = ("line", "arc", "spline")
MOTIONS = ("joint", "linear")

#: Orthonormality tolerance applied to scene rotation blocks.
SCENE_ROT_TOL = 1e-6

STEP_PREFIX = "step_"
_STEP_RE = re.compile(r"^step_([1-9][0-9]*)([A-Z])?$")


@dataclass(frozen=True)
class FrameDef:
    id: str
    transform_in_U: Transform
    base: bool = False


@dataclass(frozen=True)
class ToolModel:
    name: str
    transform_in_U: Transform
    workpoint_in_U: Point3 | None = None

    @property
    def position_in_U(self) -> Point3:
        # no WorkPoint: fall back to the tool origin
        if self.workpoint_in_U is None:
            return self.transform_in_U.position
        return self.workpoint_in_U

    @property
    def is_motion_tool(self) -> bool:
        return self.name.startswith(STEP_PREFIX)


@dataclass(frozen=True)
class PathEntity:
    id: str
    kind: str
    points_in_U: tuple[Point3, ...]
    orientation_tool: str | None = None
    risk: bool = False
    risk_samples: int | None = None

    def __post_init__(self):
        _check_path_shape(self.kind, len(self.points_in_U), self.risk, self.risk_samples)


@dataclass(frozen=True)
class ProcessParams:
    speed_percent: float = 23.0
    cycles: int = 1
    home_pose_in_B: Transform | None = None
    approach_distance: float = 0.0
    sample_width_dt: float = 0.1
    default_motion: str = "joint"
    # suffix letter -> digital output channel; letters not listed use channel 1
    output_channels: Mapping[str, int] = field(default_factory=dict)
    timer_seconds: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.speed_percent <= 100.0):
            raise SceneError("speed_percent must be in (0, 100]", "params.speed_percent")
        if isinstance(self.cycles, bool) or not isinstance(self.cycles, int) or self.cycles < 1:
            raise SceneError("cycles must be a positive integer", "params.cycles")
        if not (self.approach_distance >= 0.0 and math.isfinite(self.approach_distance)):
            raise SceneError("approach_distance must be >= 0", "params.approach_distance")
        if not (self.sample_width_dt > 0.0 and math.isfinite(self.sample_width_dt)):
            raise SceneError("sample_width_dt must be > 0", "params.sample_width_dt")
        if self.default_motion not in MOTIONS:
            raise SceneError(f"default_motion must be one of {MOTIONS}", "params.default_motion")
        if not (self.timer_seconds > 0.0 and math.isfinite(self.timer_seconds)):
            raise SceneError("timer_seconds must be > 0", "params.timer_seconds")
        for letter, ch in self.output_channels.items():
            if not re.fullmatch(r"[A-Z]", letter) or isinstance(ch, bool) or not isinstance(ch, int) or ch < 1:
                raise SceneError(
                    "output_channels maps an uppercase letter to a positive integer",
                    f"params.output_channels.{letter}",
                )

    def channel_for(self, suffix: str | None) -> int:
        return int(self.output_channels.get(suffix or "", 1))


@dataclass(frozen=True)
class SceneDocument:
    units: str
    frames: tuple[FrameDef, ...]
    tools: tuple[ToolModel, ...]
    paths: tuple[PathEntity, ...]
    params: ProcessParams

    def base_frames(self) -> list[FrameDef]:
        return [f for f in self.frames if f.base]

    def tool(self, name: str) -> ToolModel | None:
        for t in self.tools:
            if t.name == name:
                return t
        return None


def _check_path_shape(kind, count, risk, risk_samples, where=None):
    if kind not in PATH_KINDS:
        raise SceneError(f"unknown path kind {kind!r}", where and f"{where}.kind")
    ok = {"line": count == 2, "arc": count == 3, "spline": count >= 3}[kind]
    if not ok:
        need = {"line": "2", "arc": "3", "spline": "at least 3"}[kind]
        raise SceneError(f"{kind} path needs {need} points, got {count}", where and f"{where}.points")
    if risk_samples is not None:
        if not risk:
            raise SceneError("risk_samples given on a path that is not risk-flagged", where and f"{where}.risk_samples")
        if isinstance(risk_samples, bool) or not isinstance(risk_samples, int) or risk_samples < 2:
            raise SceneError("risk_samples must be an integer >= 2", where and f"{where}.risk_samples")


# ---------------------------------------------------------------- parsing

_TOP_KEYS = ("units", "frames", "tools", "paths", "params")
_FRAME_KEYS = ("id", "base", "transform")
_TOOL_KEYS = ("name", "transform", "workpoint")
_PATH_KEYS = ("id", "kind", "points", "orientation_tool", "risk", "risk_samples")
_PARAM_KEYS = (
    "speed_percent", "cycles", "home", "approach_distance", "sample_width_dt",
    "default_motion", "output_channels", "timer_seconds",
)


def _obj(value, where, allowed, required=()):
    if not isinstance(value, dict):
        raise SceneError("expected an object", where)
    for k in value:
        if k not in allowed:
            raise SceneError(f"unknown key {k!r}", where)
    for k in required:
        if k not in value:
            raise SceneError(f"missing key {k!r}", where)
    return value


def _num(value, where) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SceneError("expected a number", where)
    v = float(value)
    if not math.isfinite(v):
        raise SceneError("number must be finite", where)
    return v


def _int(value, where) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SceneError("expected an integer", where)
    return value


def _str(value, where) -> str:
    if not isinstance(value, str) or not value:
        raise SceneError("expected a non-empty string", where)
    return value


def _bool(value, where) -> bool:
    if not isinstance(value, bool):
        raise SceneError("expected true or false", where)
    return value


def _numbers(value, where, count=None) -> list[float]:
    if not isinstance(value, list):
        raise SceneError("expected a list of numbers", where)
    if count is not None and len(value) != count:
        raise SceneError(f"expected {count} numbers, got {len(value)}", where)
    return [_num(v, f"{where}[{i}]") for i, v in enumerate(value)]


def _transform(value, where, scale) -> Transform:
    v = _numbers(value, where, 12)
    # rotation stays raw here; validate_scene reports non-orthonormal blocks
    return Transform.from_rows(v[:9] + [c * scale for c in v[9:]], check=False)


def _point(values, scale) -> Point3:
    return Point3(*(c * scale for c in values))


def parse_scene(data: bytes | str) -> SceneDocument:
    """Parse scene text into a :class:`SceneDocument` (lengths in mm)."""
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise SceneError(f"input is not UTF-8 ({exc.reason})", f"byte {exc.start}") from None
    try:
        raw = json.loads(data)
    except json.JSONDecodeError as exc:
        raise SceneError(exc.msg, f"line {exc.lineno} col {exc.colno}") from None
    return scene_from_dict(raw)


def scene_from_dict(raw: Any) -> SceneDocument:
    _obj(raw, "<document>", _TOP_KEYS, _TOP_KEYS)
    units = raw["units"]
    if units not in UNIT_FACTORS:
        raise SceneError(f"unknown unit {units!r} (use one of {', '.join(UNIT_FACTORS)})", "units")
    scale = UNIT_FACTORS[units]

    for key in ("frames", "tools", "paths"):
        if not isinstance(raw[key], list):
            raise SceneError("expected a list", key)

    frames = []
    for i, f in enumerate(raw["frames"]):
        w = f"frames[{i}]"
        _obj(f, w, _FRAME_KEYS, ("id", "transform"))
        frames.append(
            FrameDef(
                id=_str(f["id"], f"{w}.id"),
                transform_in_U=_transform(f["transform"], f"{w}.transform", scale),
                base=_bool(f.get("base", False), f"{w}.base"),
            )
        )

    tools = []
    seen = set()
    for i, t in enumerate(raw["tools"]):
        w = f"tools[{i}]"
        _obj(t, w, _TOOL_KEYS, ("name", "transform"))
        name = _str(t["name"], f"{w}.name")
        if name in seen:
            raise SceneError(f"duplicate tool name {name!r}", f"{w}.name")
        seen.add(name)
        wp = None
        if t.get("workpoint") is not None:
            wp = _point(_numbers(t["workpoint"], f"{w}.workpoint", 3), scale)
        tools.append(ToolModel(name, _transform(t["transform"], f"{w}.transform", scale), wp))

    paths = []
    for i, p in enumerate(raw["paths"]):
        w = f"paths[{i}]"
        _obj(p, w, _PATH_KEYS, ("id", "kind", "points"))
        pid = _str(p["id"], f"{w}.id")
        kind = p["kind"]
        flat = _numbers(p["points"], f"{w}.points")
        if len(flat) % 3:
            raise SceneError("points must be a flat list of x y z triples", f"{w}.points")
        pts = tuple(_point(flat[j:j + 3], scale) for j in range(0, len(flat), 3))
        risk = _bool(p.get("risk", False), f"{w}.risk")
        samples = p.get("risk_samples")
        if samples is not None:
            samples = _int(samples, f"{w}.risk_samples")
        otool = p.get("orientation_tool")
        if otool is not None:
            otool = _str(otool, f"{w}.orientation_tool")
        _check_path_shape(kind, len(pts), risk, samples, w)
        paths.append(PathEntity(pid, kind, pts, otool, risk, samples))

    params = _params(raw["params"], scale)
    return SceneDocument(units, tuple(frames), tuple(tools), tuple(paths), params)


def _params(p, scale) -> ProcessParams:
    w = "params"
    _obj(p, w, _PARAM_KEYS, ("speed_percent", "cycles", "approach_distance", "sample_width_dt", "default_motion"))
    home = None
    if p.get("home") is not None:
        home = _transform(p["home"], f"{w}.home", scale)
    channels = p.get("output_channels", {})
    if not isinstance(channels, dict):
        raise SceneError("expected an object", f"{w}.output_channels")
    channels = {k: _int(v, f"{w}.output_channels.{k}") for k, v in channels.items()}
    motion = p["default_motion"]
    if not isinstance(motion, str):
        raise SceneError("expected a string", f"{w}.default_motion")
    return ProcessParams(
        speed_percent=_num(p["speed_percent"], f"{w}.speed_percent"),
        cycles=_int(p["cycles"], f"{w}.cycles"),
        home_pose_in_B=home,
        approach_distance=_num(p["approach_distance"], f"{w}.approach_distance") * scale,
        sample_width_dt=_num(p["sample_width_dt"], f"{w}.sample_width_dt"),
        default_motion=motion,
        output_channels=channels,
        timer_seconds=_num(p.get("timer_seconds", 1.0), f"{w}.timer_seconds"),
    )


# ---------------------------------------------------------------- writing

def format_number(v: float) -> str:
    """15 significant digits, JSON-compatible."""
    if v == 0.0:
        return "0"
    s = f"{v:.15g}"
    if "e" in s:
        mant, exp = s.split("e")
        s = f"{mant}e{int(exp)}"
    return s


def _nums(values) -> str:
    return "[" + ", ".join(format_number(float(v)) for v in values) + "]"


def write_scene(doc: SceneDocument) -> str:
    """Canonical, deterministic scene text. Lengths are written in mm."""
    lines = ["{", '  "units": "millimeter",']

    def block(key, items, last=False):
        if not items:
            lines.append(f'  "{key}": []' + ("" if last else ","))
            return
        lines.append(f'  "{key}": [')
        for i, fields in enumerate(items):
            body = ", ".join(f'"{k}": {v}' for k, v in fields)
            lines.append("    {" + body + "}" + ("," if i < len(items) - 1 else ""))
        lines.append("  ]" + ("" if last else ","))

    block("frames", [
        [("id", json.dumps(f.id)), ("base", json.dumps(f.base)), ("transform", _nums(f.transform_in_U.to_rows()))]
        for f in doc.frames
    ])
    tools = []
    for t in doc.tools:
        fields = [("name", json.dumps(t.name)), ("transform", _nums(t.transform_in_U.to_rows()))]
        if t.workpoint_in_U is not None:
            fields.append(("workpoint", _nums(t.workpoint_in_U)))
        tools.append(fields)
    block("tools", tools)
    paths = []
    for p in doc.paths:
        fields = [
            ("id", json.dumps(p.id)),
            ("kind", json.dumps(p.kind)),
            ("points", _nums([c for pt in p.points_in_U for c in pt])),
        ]
        if p.orientation_tool is not None:
            fields.append(("orientation_tool", json.dumps(p.orientation_tool)))
        fields.append(("risk", json.dumps(p.risk)))
        if p.risk_samples is not None:
            fields.append(("risk_samples", str(p.risk_samples)))
        paths.append(fields)
    block("paths", paths)

    pr = doc.params
    lines.append('  "params": {')
    entries = [
        ("speed_percent", format_number(pr.speed_percent)),
        ("cycles", str(pr.cycles)),
    ]
    if pr.home_pose_in_B is not None:
        entries.append(("home", _nums(pr.home_pose_in_B.to_rows())))
    entries += [
        ("approach_distance", format_number(pr.approach_distance)),
        ("sample_width_dt", format_number(pr.sample_width_dt)),
        ("default_motion", json.dumps(pr.default_motion)),
    ]
    if pr.output_channels:
        chans = ", ".join(f'"{k}": {v}' for k, v in sorted(pr.output_channels.items()))
        entries.append(("output_channels", "{" + chans + "}"))
    if pr.timer_seconds != 1.0:
        entries.append(("timer_seconds", format_number(pr.timer_seconds)))
    for i, (k, v) in enumerate(entries):
        lines.append(f'    "{k}": {v}' + ("," if i < len(entries) - 1 else ""))
    lines.append("  }")
    lines.append("}")
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------- validation

@dataclass(frozen=True, order=True)
class Violation:
    entity_id: str
    code: str
    message: str = field(compare=True, default="")


def step_sequence(name: str) -> tuple[int, str | None] | None:
    """``(sequence, suffix)`` for a well-formed step name, else None."""
    m = _STEP_RE.match(name)
    if not m:
        return None
    return int(m.group(1)), m.group(2)


def _rotation_problem(t: Transform, tol: float = SCENE_ROT_TOL) -> str | None:
    r = t.rotation
    norms = np.linalg.norm(r, axis=0)
    worst_norm = float(np.max(np.abs(norms - 1.0)))
    dots = [abs(float(r[:, i] @ r[:, j])) for i, j in ((0, 1), (0, 2), (1, 2))]
    if worst_norm > tol:
        return f"rotation column norm off by {worst_norm:.3g}"
    if max(dots) > tol:
        return f"rotation columns not orthogonal (|dot| = {max(dots):.3g})"
    if np.linalg.det(r) < 0.0:
        return "rotation block is a reflection (det < 0)"
    return None


def validate_scene(doc: SceneDocument) -> list[Violation]:
    """Structural checks; returns violations sorted by entity id then code."""
    out: list[Violation] = []

    n_base = len(doc.base_frames())
    if n_base != 1:
        out.append(Violation("<scene>", "base-frame-count", f"expected exactly one base frame, found {n_base}"))

    for f in doc.frames:
        problem = _rotation_problem(f.transform_in_U)
        if problem:
            out.append(Violation(f.id, "non-orthonormal", problem))

    first_holder: dict[int, str] = {}
    motion_tools = set()
    for t in doc.tools:
        problem = _rotation_problem(t.transform_in_U)
        if problem:
            out.append(Violation(t.name, "non-orthonormal", problem))
        if not t.is_motion_tool:
            continue
        parsed = step_sequence(t.name)
        if parsed is None:
            out.append(Violation(
                t.name, "malformed-step-name",
                "expected step_<positive number> optionally followed by one uppercase letter",
            ))
            continue
        motion_tools.add(t.name)
        seq = parsed[0]
        if seq in first_holder:
            out.append(Violation(
                t.name, "duplicate-sequence",
                f"sequence number {seq} already used by {first_holder[seq]}",
            ))
        else:
            first_holder[seq] = t.name

    seen_ids = {t.name for t in doc.tools}
    for p in doc.paths:
        if p.id in seen_ids:
            out.append(Violation(p.id, "duplicate-id", "path id clashes with another tool or path"))
        seen_ids.add(p.id)
        if p.orientation_tool is not None and p.orientation_tool not in motion_tools:
            if doc.tool(p.orientation_tool) is None:
                msg = f"orientation_tool {p.orientation_tool!r} does not exist"
            else:
                msg = f"orientation_tool {p.orientation_tool!r} is not a step_ motion tool"
            out.append(Violation(p.id, "unknown-orientation-tool", msg))
        if p.risk and p.kind != "line":
            out.append(Violation(p.id, "risk-on-curve", "only line paths can be risk-densified"))

    home = doc.params.home_pose_in_B
    if home is not None:
        problem = _rotation_problem(home)
        if problem:
            out.append(Violation("params.home", "non-orthonormal", problem))

    return sorted(out)
