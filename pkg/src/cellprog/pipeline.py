"""End-to-end compile: scene file -> program files plus a JSON report.

Everything is computed in memory first; files are written to temporaries
and renamed into place only once every stage has succeeded.
"""
from __future__ import annotations

import json
import logging
import os
import tempfile
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence, TextIO

from .codegen import check_program, count_motions, emit_inform, emit_rapid, lower
from .errors import CellprogError, PlanWarning
from .extraction import MotionTarget, as_linear, extract_targets, insert_approach_departure
from .interpolation import InterpolationSpec, interpolate_segment
from .scene import ProcessParams, SceneDocument, parse_scene, validate_scene
from .transforms import Transform, remap_point, rot_to_euler

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_IO = 2

DIALECT_SUFFIX = {"inform": ".jbi", "rapid": ".mod"}
DIALECT_ENCODING = {"inform": "euler", "rapid": "quaternion"}
#: Interpolated points for a risk path that does not state its own count.
DEFAULT_RISK_SAMPLES = 11


class StageError(CellprogError):
    def __init__(self, stage: str, message: str, exit_code: int = EXIT_INVALID):
        self.stage = stage
        self.exit_code = exit_code
        super().__init__(f"[{stage}] {message}")


@dataclass
class RunConfig:
    input_path: Path
    dialects: Sequence[str] = ("inform", "rapid")
    output_dir: Path = Path(".")
    speed: float | None = None
    cycles: int | None = None
    approach: float | None = None
    motion: str | None = None
    verbosity: int = 0
    strict: bool = False

    def __post_init__(self):
        self.input_path = Path(self.input_path)
        self.output_dir = Path(self.output_dir)
        self.dialects = tuple(dict.fromkeys(self.dialects))
        if not self.dialects:
            raise ValueError("select at least one dialect")
        for d in self.dialects:
            if d not in DIALECT_SUFFIX:
                raise ValueError(f"unknown dialect {d!r}")

    def effective_params(self, params: ProcessParams) -> ProcessParams:
        overrides = {
            "speed_percent": self.speed,
            "cycles": self.cycles,
            "approach_distance": self.approach,
            "default_motion": self.motion,
        }
        return replace(params, **{k: v for k, v in overrides.items() if v is not None})


@dataclass
class Plan:
    doc: SceneDocument
    targets: list[MotionTarget]
    warnings: list[str] = field(default_factory=list)


def densify_risk_segments(targets: list[MotionTarget], doc: SceneDocument) -> list[MotionTarget]:
    """Replace each risk-flagged path target by its interpolated chain.

    The chain starts at the pose of the preceding target (where the robot
    already is), so only points k = 1..n-1 are inserted. Its end keeps the
    path's end position but takes the orientation of the next step target,
    so the orientation change up to that step is spread along the segment.
    """
    risky = {p.id: p for p in doc.paths if p.risk}
    out: list[MotionTarget] = []
    for i, t in enumerate(targets):
        path = risky.get(t.source_id)
        if path is None:
            out.append(t)
            continue
        spec = InterpolationSpec(path.risk_samples or DEFAULT_RISK_SAMPLES, doc.params.sample_width_dt)
        nxt = next((u for u in targets[i + 1:] if u.sequence > t.sequence), None)
        if nxt is not None:
            t = replace(t, pose_in_B=Transform(nxt.pose_in_B.rotation, t.pose_in_B.translation, check=False))
        if out:
            start = as_linear(out[-1])
        else:
            base = doc.base_frames()[0].transform_in_U.orthonormalized()
            p0 = remap_point(base, path.points_in_U[0])
            start = as_linear(replace(t, pose_in_B=Transform(t.pose_in_B.rotation, p0, check=False)))
        out.extend(interpolate_segment(start, t, spec)[1:])
    return out


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except CellprogError as exc:
        raise StageError(name, str(exc)) from exc
    except (ValueError, TypeError) as exc:
        raise StageError(name, str(exc)) from exc


def plan_scene(doc: SceneDocument, *, strict: bool = False, allow_empty: bool = False) -> Plan:
    """Validate, extract, bracket ops with approach moves, densify risk paths."""
    violations = _stage("validate", validate_scene, doc)
    if violations:
        listing = "; ".join(f"{v.entity_id}: {v.code} ({v.message})" for v in violations)
        raise StageError("validate", listing)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", PlanWarning)
        targets = _stage("extract", extract_targets, doc, allow_empty=allow_empty)
    messages = [str(w.message) for w in caught if issubclass(w.category, PlanWarning)]
    for m in messages:
        log.warning(m)
    if strict and messages:
        raise StageError("extract", "warnings treated as errors: " + "; ".join(messages))
    targets = _stage("approach", insert_approach_departure, targets, doc.params.approach_distance)
    targets = _stage("interpolate", densify_risk_segments, targets, doc)
    return Plan(doc, targets, messages)


def _target_row(i: int, t: MotionTarget) -> dict:
    e = rot_to_euler(t.pose_in_B.rotation)
    x, y, z = (float(v) for v in t.pose_in_B.translation)
    rx, ry, rz = e.degrees()
    return {
        "index": i,
        "sequence": t.sequence,
        "source_id": t.source_id,
        "motion": t.motion,
        "op": t.op,
        "x": x, "y": y, "z": z,
        "rx": rx, "ry": ry, "rz": rz,
    }


def load_scene(path: Path) -> SceneDocument:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise StageError("read", f"cannot read {path}: {exc.strerror or exc}", EXIT_IO) from exc
    return _stage("parse", parse_scene, data)


def build(config: RunConfig) -> tuple[dict[str, str], dict]:
    """Run every stage in memory. Returns ``({filename: text}, report)``."""
    doc = load_scene(config.input_path)
    params = _stage("config", config.effective_params, doc.params)
    doc = replace(doc, params=params)
    plan = plan_scene(doc, strict=config.strict)

    job = config.input_path.stem
    files: dict[str, str] = {}
    motions: dict[str, int] = {}
    poses: dict[str, int] = {}
    home_moves = 2 if params.home_pose_in_B is not None else 0
    for dialect in config.dialects:
        ir = _stage("lower", lower, plan.targets, params, DIALECT_ENCODING[dialect], job)
        emit = emit_inform if dialect == "inform" else emit_rapid
        text = _stage("emit", emit, ir)
        diags = _stage("check", check_program, text, dialect)
        if diags:
            first = diags[0]
            raise StageError("check", f"{dialect} output line {first.line}: {first.code} ({first.message})")
        files[job + DIALECT_SUFFIX[dialect]] = text
        motions[dialect] = count_motions(text, dialect) - home_moves
        poses[dialect] = len(ir.declarations)
        log.info("%s: %d poses, %d motion instructions", dialect, poses[dialect], motions[dialect])

    report = {
        "job": job,
        "input": str(config.input_path),
        "dialects": list(config.dialects),
        "params": {
            "speed_percent": params.speed_percent,
            "cycles": params.cycles,
            "approach_distance": params.approach_distance,
            "sample_width_dt": params.sample_width_dt,
            "default_motion": params.default_motion,
            "home": params.home_pose_in_B is not None,
        },
        "counts": {
            "targets": len(plan.targets),
            "poses": poses,
            "home_moves": home_moves,
            "motion_instructions": motions,
        },
        "targets": [_target_row(i, t) for i, t in enumerate(plan.targets, start=1)],
        "warnings": plan.warnings,
    }
    files[job + ".report.json"] = json.dumps(report, indent=2) + "\n"
    return files, report


def write_outputs(files: dict[str, str], out_dir: Path) -> list[Path]:
    """Write every file or none: temporaries first, then rename into place."""
    out_dir = Path(out_dir)
    temps: list[tuple[str, Path]] = []
    placed: list[Path] = []
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for name, text in files.items():
            fd, tmp = tempfile.mkstemp(prefix=f".{name}.", suffix=".tmp", dir=out_dir)
            temps.append((name, Path(tmp)))
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        for name, tmp in temps:
            dest = out_dir / name
            os.replace(tmp, dest)
            placed.append(dest)
    except OSError as exc:
        for _, tmp in temps:
            tmp.unlink(missing_ok=True)
        for dest in placed:
            dest.unlink(missing_ok=True)
        raise StageError("write", f"cannot write to {out_dir}: {exc.strerror or exc}", EXIT_IO) from exc
    return placed


def run(config: RunConfig, stderr: TextIO | None = None) -> int:
    try:
        files, report = build(config)
        written = write_outputs(files, config.output_dir)
    except StageError as exc:
        _complain(stderr, exc)
        return exc.exit_code
    for path in written:
        log.info("wrote %s", path)
    return EXIT_OK


def explain(input_path: Path, out: TextIO, stderr: TextIO | None = None, *, strict: bool = False) -> int:
    """Print the planned target table without generating programs."""
    try:
        doc = load_scene(Path(input_path))
        plan = plan_scene(doc, strict=strict, allow_empty=True)
    except StageError as exc:
        _complain(stderr, exc)
        return exc.exit_code
    out.write(format_table(plan.targets))
    return EXIT_OK


_HEADER = ("#", "seq", "source", "motion", "op", "x", "y", "z", "rx", "ry", "rz")


def format_table(targets: Sequence[MotionTarget]) -> str:
    rows = []
    for i, t in enumerate(targets, start=1):
        r = _target_row(i, t)
        rows.append(
            [str(i), str(r["sequence"]), r["source_id"], r["motion"], r["op"]]
            + [f"{round(r[k], 6) + 0.0:.6f}" for k in ("x", "y", "z", "rx", "ry", "rz")]
        )
    widths = [max([len(h)] + [len(row[c]) for row in rows]) for c, h in enumerate(_HEADER)]
    numeric = set(range(5, 11)) | {0, 1}

    def fmt(cells):
        return "  ".join(c.rjust(w) if i in numeric else c.ljust(w) for i, (c, w) in enumerate(zip(cells, widths))).rstrip()

    lines = [fmt(_HEADER)] + [fmt(r) for r in rows]
    return "\n".join(lines) + "\n"


def _complain(stream: TextIO | None, exc: StageError) -> None:
    log.debug("stage failure", exc_info=exc)
    if stream is not None:
        stream.write(f"cellprog: error {exc}\n")
