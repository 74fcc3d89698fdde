import io
import json
import os
import random
import shutil
from dataclasses import replace

import numpy as np
import pytest

from cellprog import cli, pipeline
from cellprog.pipeline import EXIT_INVALID, EXIT_IO, EXIT_OK, RunConfig, build, explain, plan_scene, run
from cellprog.scene import parse_scene
from cellprog.scene import write_scene as scene_text
from cellprog.transforms import OrientationTriple, euler_to_rot

from conftest import FIXTURES
from scenes import random_scene

IDENTITY_ROWS = [1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0]


def write_scene(path, tools=(), paths=(), **params):
    doc = {
        "units": "millimeter",
        "frames": [{"id": "B", "base": True, "transform": IDENTITY_ROWS}],
        "tools": list(tools),
        "paths": list(paths),
        "params": {"speed_percent": 23, "cycles": 1, "approach_distance": 0,
                   "sample_width_dt": 0.1, "default_motion": "joint", **params},
    }
    path.write_text(json.dumps(doc))
    return path


def tool(name, xyz=(0, 0, 0)):
    return {"name": name, "transform": IDENTITY_ROWS[:9] + list(xyz)}


def listing(d):
    return sorted(p.name for p in d.iterdir()) if d.exists() else []


@pytest.fixture
def exp1(tmp_path):
    src = tmp_path / "experiment_1.json"
    shutil.copy(FIXTURES / "experiment_1.json", src)
    return src


# ------------------------------------------------------------------ runs

def test_experiment_1_run(exp1, tmp_path):
    out = tmp_path / "out"
    assert run(RunConfig(exp1, output_dir=out)) == EXIT_OK
    assert listing(out) == ["experiment_1.jbi", "experiment_1.mod", "experiment_1.report.json"]
    report = json.loads((out / "experiment_1.report.json").read_text())
    assert report["counts"]["targets"] == 12
    assert report["counts"]["motion_instructions"] == {"inform": 12, "rapid": 12}
    assert report["counts"]["poses"] == {"inform": 10, "rapid": 10}
    assert report["warnings"] == []


def test_single_dialect(exp1, tmp_path):
    out = tmp_path / "out"
    assert run(RunConfig(exp1, dialects=["rapid"], output_dir=out)) == EXIT_OK
    assert listing(out) == ["experiment_1.mod", "experiment_1.report.json"]


def test_invalid_scene_writes_nothing(tmp_path):
    src = write_scene(tmp_path / "dup.json", [tool("step_1"), tool("step_1A")])
    out = tmp_path / "out"
    err = io.StringIO()
    assert run(RunConfig(src, output_dir=out), err) == EXIT_INVALID
    assert listing(out) == []
    assert "duplicate-sequence" in err.getvalue()
    assert "[validate]" in err.getvalue()


def test_unreadable_input(tmp_path):
    err = io.StringIO()
    assert run(RunConfig(tmp_path / "missing.json", output_dir=tmp_path / "out"), err) == EXIT_IO
    assert "[read]" in err.getvalue()
    assert listing(tmp_path / "out") == []


def test_parse_error_is_invalid(tmp_path):
    src = tmp_path / "bad.json"
    src.write_text("{not json")
    assert run(RunConfig(src, output_dir=tmp_path / "out"), io.StringIO()) == EXIT_INVALID


def test_empty_scene_is_invalid_for_generation(tmp_path):
    src = write_scene(tmp_path / "empty.json")
    assert run(RunConfig(src, output_dir=tmp_path / "out"), io.StringIO()) == EXIT_INVALID


def test_runs_are_idempotent(exp1, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(RunConfig(exp1, output_dir=a)) == EXIT_OK
    assert run(RunConfig(exp1, output_dir=b)) == EXIT_OK
    assert run(RunConfig(exp1, output_dir=b)) == EXIT_OK
    for name in listing(a):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_overrides_take_precedence(exp1, tmp_path):
    files, report = build(RunConfig(exp1, speed=50, cycles=2, approach=20, motion="linear"))
    p = report["params"]
    assert (p["speed_percent"], p["cycles"], p["approach_distance"], p["default_motion"]) == (50, 2, 20, "linear")
    # six op targets, each bracketed by two approach moves
    assert report["counts"]["targets"] == 12 + 12
    assert "MOVL P0002 V=50.00" in files["experiment_1.jbi"]
    assert "FOR cycle FROM 1 TO 2 DO" in files["experiment_1.mod"]


def test_bad_override_is_a_config_error(exp1, tmp_path):
    err = io.StringIO()
    assert run(RunConfig(exp1, output_dir=tmp_path / "o", speed=250), err) == EXIT_INVALID
    assert "[config]" in err.getvalue()


def test_unknown_dialect_rejected():
    with pytest.raises(ValueError):
        RunConfig("x.json", dialects=["karel"])


def test_experiment_2_densifies_risk_segment():
    files, report = build(RunConfig(FIXTURES / "experiment_2.json"))
    rows = report["targets"]
    chain = [r for r in rows if r["source_id"].startswith("risk_1")]
    assert len(chain) == 10
    xs = [r["x"] for r in chain]
    assert np.allclose(np.diff(xs), -20.0, atol=1e-9)
    assert report["counts"]["motion_instructions"]["inform"] == report["counts"]["motion_instructions"]["rapid"]


# --------------------------------------------------------- stage isolation

STAGE_FUNCS = [
    ("parse", "parse_scene"),
    ("validate", "validate_scene"),
    ("extract", "extract_targets"),
    ("approach", "insert_approach_departure"),
    ("interpolate", "densify_risk_segments"),
    ("lower", "lower"),
    ("emit", "emit_rapid"),
    ("check", "check_program"),
]


@pytest.mark.parametrize("stage,func", STAGE_FUNCS)
def test_failure_in_any_stage_leaves_no_files(exp1, tmp_path, monkeypatch, stage, func):
    def boom(*args, **kwargs):
        raise ValueError(f"injected {stage} failure")

    monkeypatch.setattr(pipeline, func, boom)
    out = tmp_path / "out"
    err = io.StringIO()
    assert run(RunConfig(exp1, output_dir=out), err) == EXIT_INVALID
    assert listing(out) == []
    assert f"[{stage}]" in err.getvalue()


def test_check_diagnostics_abort_the_run(exp1, tmp_path, monkeypatch):
    monkeypatch.setattr(pipeline, "emit_inform", lambda ir: "garbage\n")
    out = tmp_path / "out"
    assert run(RunConfig(exp1, output_dir=out), io.StringIO()) == EXIT_INVALID
    assert listing(out) == []


def test_write_failure_rolls_back(exp1, tmp_path, monkeypatch):
    out = tmp_path / "out"
    real = os.replace
    calls = []

    def flaky(src, dst):
        calls.append(dst)
        if len(calls) == 2:
            raise OSError(28, "No space left on device")
        return real(src, dst)

    monkeypatch.setattr(pipeline.os, "replace", flaky)
    err = io.StringIO()
    assert run(RunConfig(exp1, output_dir=out), err) == EXIT_IO
    assert listing(out) == []
    assert "[write]" in err.getvalue()


def test_write_failure_keeps_previous_outputs_untouched_elsewhere(exp1, tmp_path, monkeypatch):
    keep = tmp_path / "out" / "notes.txt"
    keep.parent.mkdir()
    keep.write_text("mine")
    monkeypatch.setattr(pipeline.os, "replace", lambda s, d: (_ for _ in ()).throw(OSError(13, "denied")))
    assert run(RunConfig(exp1, output_dir=keep.parent), io.StringIO()) == EXIT_IO
    assert listing(keep.parent) == ["notes.txt"]


# ------------------------------------------------------------ warnings

def test_unknown_suffix_warning_recorded(tmp_path):
    src = write_scene(tmp_path / "w.json", [tool("step_1"), tool("step_2Q")])
    _, report = build(RunConfig(src))
    assert len(report["warnings"]) == 1 and "step_2Q" in report["warnings"][0]


def test_strict_turns_warnings_into_errors(tmp_path):
    src = write_scene(tmp_path / "w.json", [tool("step_1"), tool("step_2Q")])
    out = tmp_path / "out"
    assert run(RunConfig(src, output_dir=out, strict=True), io.StringIO()) == EXIT_INVALID
    assert listing(out) == []


# ------------------------------------------------------------- explain

def test_explain_empty_scene_prints_header_only(tmp_path):
    src = write_scene(tmp_path / "empty.json")
    buf = io.StringIO()
    assert explain(src, buf) == EXIT_OK
    assert buf.getvalue().splitlines() == ["#  seq  source  motion  op  x  y  z  rx  ry  rz"]


def test_explain_lists_targets_in_order(tmp_path):
    src = write_scene(tmp_path / "two.json", [tool("step_2", (5, 0, 0)), tool("step_1", (1, 2, 3))])
    buf = io.StringIO()
    assert explain(src, buf) == EXIT_OK
    rows = buf.getvalue().splitlines()[1:]
    assert [r.split()[2] for r in rows] == ["step_1", "step_2"]
    assert rows[0].split()[5:8] == ["1.000000", "2.000000", "3.000000"]


def test_explain_angles_reproduce_orientation():
    buf = io.StringIO()
    assert explain(FIXTURES / "experiment_2.json", buf) == EXIT_OK
    plan = plan_scene(parse_scene((FIXTURES / "experiment_2.json").read_bytes()))
    rows = buf.getvalue().splitlines()[1:]
    assert len(rows) == len(plan.targets)
    for row, t in zip(rows, plan.targets):
        rx, ry, rz = (float(v) for v in row.split()[-3:])
        r = euler_to_rot(OrientationTriple.from_degrees(rx, ry, rz))
        assert np.max(np.abs(r - t.pose_in_B.rotation)) < 1e-6


def test_explain_reports_invalid_scene(tmp_path):
    src = write_scene(tmp_path / "dup.json", [tool("step_1"), tool("step_1B")])
    err = io.StringIO()
    assert explain(src, io.StringIO(), err) == EXIT_INVALID
    assert "duplicate-sequence" in err.getvalue()


# ----------------------------------------------------------------- CLI

def test_cli_generates_files(exp1, tmp_path):
    out = tmp_path / "cli"
    assert cli.main([str(exp1), "--out", str(out), "--dialect", "inform"]) == EXIT_OK
    assert listing(out) == ["experiment_1.jbi", "experiment_1.report.json"]


def test_cli_explain(exp1, capsys):
    assert cli.main([str(exp1), "--explain"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 13


def test_cli_missing_file(tmp_path, capsys):
    assert cli.main([str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == EXIT_IO
    assert "cellprog: error [read]" in capsys.readouterr().err


def test_cli_usage_error():
    with pytest.raises(SystemExit) as exc:
        cli.main(["x.json", "--dialect", "karel"])
    assert exc.value.code == 2


# ----------------------------------------------------- report fidelity

@pytest.mark.parametrize("seed", range(25))
def test_report_counts_match_emitted_motions(tmp_path, seed):
    rng = random.Random(seed)
    doc = random_scene(rng, n_steps=rng.randint(1, 6))
    # make the line a risk segment so densified chains are counted too
    paths = tuple(replace(p, risk=True, risk_samples=rng.randint(2, 15)) if p.kind == "line" else p
                  for p in doc.paths)
    params = replace(doc.params, cycles=rng.randint(1, 3), approach_distance=rng.choice([0.0, 30.0]))
    src = tmp_path / "rand.json"
    src.write_text(scene_text(replace(doc, paths=paths, params=params)))
    try:
        files, report = build(RunConfig(src))
    except pipeline.StageError as exc:
        # a half-turn between risk endpoints is a legitimate refusal
        assert exc.stage == "interpolate" and "half turn" in str(exc)
        return
    counts = report["counts"]
    assert counts["motion_instructions"] == {"inform": counts["targets"], "rapid": counts["targets"]}
