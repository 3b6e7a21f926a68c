"""Command-line workflows driven through the in-process entry point.

Every test calls main(argv) directly so the documented exit-code mapping
(0 ok, 1 usage/config, 2 data, 3 I/O) is exercised without subprocesses.
"""

import hashlib
import json
from pathlib import Path

import pytest

from synthpose.cli import main
from synthpose.coco import dumps_canonical, parse_dataset
from synthpose.randomize import RandomizerConfig, preset

from _fixtures import coco_file_obj, raw_annotation, raw_image, write_json


def _run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def _generate(capsys, out_dir, *, frames=4, seed=7, jobs=None,
              preset_name="psp-hdri", config_path=None):
    argv = ["generate", "--seed", str(seed), "--frames", str(frames),
            "--out", str(out_dir)]
    if config_path is not None:
        argv += ["--config", str(config_path)]
    else:
        argv += ["--preset", preset_name]
    if jobs is not None:
        argv += ["--jobs", str(jobs)]
    return _run(capsys, *argv)


# ---------------------------------------------------------------------------
# version and usage errors (exit 1)
# ---------------------------------------------------------------------------

def test_version_flag(capsys):
    code, out, _ = _run(capsys, "--version")
    assert code == 0
    assert "synthpose" in out
    assert "0.1.0" in out


def test_missing_source_flags_is_usage_error(tmp_path, capsys):
    code, _, _ = _run(capsys, "generate", "--seed", "1", "--frames", "1",
                      "--out", str(tmp_path / "o"))
    assert code == 1


def test_both_source_flags_is_usage_error(tmp_path, capsys):
    code, _, _ = _run(capsys, "generate", "--config", "x.json",
                      "--preset", "psp-hdri", "--seed", "1", "--frames", "1",
                      "--out", str(tmp_path / "o"))
    assert code == 1


def test_unknown_preset_is_config_error(tmp_path, capsys):
    code, _, err = _run(capsys, "generate", "--preset", "no-such-preset",
                        "--seed", "1", "--frames", "1",
                        "--out", str(tmp_path / "o"))
    assert code == 1
    assert "no-such-preset" in err


def test_negative_frames_rejected(tmp_path, capsys):
    code, _, _ = _run(capsys, "generate", "--preset", "psp-hdri",
                      "--seed", "1", "--frames", "-3",
                      "--out", str(tmp_path / "o"))
    assert code == 1


def test_zero_jobs_rejected(tmp_path, capsys):
    code, _, _ = _run(capsys, "generate", "--preset", "psp-hdri",
                      "--seed", "1", "--frames", "1",
                      "--out", str(tmp_path / "o"), "--jobs", "0")
    assert code == 1


def test_unknown_command_is_usage_error(capsys):
    code, _, _ = _run(capsys, "no-such-command")
    assert code == 1


def test_bad_scheduler_parameters_rejected(tmp_path, capsys):
    trace = tmp_path / "trace.csv"
    trace.write_text("2,50.0\n", encoding="utf-8")
    code, _, _ = _run(capsys, "anneal-sim", "--trace", str(trace),
                      "--patience", "0")
    assert code == 1


# ---------------------------------------------------------------------------
# data errors (exit 2) and I/O errors (exit 3)
# ---------------------------------------------------------------------------

def test_malformed_dataset_json_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("this is not json", encoding="utf-8")
    code, _, err = _run(capsys, "stats", "--input", str(bad),
                        "--out", str(tmp_path / "report.json"))
    assert code == 2
    assert "error" in err


def test_schema_violation_exits_2(tmp_path, capsys):
    # annotation ids must be positive; id 0 fails the schema check
    obj = coco_file_obj([raw_image(1)], [raw_annotation(0, 1)])
    path = tmp_path / "schema_bad.json"
    write_json(path, obj)
    code, _, _ = _run(capsys, "stats", "--input", str(path),
                      "--out", str(tmp_path / "report.json"))
    assert code == 2


def test_malformed_config_exits_2(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text("{not json", encoding="utf-8")
    code, _, _ = _run(capsys, "generate", "--config", str(cfg),
                      "--seed", "1", "--frames", "1",
                      "--out", str(tmp_path / "o"))
    assert code == 2


def test_profile_without_keypoints_exits_2(tmp_path, capsys):
    obj = coco_file_obj([raw_image(1)],
                        [raw_annotation(1, 1, labeled=())])
    path = tmp_path / "no_kpts.json"
    write_json(path, obj)
    code, _, err = _run(capsys, "profile", "--reference", str(path),
                        "--out", str(tmp_path / "prof.json"))
    assert code == 2
    assert "keypoint" in err


def test_missing_input_file_exits_3(tmp_path, capsys):
    code, _, _ = _run(capsys, "stats",
                      "--input", str(tmp_path / "absent.json"),
                      "--out", str(tmp_path / "report.json"))
    assert code == 3


# ---------------------------------------------------------------------------
# generation outputs
# ---------------------------------------------------------------------------

def test_generate_zero_frames_is_valid_empty(tmp_path, capsys):
    out = tmp_path / "empty"
    code, text, _ = _generate(capsys, out, frames=0, seed=1)
    assert code == 0
    assert "wrote 0 frames" in text
    dataset = parse_dataset(out / "annotations.json")
    assert dataset.images == () and dataset.annotations == ()
    manifest = json.loads((out / "manifest.json").read_text("utf-8"))
    assert manifest["frames"] == 0
    assert list((out / "scenes").iterdir()) == []


def test_generate_outputs_parse_and_line_up(tmp_path, capsys):
    out = tmp_path / "run"
    code, _, _ = _generate(capsys, out, frames=4, seed=7)
    assert code == 0
    dataset = parse_dataset(out / "annotations.json")
    assert len(dataset.images) == 4
    assert [img.id for img in dataset.images] == [1, 2, 3, 4]
    assert [a.id for a in dataset.annotations] == \
        list(range(1, len(dataset.annotations) + 1))
    sidecars = sorted(p.name for p in (out / "scenes").iterdir())
    assert sidecars == [f"frame_{i:06d}.json" for i in range(4)]


def test_generate_reruns_are_byte_identical(tmp_path, capsys):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert _generate(capsys, out1, frames=4, seed=7)[0] == 0
    assert _generate(capsys, out2, frames=4, seed=7)[0] == 0
    for rel in ["annotations.json", "manifest.json",
                "scenes/frame_000000.json", "scenes/frame_000003.json"]:
        assert (out1 / rel).read_bytes() == (out2 / rel).read_bytes(), rel


def test_generate_jobs_never_change_bytes(tmp_path, capsys):
    serial, parallel = tmp_path / "s", tmp_path / "p"
    assert _generate(capsys, serial, frames=5, seed=11, jobs=1)[0] == 0
    assert _generate(capsys, parallel, frames=5, seed=11, jobs=3)[0] == 0
    assert (serial / "annotations.json").read_bytes() == \
        (parallel / "annotations.json").read_bytes()
    for i in range(5):
        rel = f"scenes/frame_{i:06d}.json"
        assert (serial / rel).read_bytes() == (parallel / rel).read_bytes()


def test_manifest_records_recomputable_config_hash(tmp_path, capsys):
    out = tmp_path / "run"
    assert _generate(capsys, out, frames=2, seed=99)[0] == 0
    manifest = json.loads((out / "manifest.json").read_text("utf-8"))
    assert set(manifest) == {"toolkit_version", "master_seed", "frames",
                             "config", "config_sha256"}
    assert manifest["master_seed"] == 99
    assert manifest["frames"] == 2
    digest = hashlib.sha256(
        dumps_canonical(manifest["config"]).encode("utf-8")).hexdigest()
    assert digest == manifest["config_sha256"]
    # the embedded config must round-trip into a working configuration
    assert RandomizerConfig.from_obj(manifest["config"]) == preset("psp-hdri")


def test_config_file_matches_preset_output(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    write_json(cfg_path, preset("psp-hdri").to_obj())
    from_preset, from_file = tmp_path / "p", tmp_path / "f"
    assert _generate(capsys, from_preset, frames=2, seed=3)[0] == 0
    assert _generate(capsys, from_file, frames=2, seed=3,
                     config_path=cfg_path)[0] == 0
    assert (from_preset / "annotations.json").read_bytes() == \
        (from_file / "annotations.json").read_bytes()


# ---------------------------------------------------------------------------
# downstream workflow: profile, adapt, stats, heatmaps
# ---------------------------------------------------------------------------

def test_full_workflow_chain(tmp_path, capsys):
    gen = tmp_path / "gen"
    assert _generate(capsys, gen, frames=6, seed=5)[0] == 0
    annotations = gen / "annotations.json"

    prof_path = tmp_path / "profile.json"
    code, out, _ = _run(capsys, "profile", "--reference", str(annotations),
                        "--out", str(prof_path))
    assert code == 0
    assert out.startswith("profiled")
    assert json.loads(prof_path.read_text("utf-8"))["keypoint_rates"]

    adapted = tmp_path / "adapted.json"
    code, out, _ = _run(capsys, "adapt", "--input", str(annotations),
                        "--profile", str(prof_path), "--mode", "box+kpt",
                        "--seed", "1", "--out", str(adapted))
    assert code == 0
    assert "removed boxes:" in out
    assert "removed keypoints[range 0" in out
    before = parse_dataset(annotations)
    after = parse_dataset(adapted)
    assert len(after.annotations) <= len(before.annotations)

    report_path = tmp_path / "stats.json"
    code, out, _ = _run(capsys, "stats", "--input", str(adapted),
                        "--out", str(report_path))
    assert code == 0
    report = json.loads(report_path.read_text("utf-8"))
    assert report["annotations"] == len(after.annotations)
    assert report["images"] == 6

    hm_dir = tmp_path / "heatmaps"
    code, out, _ = _run(capsys, "heatmaps", "--input", str(adapted),
                        "--out-dir", str(hm_dir))
    assert code == 0
    csvs = sorted(p.name for p in hm_dir.glob("heatmap_*.csv"))
    assert len(csvs) == 17
    assert csvs[0] == "heatmap_00_nose.csv"
    summary = json.loads((hm_dir / "summary.json").read_text("utf-8"))
    assert summary["resolution"] == 101


def test_adapt_box_mode_removes_no_keypoints(tmp_path, capsys):
    gen = tmp_path / "gen"
    assert _generate(capsys, gen, frames=3, seed=21)[0] == 0
    annotations = gen / "annotations.json"
    prof_path = tmp_path / "profile.json"
    assert _run(capsys, "profile", "--reference", str(annotations),
                "--out", str(prof_path))[0] == 0
    adapted = tmp_path / "adapted.json"
    code, out, _ = _run(capsys, "adapt", "--input", str(annotations),
                        "--profile", str(prof_path), "--mode", "box",
                        "--out", str(adapted))
    assert code == 0
    for line in out.splitlines():
        if line.startswith("removed keypoints"):
            assert line.endswith(": 0")


# ---------------------------------------------------------------------------
# scheduler replay
# ---------------------------------------------------------------------------

def _write_flat_trace(path):
    rows = ["epoch,metric"] + [f"{e},50.0" for e in range(2, 101, 2)]
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")


def test_anneal_sim_stdout_decisions(tmp_path, capsys):
    trace = tmp_path / "trace.csv"
    _write_flat_trace(trace)
    code, out, err = _run(capsys, "anneal-sim", "--trace", str(trace))
    assert code == 0
    decisions = [json.loads(line) for line in out.splitlines()]
    assert len(decisions) == 37
    events = [(d["epoch"], d["action"]) for d in decisions
              if d["action"] != "continue"]
    assert events == [(40, "reduce_and_restore"), (60, "reduce_and_restore"),
                      (70, "reduce_and_restore"), (74, "stop")]
    assert "replayed 37 observations: 3 reductions, stopped" in err


def test_anneal_sim_log_file(tmp_path, capsys):
    trace = tmp_path / "trace.csv"
    _write_flat_trace(trace)
    log = tmp_path / "decisions.jsonl"
    code, out, _ = _run(capsys, "anneal-sim", "--trace", str(trace),
                        "--out", str(log))
    assert code == 0
    assert out == ""
    lines = log.read_text("utf-8").splitlines()
    assert len(lines) == 37
    assert json.loads(lines[-1])["action"] == "stop"


def test_anneal_sim_missing_trace_exits_3(tmp_path, capsys):
    code, _, _ = _run(capsys, "anneal-sim",
                      "--trace", str(tmp_path / "absent.csv"))
    assert code == 3
