"""End-to-end runs of every subcommand through main()."""

import json
import subprocess
import sys

import numpy as np
import pytest

from contrailkit.cli import EXIT_ERROR, EXIT_OK, EXIT_SCREEN_FAILED, main
from contrailkit.grids import Grid, write_raster
from contrailkit.linearize import (
    LineSegment,
    SegmentSet,
    read_segments_jsonl,
    write_segments_jsonl,
)


def line_grid(shape=(64, 64), row=30, col0=10, col1=50, value=3.0) -> Grid:
    values = np.zeros(shape)
    values[row, col0:col1] = value
    return Grid(values=values)


def run(capsys, argv) -> tuple[int, dict]:
    rc = main(argv)
    out = capsys.readouterr().out
    return rc, json.loads(out) if out.strip().startswith("{") else {}


# -------------------------------------------------------------------- screen


def test_screen_pass_and_mask_output(tmp_path, capsys):
    inp = tmp_path / "btd.btg"
    write_raster(line_grid(), inp)
    out_mask = tmp_path / "mask.btg"
    rc, body = run(capsys, ["screen", "--input", str(inp), "--out-mask", str(out_mask)])
    assert rc == EXIT_OK
    assert body["passed"] is True
    assert body["positive_pixels"] > 0
    from contrailkit.grids import read_raster

    mask = read_raster(out_mask)
    assert int((mask.values > 0.5).sum()) == body["positive_pixels"]
    # Everything that fired sits on the drawn line's row.
    rows = np.nonzero(mask.values > 0.5)[0]
    assert set(rows.tolist()) == {30}


def test_screen_fail_exit_code(tmp_path, capsys):
    inp = tmp_path / "flat.btg"
    write_raster(Grid(values=np.zeros((64, 64))), inp)
    rc, body = run(capsys, ["screen", "--input", str(inp)])
    assert rc == EXIT_SCREEN_FAILED
    assert body == {"passed": False, "positive_pixels": 0}


def test_screen_params_file(tmp_path, capsys):
    inp = tmp_path / "btd.btg"
    write_raster(line_grid(value=0.8), inp)
    # Defaults pass at 0.5; a stricter response threshold kills the line.
    params = tmp_path / "params.json"
    params.write_text(json.dumps({"response_threshold": 5.0, "btd_threshold": 5.0}))
    rc, body = run(capsys, ["screen", "--input", str(inp), "--params", str(params)])
    assert rc == EXIT_SCREEN_FAILED
    assert body["positive_pixels"] == 0


def test_screen_missing_input_is_an_error(tmp_path, capsys):
    rc, _ = run(capsys, ["screen", "--input", str(tmp_path / "nope.btg")])
    assert rc == EXIT_ERROR


# ----------------------------------------------------------------- linearize


def test_linearize_writes_segments(tmp_path, capsys):
    prob = np.full((64, 64), 0.05)
    prob[20, 5:35] = 0.9
    inp = tmp_path / "prob.btg"
    write_raster(Grid(values=prob), inp)
    out = tmp_path / "segments.jsonl"
    rc, body = run(capsys, ["linearize", "--mask", str(inp), "--out", str(out)])
    assert rc == EXIT_OK
    assert body == {"segments": 1}
    segset = read_segments_jsonl(out)
    assert segset.source_threshold == pytest.approx(0.35)
    s = segset.segments[0]
    assert s.angle == pytest.approx(0.0, abs=1e-6)
    assert s.length == pytest.approx(29.0, abs=0.5)
    assert s.p0[0] == pytest.approx(20.0, abs=1e-6)


def test_linearize_threshold_controls_binarization(tmp_path, capsys):
    prob = np.full((64, 64), 0.05)
    prob[20, 5:35] = 0.3  # below the 0.35 default
    inp = tmp_path / "prob.btg"
    write_raster(Grid(values=prob), inp)
    out = tmp_path / "segments.jsonl"
    rc, body = run(capsys, ["linearize", "--mask", str(inp), "--out", str(out)])
    assert rc == EXIT_OK and body["segments"] == 0
    rc, body = run(
        capsys,
        ["linearize", "--mask", str(inp), "--out", str(out), "--threshold", "0.2"],
    )
    assert rc == EXIT_OK and body["segments"] == 1
    assert read_segments_jsonl(out).source_threshold == pytest.approx(0.2)


# ---------------------------------------------------------------------- eval


def write_pair(pred_dir, gt_dir, name, pred, gt):
    pred_dir.mkdir(exist_ok=True)
    gt_dir.mkdir(exist_ok=True)
    write_raster(Grid(values=np.asarray(pred, dtype=np.float64)), pred_dir / name)
    write_raster(Grid(values=np.asarray(gt, dtype=np.float64)), gt_dir / name)


def test_eval_pixel_perfect_predictor(tmp_path, capsys):
    gt1 = np.zeros((8, 8))
    gt1[2, 1:7] = 1.0
    gt2 = np.zeros((8, 8))
    gt2[5:7, 3] = 1.0
    write_pair(tmp_path / "pred", tmp_path / "gt", "a.btg", gt1, gt1)
    write_pair(tmp_path / "pred", tmp_path / "gt", "b.btg", gt2, gt2)
    report_path = tmp_path / "report.json"
    rc, _ = run(
        capsys,
        [
            "eval", "pixel",
            "--pred", str(tmp_path / "pred"),
            "--gt", str(tmp_path / "gt"),
            "--thresholds", "101",
            "--report", str(report_path),
        ],
    )
    assert rc == EXIT_OK
    report = json.loads(report_path.read_text())
    assert report["kind"] == "pixel"
    assert report["n_images"] == 2
    assert report["auc"] == 1.0
    assert len(report["points"]) == 101


def test_eval_relaxed_tolerates_small_offsets(tmp_path, capsys):
    gt = np.zeros((16, 16))
    gt[8, 3:13] = 1.0
    pred = np.zeros((16, 16))
    pred[9, 3:13] = 1.0  # one row off
    write_pair(tmp_path / "pred", tmp_path / "gt", "a.btg", pred, gt)
    rc, report = run(
        capsys,
        ["eval", "relaxed", "--pred", str(tmp_path / "pred"),
         "--gt", str(tmp_path / "gt"), "--rho", "2"],
    )
    assert rc == EXIT_OK
    assert report["kind"] == "relaxed" and report["rho"] == 2
    img = report["images"][0]
    assert img["image"] == "a.btg"
    assert img["precision"] == 1.0 and img["recall"] == 1.0


def test_eval_contrail_curve(tmp_path, capsys):
    prob = np.zeros((64, 64))
    prob[20, 5:35] = 1.0
    write_pair(tmp_path / "pred", tmp_path / "gt", "a.btg", prob, prob)
    gt_set = SegmentSet(
        segments=(LineSegment.from_endpoints((20.0, 5.0), (20.0, 34.0)),),
        source_threshold=0.5,
    )
    write_segments_jsonl(gt_set, tmp_path / "gt" / "a.jsonl")
    rc, report = run(
        capsys,
        ["eval", "contrail", "--pred", str(tmp_path / "pred"),
         "--gt", str(tmp_path / "gt"), "--thresholds", "5"],
    )
    assert rc == EXIT_OK
    assert report["kind"] == "contrail"
    # At every threshold in (0, 1] the detection matches the one segment.
    nontrivial = [p for p in report["points"] if p["threshold"] > 0]
    assert nontrivial and all(p["recall"] == 1.0 for p in nontrivial)
    assert all(p["precision"] == 1.0 for p in nontrivial)


def test_eval_missing_ground_truth_is_an_error(tmp_path, capsys):
    (tmp_path / "pred").mkdir()
    (tmp_path / "gt").mkdir()
    write_raster(Grid(values=np.zeros((8, 8))), tmp_path / "pred" / "a.btg")
    rc, _ = run(
        capsys,
        ["eval", "pixel", "--pred", str(tmp_path / "pred"), "--gt", str(tmp_path / "gt")],
    )
    assert rc == EXIT_ERROR


# -------------------------------------------------------------------- sample


def features_csv(tmp_path, rows):
    path = tmp_path / "features.csv"
    lines = ["scene_id,track_count,max_rhi,mannstein_passed"]
    lines += [f"{sid},{n},{rhi},{passed}" for sid, n, rhi, passed in rows]
    path.write_text("\n".join(lines) + "\n")
    return path


def test_sample_is_deterministic(tmp_path, capsys):
    rows = [(f"scene-{i:04d}", 50, 120.0, "true") for i in range(200)]
    feats = features_csv(tmp_path, rows)
    out1, out2 = tmp_path / "kept1.csv", tmp_path / "kept2.csv"
    rc, body = run(capsys, ["sample", "--features", str(feats), "--seed", "7", "--out", str(out1)])
    assert rc == EXIT_OK
    assert body == {"total": 200, "kept": 200}  # keep probability 1 everywhere
    rc, _ = run(capsys, ["sample", "--features", str(feats), "--seed", "7", "--out", str(out2)])
    assert out1.read_text() == out2.read_text()


def test_sample_policy_file_changes_the_draw(tmp_path, capsys):
    import random

    ids = random.Random(3).choices(range(16**8), k=400)
    rows = [(f"{x:08x}", 0, 120.0, "true") for x in ids]
    feats = features_csv(tmp_path, rows)
    policy = tmp_path / "policy.json"
    policy.write_text(json.dumps({"p_no_tracks": 0.0}))
    out = tmp_path / "kept.csv"
    rc, body = run(
        capsys,
        ["sample", "--features", str(feats), "--policy", str(policy),
         "--seed", "7", "--out", str(out)],
    )
    assert rc == EXIT_OK
    assert body["kept"] == 0
    # Same scenes under the default policy keep roughly 5 percent:
    # n=400, p=0.05, 3 sigma is about 13.
    rc, body = run(capsys, ["sample", "--features", str(feats), "--seed", "7", "--out", str(out)])
    assert 7 <= body["kept"] <= 33


# ------------------------------------------------------------------ coverage


def test_coverage_report_with_metadata(tmp_path, capsys):
    det = tmp_path / "det"
    det.mkdir()
    probs = np.zeros((10, 10))
    probs[0, :5] = 0.9  # 5 of 100 pixels clear the 0.4 default
    write_raster(Grid(values=probs), det / "a.btg")
    (det / "a.json").write_text(json.dumps({"utc_hour": 12.0, "center_lon": -90.0,
                                            "center_lat": 35.2}))
    write_raster(Grid(values=np.zeros((10, 10))), det / "b.btg")
    out = tmp_path / "coverage.csv"
    rc, _ = run(capsys, ["coverage", "--detections", str(det), "--out", str(out)])
    assert rc == EXIT_OK
    lines = out.read_text().strip().split("\n")
    assert lines[0] == "coverage_percent,image"
    rows = dict(
        (line.split(",")[1], float(line.split(",")[0])) for line in lines[1:]
    )
    assert rows["a.btg"] == pytest.approx(5.0)
    assert rows["b.btg"] == 0.0


def test_coverage_by_hour_and_gridbox(tmp_path, capsys):
    det = tmp_path / "det"
    det.mkdir()
    write_raster(Grid(values=np.full((4, 4), 0.9)), det / "a.btg")
    (det / "a.json").write_text(
        json.dumps({"utc_hour": 12.0, "center_lon": -90.0, "center_lat": 35.2})
    )
    rc = main(["coverage", "--detections", str(det), "--by", "hour"])
    out = capsys.readouterr().out.strip().split("\n")
    assert rc == EXIT_OK
    idx = out[0].split(",").index("local_hour")
    assert float(out[1].split(",")[idx]) == pytest.approx(6.0)
    rc = main(["coverage", "--detections", str(det), "--by", "gridbox"])
    out = capsys.readouterr().out.strip().split("\n")
    header = out[0].split(",")
    row = out[1].split(",")
    assert float(row[header.index("gridbox_lat")]) == 30.0
    assert float(row[header.index("gridbox_lon")]) == -90.0


def test_coverage_threshold_flag(tmp_path, capsys):
    det = tmp_path / "det"
    det.mkdir()
    probs = np.full((10, 10), 0.5)
    write_raster(Grid(values=probs), det / "a.btg")
    rc = main(["coverage", "--detections", str(det), "--threshold", "0.6"])
    out = capsys.readouterr().out.strip().split("\n")
    assert rc == EXIT_OK
    assert float(out[1].split(",")[0]) == 0.0
    rc = main(["coverage", "--detections", str(det)])
    out = capsys.readouterr().out.strip().split("\n")
    assert float(out[1].split(",")[0]) == 100.0  # 0.5 >= 0.4


def test_coverage_empty_dir_is_an_error(tmp_path, capsys):
    (tmp_path / "det").mkdir()
    rc, _ = run(capsys, ["coverage", "--detections", str(tmp_path / "det")])
    assert rc == EXIT_ERROR


# ------------------------------------------------------------- entry point


def test_console_script_help():
    proc = subprocess.run(
        [sys.executable, "-m", "contrailkit.cli", "--help"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    for name in ["screen", "linearize", "eval", "sample", "coverage", "serve"]:
        assert name in proc.stdout
