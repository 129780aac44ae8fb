import csv
import json

import numpy as np
import pytest

from gazeparallax.cli import dispatch
from gazeparallax.retinal import default_scene, save_scene


def run_cli(capsys, *argv):
    code = dispatch(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_unknown_command_exits_2(capsys):
    code, _, err = run_cli(capsys, "frobnicate")
    assert code == 2


def test_no_command_exits_2(capsys):
    code, _, _ = run_cli(capsys)
    assert code == 2


def test_malformed_flag_exits_2(capsys):
    code, _, err = run_cli(capsys, "matrices", "--fixation", "0,0")
    assert code == 2
    assert err


def test_matrices_conventional_nodal_point_zero(capsys):
    code, out, _ = run_cli(
        capsys, "matrices", "--fixation", "0,0,-2", "--ipd", "0.064",
        "--mode", "conventional", "--fov", "45", "--near", "0.1", "--far", "100",
    )
    assert code == 0
    doc = json.loads(out)
    for side in ("left", "right"):
        assert doc[side]["nodal_point"] == [0.0, 0.0, 0.0]
        assert len(doc[side]["eye_matrix"]) == 16
        assert len(doc[side]["projection_matrix"]) == 16
    # row-major eye matrix: the half-ipd translation sits at index 3
    assert doc["left"]["eye_matrix"][3] == pytest.approx(0.032)
    assert doc["right"]["eye_matrix"][3] == pytest.approx(-0.032)


def test_matrices_ocular_mode_reports_nodal_points(capsys):
    code, out, _ = run_cli(
        capsys, "matrices", "--fixation", "0,0,-1", "--ipd", "0", "--mode", "ocular",
    )
    assert code == 0
    doc = json.loads(out)
    n = doc["right"]["nodal_point"]
    assert np.linalg.norm(n) == pytest.approx(0.0076916, abs=1e-9)


def test_analyze_curves_writes_csv_and_figure(tmp_path, capsys):
    out = tmp_path / "fig3.csv"
    code, _, _ = run_cli(
        capsys, "analyze", "curves", "--delta-d", "3", "--max-ecc", "40",
        "--step", "0.5", "--out", str(out),
    )
    assert code == 0
    with open(out, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["eccentricity_deg", "parallax_deg_dd3", "mar_deg", "display_mar_deg"]
    assert rows[-1][2] == "0.896667"
    assert (tmp_path / "fig3.png").exists()


def test_analyze_curves_no_fig(tmp_path, capsys):
    out = tmp_path / "curves.csv"
    code, _, _ = run_cli(capsys, "analyze", "curves", "--out", str(out), "--no-fig")
    assert code == 0
    assert out.exists()
    assert not (tmp_path / "curves.png").exists()


def test_render_stimulus_centered_gaze_zero_red(tmp_path, capsys):
    out = tmp_path / "img.ppm"
    code, _, _ = run_cli(
        capsys, "render", "--stimulus", "1,1", "--gaze", "0,0,-1", "--ipd", "0",
        "--mode", "ocular", "--res", "200x200", "--out", str(out),
    )
    assert code == 0
    data = out.read_bytes()
    assert data.startswith(b"P6\n200 200\n255\n")
    pixels = np.frombuffer(data[len(b"P6\n200 200\n255\n"):], dtype=np.uint8).reshape(200, 200, 3)
    assert np.count_nonzero(pixels[..., 0] > pixels[..., 1]) == 0


def test_render_scene_file_png(tmp_path, capsys):
    scene_path = tmp_path / "scene.json"
    save_scene(default_scene(), scene_path)
    out = tmp_path / "img.png"
    code, _, _ = run_cli(
        capsys, "render", "--scene", str(scene_path), "--gaze", "0.1,0,-1",
        "--res", "64x64", "--out", str(out),
    )
    assert code == 0
    assert out.read_bytes().startswith(b"\x89PNG")


def test_render_requires_scene_or_stimulus(tmp_path, capsys):
    code, _, err = run_cli(capsys, "render", "--gaze", "0,0,-1", "--out", str(tmp_path / "x.ppm"))
    assert code == 2
    assert "scene" in err


def test_render_missing_scene_file_is_runtime_error(tmp_path, capsys):
    code, _, err = run_cli(
        capsys, "render", "--scene", str(tmp_path / "nope.json"), "--gaze", "0,0,-1",
        "--out", str(tmp_path / "x.ppm"),
    )
    assert code == 1
    assert err


def test_simulate_and_fit_round_trip(tmp_path, capsys):
    results = tmp_path / "results.csv"
    code, _, _ = run_cli(
        capsys, "simulate-experiment", "--experiment", "detection",
        "--observer", '{"threshold":0.36,"slope":0.15,"lapse":0.02}',
        "--seed", "7", "--replications", "8", "--out", str(results),
    )
    assert code == 0
    with open(results, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 8 * 225
    assert list(rows[0]) == ["trial_index", "absolute_d", "offset_d", "relative_d", "correct"]
    assert {r["absolute_d"] for r in rows} == {"1", "2", "3"}
    assert all(r["correct"] in ("0", "1") for r in rows)

    fits = tmp_path / "fits.json"
    code, _, _ = run_cli(capsys, "fit", "--in", str(results), "--out", str(fits))
    assert code == 0
    doc = json.loads(fits.read_text())
    assert doc["experiment"] == "detection"
    assert set(doc["groups"]) == {"absolute_1D", "absolute_2D", "absolute_3D"}
    for group in doc["groups"].values():
        assert 0.1 < group["threshold75"] < 0.8
        assert group["reliable"] is True
    assert (tmp_path / "fits.png").exists()


def test_fit_discrimination_reports_linear_fit(tmp_path, capsys):
    results = tmp_path / "disc.csv"
    run_cli(
        capsys, "simulate-experiment", "--experiment", "discrimination",
        "--observer", '{"threshold":0.38,"weber":0.11}',
        "--seed", "3", "--replications", "12", "--out", str(results),
    )
    fits = tmp_path / "disc_fits.json"
    code, _, _ = run_cli(capsys, "fit", "--in", str(results), "--out", str(fits))
    assert code == 0
    doc = json.loads(fits.read_text())
    assert doc["experiment"] == "discrimination"
    assert "linear_fit" in doc
    assert 0.0 < doc["linear_fit"]["slope"] < 0.4
    assert (tmp_path / "disc_fits_weber.png").exists()
