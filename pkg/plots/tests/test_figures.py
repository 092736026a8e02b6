import json

import numpy as np
import pytest

from mfwaves_plots.figures import KINDS, FigureSpec, SchemaError, read_csv, render
from mfwaves_plots.cli import run as run_cli


def spec_for(kind, fixture_dir, out_dir, style=None):
    inputs = {
        "profile_overlay": {
            "predicted": str(fixture_dir / "profile.csv"),
            "empirical": str(fixture_dir / "empirical.csv"),
            "compare": str(fixture_dir / "compare.json"),
        },
        "tail_loglinear": {
            "profile": str(fixture_dir / "profile.csv"),
            "fit": str(fixture_dir / "tail.json"),
        },
        "speed_vs_n": {
            "csv": str(fixture_dir / "speed_vs_n.csv"),
            "reference": str(fixture_dir / "dispersion.json"),
        },
        "ks_trace": {"sidecar": str(fixture_dir / "pool.json")},
    }[kind]
    return FigureSpec(kind, inputs, str(out_dir / kind), style or {})


@pytest.mark.parametrize("kind", KINDS)
def test_each_kind_renders_png_and_svg(kind, fixture_dir, tmp_path):
    result = render(spec_for(kind, fixture_dir, tmp_path / "figs"))
    assert result.png.exists() and result.png.stat().st_size > 0
    assert result.svg.exists() and result.svg.stat().st_size > 0
    assert result.series


def test_rendering_is_deterministic(fixture_dir, tmp_path):
    a = render(spec_for("profile_overlay", fixture_dir, tmp_path / "a"))
    b = render(spec_for("profile_overlay", fixture_dir, tmp_path / "b"))
    assert (a.width_px, a.height_px) == (b.width_px, b.height_px)
    for name in a.series:
        assert np.array_equal(a.series[name][0], b.series[name][0])
        assert np.array_equal(a.series[name][1], b.series[name][1])
    assert a.annotations == b.annotations


def test_tail_annotation_matches_sidecar(fixture_dir, tmp_path):
    fit = json.loads((fixture_dir / "tail.json").read_text())
    result = render(spec_for("tail_loglinear", fixture_dir, tmp_path / "figs"))
    assert any(f"{fit['right_slope']:.4f}" in a for a in result.annotations)
    left = render(spec_for("tail_loglinear", fixture_dir, tmp_path / "figs-left",
                           style={"side": "left"}))
    assert any(f"{fit['left_slope']:.4f}" in a for a in left.annotations)


def test_profile_overlay_applies_shift_from_compare(fixture_dir, tmp_path):
    result = render(spec_for("profile_overlay", fixture_dir, tmp_path / "figs"))
    raw = np.loadtxt(fixture_dir / "empirical.csv", delimiter=",", skiprows=1)
    shift = json.loads((fixture_dir / "compare.json").read_text())["shift"]
    assert np.allclose(result.series["empirical"][0], raw[:, 0] - shift)
    assert np.allclose(result.series["empirical"][1], raw[:, 1])  # values untouched


def test_ks_trace_marks_early_stop(fixture_dir, tmp_path):
    result = render(spec_for("ks_trace", fixture_dir, tmp_path / "figs"))
    # fixture trace has three consecutive values below 1e-3 ending at index 7
    assert "early_stop" in result.series
    assert result.series["early_stop"][0][0] == 8
    assert any("early stop at iteration 8" in a for a in result.annotations)


def test_ks_trace_without_early_stop(fixture_dir, tmp_path):
    sidecar = json.loads((fixture_dir / "pool.json").read_text())
    sidecar["ks_trace"] = [0.05, 0.01, 0.005, 0.004]
    (fixture_dir / "pool.json").write_text(json.dumps(sidecar))
    result = render(spec_for("ks_trace", fixture_dir, tmp_path / "figs"))
    assert "early_stop" not in result.series
    assert any("no early stop" in a for a in result.annotations)


def test_schema_mismatch_names_column(fixture_dir, tmp_path):
    bad = fixture_dir / "bad.csv"
    data = np.loadtxt(fixture_dir / "profile.csv", delimiter=",", skiprows=1)
    np.savetxt(bad, data, fmt="%.17g", delimiter=",", header="x,height,stderr", comments="")
    spec = FigureSpec("tail_loglinear",
                      {"profile": str(bad), "fit": str(fixture_dir / "tail.json")},
                      str(tmp_path / "fig"))
    with pytest.raises(SchemaError, match="x,h,stderr"):
        render(spec)


def test_missing_json_field_named(fixture_dir, tmp_path):
    (fixture_dir / "tail.json").write_text(json.dumps({"gamma": 1.0}))
    spec = spec_for("tail_loglinear", fixture_dir, tmp_path / "figs")
    with pytest.raises(SchemaError, match="right_slope"):
        render(spec)


def test_unknown_kind_rejected():
    with pytest.raises(SchemaError, match="unknown figure kind"):
        FigureSpec("scatter3d", {}, "out")


def test_read_csv_missing_file(tmp_path):
    with pytest.raises(SchemaError, match="not found"):
        read_csv(tmp_path / "nope.csv", ("a", "b"))


def test_cli_render(fixture_dir, tmp_path, capsys):
    spec_path = tmp_path / "figure.json"
    spec_path.write_text(json.dumps({
        "kind": "speed_vs_n",
        "inputs": {"csv": str(fixture_dir / "speed_vs_n.csv"),
                   "reference": str(fixture_dir / "dispersion.json")},
        "output": str(tmp_path / "figs" / "speed"),
    }))
    assert run_cli(["render", "--spec", str(spec_path)]) == 0
    assert (tmp_path / "figs" / "speed.png").exists()
    assert (tmp_path / "figs" / "speed.svg").exists()


def test_cli_schema_error_exit_2(fixture_dir, tmp_path, capsys):
    spec_path = tmp_path / "figure.json"
    spec_path.write_text(json.dumps({
        "kind": "ks_trace",
        "inputs": {"sidecar": str(tmp_path / "missing.json")},
        "output": str(tmp_path / "fig"),
    }))
    assert run_cli(["render", "--spec", str(spec_path)]) == 2
    assert "not found" in capsys.readouterr().err
