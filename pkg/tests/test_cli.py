"""Command-line behaviour: exit codes, outputs and determinism."""
import json
import math
import subprocess
import sys
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pytest

from merogeo.cli import EXIT_DEFECT, EXIT_INPUT, EXIT_OK, EXIT_PROPERTY, InputError, RunConfig, main
from merogeo.output import fmt_float

GOLDEN = Path(__file__).parent / "golden"
SVG = "{http://www.w3.org/2000/svg}"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_residues_simple_pole(capsys):
    code, out, _ = run(capsys, "residues", "--form", "3/(z-2)")
    data = json.loads(out)
    assert code == EXIT_OK
    assert data["poles"] == [{"re": 2.0, "im": 0.0, "order": 1, "res_re": 3.0, "res_im": 0.0}]
    assert data["infinity"]["res_re"] == -5.0
    assert data["defect"] < 1e-9


def test_residues_zero_form(capsys):
    code, out, _ = run(capsys, "residues", "--form", "0")
    assert code == EXIT_OK
    assert json.loads(out)["infinity"]["res_re"] == -2.0


def test_residues_negative_leading_sign(capsys):
    code, out, _ = run(capsys, "residues", "--form", "-1/z")
    assert code == EXIT_OK
    assert json.loads(out)["poles"][0]["res_re"] == -1.0


def test_parse_error_exit(capsys):
    code, _, err = run(capsys, "residues", "--form", "z+")
    assert code == EXIT_INPUT
    assert "syntax error at offset 2" in err


@pytest.mark.parametrize("argv", [
    ["trace", "--form", "-1/z", "--z0", "0", "--v0", "1"],
    ["trace", "--form", "1", "--z0", "0", "--v0", "0"],
    ["torus", "--lambda", "-i", "--a", "1", "--v0", "1"],
    ["torus", "--lambda", "i", "--a", "1", "--v0", "0"],
    ["check", "--n", "0"],
    ["trace", "--form", "1", "--z0", "0", "--v0", "1", "--tol", "-1"],
    ["trace", "--form", "1", "--z0", "0", "--v0", "1", "--t", "0"],
    ["frobnicate"],
])
def test_input_errors(capsys, argv):
    assert run(capsys, *argv)[0] == EXIT_INPUT


def test_run_config_validation():
    with pytest.raises(InputError):
        RunConfig("trace", tol=0.0)
    with pytest.raises(InputError):
        RunConfig("trace", horizon=-1.0)


def test_trace_circle(capsys):
    code, out, _ = run(capsys, "trace", "--form", "-1/z", "--z0", "1", "--v0", "i", "--t", "7")
    event = json.loads(out)["event"]
    assert code == EXIT_OK
    assert event["kind"] == "ClosureDetected"
    assert abs(event["t"] - 2 * math.pi) < 1e-6


def test_trace_csv_matches_log(tmp_path, capsys):
    out = tmp_path / "trace.csv"
    code, _, _ = run(capsys, "trace", "--form", "1", "--z0", "0", "--v0", "1", "--t", "10",
                     "--out", str(out))
    assert code == EXIT_OK
    rows = np.genfromtxt(out, delimiter=",", names=True, dtype=None, encoding="utf-8")
    z = rows["z_re"] + 1j * rows["z_im"]
    assert np.max(np.abs(z - np.log1p(rows["t"]))) < 1e-8


def test_trace_json_matches_cube_root(tmp_path, capsys):
    out = tmp_path / "trace.json"
    run(capsys, "trace", "--form", "2/z", "--z0", "1", "--v0", "1", "--t", "5", "--out", str(out))
    samples = json.loads(out.read_text())["samples"]
    t = np.array([s[0] for s in samples])
    z = np.array([complex(s[2], s[3]) if s[1] == "Z" else 1 / complex(s[2], s[3])
                  for s in samples])
    # the endpoint 16 ** (1/3) lies beyond the switch radius
    assert samples[0][1] == "Z" and samples[-1][1] == "W"
    assert np.max(np.abs(z - (1 + 3 * t) ** (1 / 3))) < 1e-8


@pytest.mark.parametrize("argv, tag", [
    (["--form", "-1/z", "--z0", "2", "--v0", "-1"], "PoleLimit"),
    (["--form", "-1/z", "--z0", "1", "--v0", "i"], "ClosedGeodesic"),
    (["--form", "1/(z-1) + 1/(z+1)", "--z0", "0.3i", "--v0", "1+0.2i"], None),
])
def test_classify(capsys, argv, tag):
    code, out, _ = run(capsys, "classify", *argv)
    data = json.loads(out)
    assert code == EXIT_OK
    assert set(data) >= {"tag", "evidence", "residue_checks"}
    if tag is None:
        from merogeo.classify import TAGS
        assert data["tag"] in TAGS
    else:
        assert data["tag"] == tag
    if tag == "ClosedGeodesic":
        assert data["periodic"] is True and data["residue_checks"]


@pytest.mark.parametrize("argv, tag", [
    (["--a", "0", "--v0", "1+i"], "ClosedPeriodic"),
    (["--a", "1", "--v0", "1"], "ClosedNonPeriodic"),
    (["--a", "1", "--v0", "i"], "LimitCycleLine"),
])
def test_torus(capsys, argv, tag):
    code, out, _ = run(capsys, "torus", "--lambda", "i", *argv)
    assert code == EXIT_OK and json.loads(out)["tag"] == tag


def test_check_small(capsys):
    code, out, _ = run(capsys, "check", "--seed", "1", "--n", "1")
    assert code == EXIT_OK
    lines = out.strip().splitlines()[1:]
    assert len(lines) == 4
    assert all(line.split()[1:3] == ["1", "0"] for line in lines)


def test_check_forced_failure(capsys):
    code, out, _ = run(capsys, "check", "--seed", "3", "--n", "2", "--tol", "1e-30")
    assert code == EXIT_PROPERTY
    assert "FAIL" in out and "case seed" in out


def test_check_defect_exit_code(monkeypatch, capsys):
    import merogeo.cli as cli
    monkeypatch.setattr(cli, "RESIDUE_DEFECT_TOL", -1.0)
    assert run(capsys, "residues", "--form", "1/z")[0] == EXIT_DEFECT


@pytest.mark.parametrize("name, argv", [
    ("residues_simple_pole.json", ["residues", "--form", "3/(z-2)"]),
    ("torus_closed_nonperiodic.json", ["torus", "--lambda", "i", "--a", "1", "--v0", "1"]),
])
def test_golden_files(capsys, name, argv):
    _, out, _ = run(capsys, *argv)
    assert out == (GOLDEN / name).read_text(encoding="utf-8")


def test_repeated_runs_are_byte_identical(tmp_path, capsys):
    outputs = []
    for k in range(2):
        path = tmp_path / f"run{k}.json"
        _, printed, _ = run(capsys, "trace", "--form", "1/(z-0.5) - 2/(z+1)", "--z0", "0.2+0.3i",
                            "--v0", "1", "--t", "20", "--out", str(path))
        outputs.append((printed, path.read_bytes()))
    assert outputs[0] == outputs[1]
    a = [run(capsys, "classify", "--form", "-0.95/z", "--z0", "1", "--v0", "i")[1] for _ in range(2)]
    assert a[0] == a[1]


def test_fmt_float():
    assert fmt_float(-0.0) == "0.0"
    assert fmt_float(2.0) == "2.0"
    assert fmt_float(0.1) == "0.10000000000000001"
    assert fmt_float(1e300) == "1.0000000000000001e+300"
    assert float(fmt_float(math.pi)) == math.pi


def svg_paths(path):
    root = ET.parse(path).getroot()
    return root, root.findall(f"{SVG}path")


def test_trace_svg_one_path_per_segment(tmp_path, capsys):
    svg = tmp_path / "t.svg"
    out = tmp_path / "t.json"
    run(capsys, "trace", "--form", "1/(z-0.5)", "--z0", "0.1", "--v0", "1+0.5i", "--t", "15",
        "--out", str(out), "--svg", str(svg))
    root, paths = svg_paths(svg)
    charts = [s[1] for s in json.loads(out.read_text())["samples"]]
    segments = 1 + sum(a != b for a, b in zip(charts, charts[1:]))
    assert segments > 1
    assert len(paths) == segments
    assert root.find(f"{SVG}circle") is not None
    assert root.findall(f".//{SVG}line")  # pole crosses


def test_torus_svg(tmp_path, capsys):
    svg = tmp_path / "torus.svg"
    code, _, _ = run(capsys, "torus", "--lambda", "0.3+i", "--a", "0", "--v0", "1+2i",
                     "--svg", str(svg), "--t", "3")
    assert code == EXIT_OK
    root, paths = svg_paths(svg)
    assert root.find(f"{SVG}polygon") is not None
    assert len(paths) >= 2


def test_env_tolerance(monkeypatch, capsys):
    argv = ["trace", "--form", "2/z", "--z0", "1", "--v0", "1", "--t", "5"]
    base = json.loads(run(capsys, *argv)[1])
    monkeypatch.setenv("MEROGEO_TOL", "1e-4")
    loose = json.loads(run(capsys, *argv)[1])
    assert loose["samples"] < base["samples"]
    monkeypatch.setenv("MEROGEO_TOL", "nope")
    assert run(capsys, *argv)[0] == EXIT_INPUT


def test_console_script():
    proc = subprocess.run([sys.executable, "-m", "merogeo.cli", "residues", "--form", "0"],
                          capture_output=True, text=True, encoding="utf-8")
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["infinity"]["res_re"] == -2.0
