import csv
import json
import subprocess
import sys

import pytest

from hmcf import cli


@pytest.fixture
def out(tmp_path, monkeypatch):
    monkeypatch.setenv("HMCF_OUT", str(tmp_path / "root"))
    return tmp_path


def gen(out, name, *flags):
    path = out / f"{name}.hmesh"
    assert cli.main(["generate", *flags, "-o", str(path)]) == 0
    return path


def test_generate_writes_mesh_and_sidecar(out):
    path = gen(out, "s", "--kind", "sphere", "--r", "1", "--res", "162")
    side = json.loads(cli.sidecar_path(path).read_text())
    assert side["shape"] == {"kind": "geodesic_sphere", "params": {"r": 1.0}, "resolution": 162}
    assert side["euler_characteristic"] == 2 and side["vertices"] == 162


def test_generate_defaults_to_hmcf_out(out):
    assert cli.main(["generate", "--kind", "torus", "--eps", "0.1", "--res", "1000"]) == 0
    assert (out / "root" / "drilled_sphere_torus.hmesh").exists()


@pytest.mark.parametrize(
    "argv",
    [["generate", "--kind", "sphere", "--r", "-1"],
     ["generate"],
     ["flow"],
     ["profile"],
     ["profile", "--v0", "-3"],
     ["check", "--which", "dumbbell_singularity", "--d", "10"],
     ["check", "nothing_here.hmesh"]],
)
def test_usage_errors_exit_2(out, argv):
    assert cli.main(argv) == 2


def test_argparse_errors_exit_2():
    with pytest.raises(SystemExit) as exc:
        cli.main(["generate", "--kind", "cube"])
    assert exc.value.code == 2


def test_malformed_mesh_exits_1(out):
    bad = out / "bad.hmesh"
    bad.write_text("HMESH 7\n")
    assert cli.main(["flow", str(bad), "-o", str(out / "r")]) == 1
    assert cli.main(["check", str(bad)]) == 1


def test_flow_report_and_manifest_rerun(out):
    mesh = gen(out, "s", "--kind", "sphere", "--res", "162")
    run = out / "run"
    assert cli.main(["flow", str(mesh), "--cfl", "0.5", "-o", str(run)]) == 0
    status = json.loads((run / "status.json").read_text())
    assert status["status"] == "extinct"
    with open(run / "diagnostics.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == list(cli.flow.CSV_COLUMNS)
    assert int(rows[-1]["step"]) == status["steps"]
    certs = json.loads((run / "certificates.json").read_text())
    assert certs[0]["name"] == "diameter_bound_all_records" and certs[0]["verdict"] == "pass"

    rerun = out / "rerun"
    assert cli.main(["flow", "--manifest", str(run / "manifest.json"), "-o", str(rerun)]) == 0
    assert (rerun / "diagnostics.csv").read_bytes() == (run / "diagnostics.csv").read_bytes()

    assert cli.main(["report", str(run)]) == 0
    for name in ("A.svg", "V.svg", "Wbar.svg", "maxAbsH.svg", "summary.txt"):
        assert (run / name).exists()
    assert "analytic extinction time" in (run / "summary.txt").read_text()
    first = (run / "A.svg").read_bytes()
    cli.main(["report", str(run)])
    assert (run / "A.svg").read_bytes() == first


def test_flow_several_meshes_in_parallel(out):
    a = gen(out, "a", "--kind", "sphere", "--res", "42")
    b = gen(out, "b", "--kind", "sphere", "--r", "0.5", "--res", "42")
    assert cli.main(["flow", str(a), str(b), "--jobs", "2", "--max-steps", "5", "-o", str(out / "many")]) == 0
    for stem in ("a", "b"):
        assert json.loads((out / "many" / stem / "status.json").read_text())["status"] == "max_steps"


def test_dumbbell_axis_is_read_from_sidecar(out):
    mesh = gen(out, "db", "--kind", "dumbbell", "--d", "6", "--eps", "0.15", "--res", "1500")
    run = out / "dbrun"
    assert cli.main(["flow", str(mesh), "--max-steps", "3", "-o", str(run)]) == 0
    assert json.loads((run / "status.json").read_text())["neckRadius"] < 0.15
    with open(run / "diagnostics.csv") as fh:
        first = next(csv.DictReader(fh))
    assert float(first["neckRadius"]) == pytest.approx(0.15, rel=0.05)


def test_pair_and_check_on_pair_run(out):
    a = gen(out, "a", "--spec", _spec(out, {"kind": "sphere", "params": {"r": 1.0, "center": [3.7621956910836314, -3.626860407847019, 0, 0]}, "resolution": 42}))
    b = gen(out, "b", "--spec", _spec(out, {"kind": "sphere", "params": {"r": 1.0, "center": [3.7621956910836314, 3.626860407847019, 0, 0]}, "resolution": 42}))
    run = out / "pair"
    assert cli.main(["pair", str(a), str(b), "--cfl", "0.5", "-o", str(run)]) == 0
    status = json.loads((run / "status.json").read_text())
    assert status["d_min"] > 1.5
    with open(run / "pair.csv") as fh:
        header = next(csv.reader(fh))
    assert header[-3:] == ["d", "monitorF1", "monitorFa1"]
    assert cli.main(["check", str(run)]) == 0
    assert cli.main(["report", str(run)]) == 0
    assert (run / "monitor.svg").exists()


def _spec(out, d):
    p = out / f"spec{len(list(out.glob('spec*')))}.json"
    p.write_text(json.dumps(d))
    return str(p)


def test_check_mesh_and_dumbbell(out, capsys):
    mesh = gen(out, "s", "--kind", "sphere", "--res", "642")
    assert cli.main(["check", str(mesh), "--which", "isoperimetric", "-o", str(out / "c.json")]) == 0
    assert json.loads((out / "c.json").read_text())[0]["name"] == "isoperimetric"
    assert cli.main(["check", str(mesh), "--which", "torus_singularity"]) == 1
    assert cli.main(["check", "--which", "dumbbell_singularity", "--area0", "36.7", "--d", "200"]) == 0
    assert cli.main(["check", "--which", "dumbbell_singularity", "--area0", "1000", "--d", "10"]) == 1
    assert cli.main(["check", str(mesh), "--which", "bogus"]) == 2


def test_profile_output(capsys):
    assert cli.main(["profile", "--sweep"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "V,sphere_area,profile_area,deficit"
    assert len(lines) == 13
    assert max(float(line.split(",")[3]) for line in lines[1:]) < 1e-6
    assert cli.main(["profile", "--v0", "0"]) == 0


def test_console_entry_point_runs():
    res = subprocess.run([sys.executable, "-m", "hmcf.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "hmcf" in res.stdout
