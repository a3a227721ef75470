import json
import math
import subprocess
import sys
from unittest import mock

import pytest

from schwinger import cli, operators


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_basis_dump(capsys):
    code, out, _ = run(["basis", "--set", "N_cut=1", "--set", "max_particles=2"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("#")
    assert len(lines) == 11


def test_basis_other_charge(capsys):
    code, out, _ = run(["basis", "--set", "N_cut=1", "--set", "max_particles=1",
                        "--set", "charge=1"], capsys)
    assert code == 0 and len(out.splitlines()) == 4


@pytest.mark.parametrize("setting", ["N_cut=-1", "max_particles=x", "L=0", "bogus=1", "k=0",
                                     "M=", "depth=1", "boundary=open", "tol=-1"])
def test_configuration_errors_exit_2(setting, capsys):
    code, _, err = run(["spectrum", "--set", setting], capsys)
    assert code == 2
    assert "config error" in err


def test_config_file_and_override_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# small run\nN_cut = 1\nmax_particles = 2\ncharge = 1\n")
    code, out, _ = run(["basis", "--config", str(cfg)], capsys)
    assert code == 0 and out.splitlines()[0] == "# N_cut=1 max_particles=2 charge=1"
    code, out, _ = run(["basis", "--config", str(cfg), "--set", "charge=0"], capsys)
    assert out.splitlines()[0] == "# N_cut=1 max_particles=2 charge=0"


def test_malformed_config_file(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("N_cut 2\n")
    assert run(["basis", "--config", str(cfg)], capsys)[0] == 2
    assert run(["basis", "--config", str(tmp_path / "missing.cfg")], capsys)[0] == 2


@pytest.mark.parametrize("text, value", [("2pi", 2 * math.pi), ("pi/4", math.pi / 4),
                                         ("-0.5*pi", -math.pi / 2), ("1.25", 1.25)])
def test_pi_literals(text, value):
    assert cli.parse_float(text) == pytest.approx(value, rel=1e-15)


def test_op_dump(capsys, tmp_path):
    out_file = tmp_path / "j0.txt"
    code, out, _ = run(["op", "--set", "op=j0", "--set", "m=1", "--out", str(out_file)], capsys)
    assert code == 0 and out == ""
    lines = out_file.read_text().splitlines()
    assert lines[0].startswith("# provenance=")
    assert all(len(line.split()) == 4 for line in lines[1:])


def test_op_outside_window_exits_2(capsys):
    assert run(["op", "--set", "op=j0", "--set", "m=9"], capsys)[0] == 2


def test_anomaly_table(capsys):
    code, out, _ = run(["anomaly", "--set", "a=0.7", "--set", "quantity=CA"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "quantity,component,mollifier,theta,eps,estimate,extrapolant"
    limit = [line for line in lines if line.startswith("CA,limit,")]
    assert len(limit) == 1
    assert float(limit[0].split(",")[-1]) == pytest.approx(-2.4, abs=1e-6)


def test_gauge_check(capsys):
    code, out, _ = run(["gauge-check", "--set", "a=0.3"], capsys)
    assert code == 0
    reports = json.loads(out)
    assert {tuple(sorted(r)) for r in reports} == {
        ("boundary_dim", "identity", "interior_dim", "passed", "residual", "witness")}
    assert all(r["passed"] for r in reports)


def test_gauge_check_literal_orientation_fails(capsys):
    code, out, _ = run(["gauge-check", "--set", "orientation=literal", "--set", "a=0.3"], capsys)
    assert code == 1
    assert not all(r["passed"] for r in json.loads(out))


def test_verify_default_passes(capsys):
    code, out, err = run(["verify"], capsys)
    assert code == 0, err
    report = json.loads(out)
    assert report["passed"]
    assert set(report["sections"]) == set(cli.SuiteConfig().sections)


def test_verify_flags_literal_hamiltonian(capsys):
    code, out, err = run(["verify", "--set", "coupling_mode=literal-ham", "--set", "sections=gauge"],
                         capsys)
    assert code == 1
    report = json.loads(out)
    assert not report["sections"]["gauge"]["passed"]
    assert "FAILED section gauge" in err


def test_verify_catches_wrong_anomaly_constant(capsys):
    # a regularized charge built with a wrong constant must disagree with the limit
    with mock.patch.object(operators, "axial_anomaly_constant", lambda a, L: -a * L / math.pi):
        code, out, err = run(["verify", "--set", "sections=anomaly,regularized"], capsys)
    assert code == 1
    report = json.loads(out)
    assert not report["sections"]["anomaly"]["passed"]
    assert "FAILED section anomaly" in err


def test_verify_rejects_unknown_section(capsys):
    assert run(["verify", "--set", "sections=gauge,magic"], capsys)[0] == 2


def test_spectrum_free_single_point(capsys):
    code, out, _ = run(["spectrum", "--set", "e=0", "--set", "M=1"], capsys)
    assert code == 0
    assert out.splitlines() == ["index,eigenvalue,residual", "0,0,0"]


def test_spectrum_k_too_large_exits_2(capsys):
    assert run(["spectrum", "--set", "k=100000"], capsys)[0] == 2


def test_spectrum_refinement_report(tmp_path, capsys):
    rep = tmp_path / "report.json"
    code, out, _ = run(["spectrum", "--set", "M=8,16", "--report", str(rep)], capsys)
    assert code == 0
    assert out.splitlines()[0] == "M,index,eigenvalue,residual"
    report = json.loads(rep.read_text())
    assert set(report["ground_state"]) == {"8", "16"}
    assert report["refinement"]["direction"] == "increasing"
    assert report["refinement"]["monotone"]
    assert report["gauge_invariance_full"]["passed"]


def test_monotone_summary():
    assert cli._monotone([3.0, 2.0, 1.5])["direction"] == "decreasing"
    assert cli._monotone([1.0, 2.0, 1.5])["direction"] == "none"
    assert not cli._monotone([1.0, 1.1, 1.5])["monotone"]


def test_output_is_byte_identical(capsys):
    argv = ["spectrum", "--set", "M=8", "--set", "k=3", "--set", "a=0.1"]
    first = run(argv, capsys)[1]
    second = run(argv, capsys)[1]
    assert first == second
    argv = ["gauge-check", "--set", "N_cut=2", "--set", "max_particles=2"]
    assert run(argv, capsys)[1] == run(argv, capsys)[1]


def test_thread_cap_validated(monkeypatch, capsys):
    monkeypatch.setenv(cli.THREADS_ENV, "zero")
    assert run(["basis"], capsys)[0] == 2
    monkeypatch.setenv(cli.THREADS_ENV, "0")
    assert run(["basis"], capsys)[0] == 2
    monkeypatch.setenv(cli.THREADS_ENV, "1")
    assert run(["basis"], capsys)[0] == 0


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "schwinger.cli", "basis", "--set", "N_cut=1",
                           "--set", "max_particles=0"], capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.splitlines() == ["# N_cut=1 max_particles=0 charge=0", "F:{};A:{}"]
