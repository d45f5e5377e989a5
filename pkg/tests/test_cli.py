import json
import math
import time

import pytest

from mflqg.cli import RunManifest, main

SCALAR_CFG = """
[problem]
A = 0.0
B = 1.0
sigma = 1.0
Q = 1.0
D1 = 1.0
D2 = 0.0
T = 1.0
"""

BAD_Q_CFG = SCALAR_CFG.replace("Q = 1.0", "Q = -1.0")
ESCAPE_CFG = SCALAR_CFG.replace("D1 = 1.0", "D1 = -2.0")

MATRIX_CFG = """
[matrix_problem]
d = 2
A = 0 0; 0 0
B = 1 0; 0 1
sigma = 1 0; 0 1
Q = 1 0; 0 1
D1 = 1 0; 0 1
D2 = 0 0; 0 0
T = 1.0
"""

SIM_CFG = SCALAR_CFG + """
[simulation]
n_paths = 777
dt = 0.01
seed = 5
"""


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def test_solve_preset_writes_outputs(tmp_path):
    rc = main(["solve", "--preset", "example1", "--x", "1", "--x", "2",
               "--out", str(tmp_path)])
    assert rc == 0
    for name in ("phi.csv", "gains.csv", "summary.json", "manifest.json"):
        assert (tmp_path / name).exists()
    summary = read_json(tmp_path / "summary.json")
    assert summary["kind"] == "scalar"
    assert summary["steps"] == 1000
    values = {v["x"]: v["value"] for v in summary["values"]}
    assert values[1.0] == pytest.approx(0.5 + math.log(2.0), abs=1e-9)
    assert values[2.0] == pytest.approx(2.0 + math.log(2.0), abs=1e-9)
    assert (tmp_path / "phi.csv").read_text().splitlines()[0] == "t,phi1,phi2,phi3"
    assert (tmp_path / "gains.csv").read_text().splitlines()[0] == "t,alpha,beta"


def test_solve_steps_override(tmp_path):
    rc = main(["solve", "--preset", "example2", "--steps", "200",
               "--out", str(tmp_path)])
    assert rc == 0
    assert read_json(tmp_path / "summary.json")["steps"] == 200


def test_solve_partial_preset(tmp_path):
    rc = main(["solve", "--preset", "example3", "--out", str(tmp_path)])
    assert rc == 0
    summary = read_json(tmp_path / "summary.json")
    assert summary["kind"] == "partial_obs"
    assert summary["error_compensation"] == pytest.approx(0.5)
    # phi1(0) x^2 + sigma_hat^2 log 2 + D1 P_T with the default even split
    assert summary["values"][0]["value"] == pytest.approx(
        1.0 + 0.5 * math.log(2.0), abs=1e-9)


def test_solve_matrix_config(tmp_path):
    cfg = tmp_path / "matrix.ini"
    cfg.write_text(MATRIX_CFG)
    rc = main(["solve", "--config", str(cfg), "--x", "1,1",
               "--out", str(tmp_path)])
    assert rc == 0
    summary = read_json(tmp_path / "summary.json")
    assert summary["kind"] == "matrix" and summary["d"] == 2
    # two decoupled unit problems: x' Phi1 x = 2 * 1/(1+T), phi3 = 2 log(1+T)
    assert summary["values"][0]["value"] == pytest.approx(
        1.0 + 2.0 * math.log(2.0), abs=1e-9)


def test_solve_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["solve", "--preset", "example1", "--out", str(a)]) == 0
    assert main(["solve", "--preset", "example1", "--out", str(b)]) == 0
    for name in ("phi.csv", "gains.csv", "summary.json", "manifest.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_manifest_shape(tmp_path):
    main(["solve", "--preset", "example1", "--out", str(tmp_path)])
    raw = read_json(tmp_path / "manifest.json")
    assert set(raw) == {"command", "source", "params", "outputs", "version"}
    manifest = RunManifest.read(tmp_path / "manifest.json")
    assert manifest.command == "solve"
    assert manifest.source == "preset:example1"
    assert manifest.outputs["summary"] == "summary.json"


def test_simulate_scalar(tmp_path):
    rc = main(["simulate", "--preset", "example1", "--paths", "2000",
               "--dt", "0.005", "--seed", "3", "--out", str(tmp_path)])
    assert rc == 0
    summary = read_json(tmp_path / "summary.json")
    assert summary["within_threshold"] is True
    assert summary["discrepancy"] <= summary["threshold"]
    assert summary["n_paths"] == 2000
    assert (tmp_path / "trajectory.csv").read_text().splitlines()[0] == "t,m1,m2"


def test_simulate_partial(tmp_path):
    rc = main(["simulate", "--preset", "example3", "--paths", "2000",
               "--dt", "0.005", "--out", str(tmp_path)])
    assert rc == 0
    summary = read_json(tmp_path / "summary.json")
    assert summary["kind"] == "partial_obs"
    assert summary["within_threshold"] is True
    header = (tmp_path / "trajectory.csv").read_text().splitlines()[0]
    assert header == "t,P_t,m1_hat,m2_hat,m2"


def test_simulate_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    args = ["simulate", "--preset", "example1", "--paths", "2000",
            "--dt", "0.005", "--seed", "11"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert (a / "summary.json").read_bytes() == (b / "summary.json").read_bytes()
    assert (a / "trajectory.csv").read_bytes() == (b / "trajectory.csv").read_bytes()


def test_simulate_sim_settings_from_config(tmp_path):
    cfg = tmp_path / "sim.ini"
    cfg.write_text(SIM_CFG)
    rc = main(["simulate", "--config", str(cfg), "--out", str(tmp_path)])
    assert rc == 0
    summary = read_json(tmp_path / "summary.json")
    assert (summary["n_paths"], summary["dt"], summary["seed"]) == (777, 0.01, 5)
    rc = main(["simulate", "--config", str(cfg), "--paths", "123",
               "--out", str(tmp_path)])
    assert rc == 0
    assert read_json(tmp_path / "summary.json")["n_paths"] == 123


def test_simulate_rejects_matrix_problems(tmp_path, capsys):
    cfg = tmp_path / "matrix.ini"
    cfg.write_text(MATRIX_CFG)
    rc = main(["simulate", "--config", str(cfg), "--out", str(tmp_path)])
    assert rc == 2
    assert capsys.readouterr().err.startswith("error: argument:")


def test_verify_scalar_config(tmp_path, capsys):
    cfg = tmp_path / "problem.ini"
    cfg.write_text(SCALAR_CFG)
    rc = main(["verify", "--config", str(cfg), "--paths", "20000",
               "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert rc == 0
    lines = [ln for ln in out.splitlines() if ln.startswith("[")]
    assert all(ln.startswith("[PASS]") for ln in lines)
    names = {ln.split("]")[1].split(":")[0].strip() for ln in lines}
    assert {"assumptions", "terminal-exactness", "residual-sweep",
            "oracle-vs-value", "perturbation-margin", "mc-vs-oracle",
            "gaussianity"} <= names
    payload = read_json(tmp_path / "verify.json")
    assert payload["passed"] is True


def test_verify_matrix_config(tmp_path, capsys):
    cfg = tmp_path / "matrix.ini"
    cfg.write_text(MATRIX_CFG)
    rc = main(["verify", "--config", str(cfg), "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert rc == 0
    assert "[PASS] symmetry" in out and "[PASS] grid-refinement" in out


def test_verify_reports_failed_assumptions(tmp_path, capsys):
    cfg = tmp_path / "bad.ini"
    cfg.write_text(BAD_Q_CFG)
    rc = main(["verify", "--config", str(cfg), "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert rc == 1
    assert "[FAIL] assumptions" in out
    assert "CHECKS FAILED" in out


def test_verify_all_presets_pass(tmp_path, capsys):
    start = time.monotonic()
    for name in ("example1", "example2", "example3", "example4"):
        rc = main(["verify", "--preset", name, "--out", str(tmp_path / name)])
        out = capsys.readouterr().out
        assert rc == 0, f"{name} failed:\n{out}"
        assert "all checks passed" in out
    assert time.monotonic() - start < 300.0


def test_report_merges_runs(tmp_path, capsys):
    solve_dir = tmp_path / "solve"
    sim_dir = tmp_path / "sim"
    main(["solve", "--preset", "example1", "--out", str(solve_dir)])
    main(["simulate", "--preset", "example1", "--paths", "2000",
          "--dt", "0.005", "--out", str(sim_dir)])
    capsys.readouterr()
    rc = main(["report", str(solve_dir / "manifest.json"),
               str(sim_dir / "manifest.json"), "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert rc == 0
    lines = (tmp_path / "report.csv").read_text().splitlines()
    assert lines[0] == "source,command,value,mc_total,std_error,status"
    assert len(lines) == 3
    assert lines[1].startswith("preset:example1,solve,")
    assert lines[2].split(",")[-1] == "ok"
    assert out.splitlines()[0].startswith("source")


def test_exit_code_argument_errors(tmp_path, capsys):
    assert main([]) == 2
    capsys.readouterr()
    assert main(["solve"]) == 2          # --preset/--config required
    capsys.readouterr()
    assert main(["solve", "--preset", "nope"]) == 2
    capsys.readouterr()
    rc = main(["solve", "--preset", "example1", "--x", "abc",
               "--out", str(tmp_path)])
    err = capsys.readouterr().err
    assert rc == 2
    assert err.startswith("error: argument:")
    assert list(tmp_path.iterdir()) == []    # bad args leave no partial outputs


def test_exit_code_config_error(tmp_path, capsys):
    cfg = tmp_path / "broken.ini"
    cfg.write_text("[problem]\nA = 0\n")
    rc = main(["solve", "--config", str(cfg), "--out", str(tmp_path)])
    err = capsys.readouterr().err
    assert rc == 3
    assert err.startswith("error: config:")


def test_exit_code_validation_error(tmp_path, capsys):
    cfg = tmp_path / "bad.ini"
    cfg.write_text(BAD_Q_CFG)
    rc = main(["solve", "--config", str(cfg), "--out", str(tmp_path)])
    err = capsys.readouterr().err
    assert rc == 4
    assert err.startswith("error: validation:")
    assert "assumption A1" in err


def test_exit_code_finite_escape(tmp_path, capsys):
    cfg = tmp_path / "escape.ini"
    cfg.write_text(ESCAPE_CFG)
    rc = main(["solve", "--config", str(cfg), "--out", str(tmp_path)])
    err = capsys.readouterr().err
    assert rc == 5
    assert err.startswith("error: escape:")
    assert "finite escape" in err


def test_exit_code_io_errors(tmp_path, capsys):
    rc = main(["solve", "--config", str(tmp_path / "absent.ini"),
               "--out", str(tmp_path)])
    assert rc == 6
    capsys.readouterr()
    garbage = tmp_path / "manifest.json"
    garbage.write_text("{not json")
    rc = main(["report", str(garbage), "--out", str(tmp_path)])
    err = capsys.readouterr().err
    assert rc == 6
    assert err.startswith("error: io:")


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert capsys.readouterr().out.startswith("mflqg ")
