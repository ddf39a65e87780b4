import json

import numpy as np
import pytest

from harnack_lab.cli import main


def run(tmp_path, *argv):
    out = tmp_path / "out"
    return main([*argv, "--out", str(out)]), out


SMALL_SIM = ["--set", "sim.n_paths=300", "--set", "sim.t_max=0.5"]


def test_check_exit_codes(tmp_path, capsys):
    rc, out = run(tmp_path / "a", "check", "--set", "check.r=1")
    assert rc == 0
    report = json.loads((out / "hormander_report.json").read_text())
    assert report["pass"] is True
    assert report["r"] == 1
    assert report["sign_witnesses"] == [[-2.0], [2.0]]

    rc, out = run(tmp_path / "b", "check", "--set", "operator.beta=y1^2")
    assert rc == 1
    report = json.loads((out / "hormander_report.json").read_text())
    assert report["pass"] is False

    rc, _ = run(tmp_path / "c", "check", "--set", "operator.beta=q1")
    assert rc == 2
    assert "unknown identifier" in capsys.readouterr().err


def test_config_errors_are_aggregated(tmp_path, capsys):
    rc, _ = run(tmp_path, "check",
                "--set", "operator.beta=q1",
                "--set", "sim.dt=fast",
                "--set", "domain.y_outer_radius=-2")
    assert rc == 2
    err = capsys.readouterr().err
    assert err.count("config error:") >= 3


def test_malformed_set_flag(tmp_path, capsys):
    rc, _ = run(tmp_path, "check", "--set", "nonsense")
    assert rc == 2
    assert "SECTION.KEY=VALUE" in capsys.readouterr().err


def test_config_file_and_flag_precedence(tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text("[operator]\nbeta = y1^2\n\n[check]\nr = 2\n")
    rc, _ = run(tmp_path / "x", "check", "--config", str(ini))
    assert rc == 1  # config beta never changes sign
    rc, _ = run(tmp_path / "y", "check", "--config", str(ini),
                "--set", "operator.beta=y1")
    assert rc == 0  # flag wins over file


def test_missing_config_file(tmp_path, capsys):
    rc, _ = run(tmp_path, "check", "--config", str(tmp_path / "absent.ini"))
    assert rc == 2
    assert "cannot read config" in capsys.readouterr().err


def test_simulate_row_count_and_zero_drift(tmp_path):
    rc, out = run(tmp_path, "simulate", *SMALL_SIM,
                  "--set", "operator.beta=0",
                  "--set", "simulate.start_x=1.25")
    assert rc == 0
    lines = (out / "paths.csv").read_text().strip().split("\n")
    assert lines[0] == "path_id,stopped_x,stopped_y1,stop_time,gamma_integral,exited"
    assert len(lines) == 1 + 300
    xs = {line.split(",")[1] for line in lines[1:]}
    assert xs == {"1.25"}


def test_simulate_rerun_bitwise_identical(tmp_path):
    rc_a, out_a = run(tmp_path / "a", "simulate", *SMALL_SIM, "--seed", "7")
    rc_b, out_b = run(tmp_path / "b", "simulate", *SMALL_SIM, "--seed", "7",
                      "--workers", "4")
    assert rc_a == rc_b == 0
    for name in ("paths.csv", "measure.csv"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


def test_seed_sources(tmp_path, monkeypatch):
    monkeypatch.setenv("HARNACK_LAB_SEED", "5")
    _, out_env = run(tmp_path / "env", "simulate", *SMALL_SIM)
    _, out_flag = run(tmp_path / "flag", "simulate", *SMALL_SIM, "--seed", "5")
    _, out_other = run(tmp_path / "other", "simulate", *SMALL_SIM, "--seed", "8")
    env_bytes = (out_env / "paths.csv").read_bytes()
    assert env_bytes == (out_flag / "paths.csv").read_bytes()
    assert env_bytes != (out_other / "paths.csv").read_bytes()


def test_evaluate_value_mode(tmp_path):
    rc, out = run(tmp_path, "evaluate", "--set", "sim.n_paths=2000")
    assert rc == 0
    payload = json.loads((out / "evaluate.json").read_text())
    assert payload["mode"] == "value"
    assert payload["solution"] == "kolmogorov(10)"
    est = payload["estimate"]
    assert abs(est["value"] - 10.0) < 5 * est["std_error"] + 0.01


def test_evaluate_sandwich_mode(tmp_path):
    rc, out = run(tmp_path, "evaluate", "--set", "sim.n_paths=2000",
                  "--set", "evaluate.mode=sandwich")
    assert rc == 0
    payload = json.loads((out / "evaluate.json").read_text())
    assert payload["passed"] is True
    assert payload["lower"] <= payload["value_at_start"] <= payload["upper"]


def test_evaluate_unknown_solution(tmp_path, capsys):
    rc, _ = run(tmp_path, "evaluate", "--set", "evaluate.solution=fourier(2)")
    assert rc == 2
    assert "unknown solution" in capsys.readouterr().err


def test_make_solution_unit_field(tmp_path):
    rc, out = run(tmp_path, "make-solution", "--svg",
                  "--set", "sim.n_paths=100",
                  "--set", "make_solution.grid_nx=3",
                  "--set", "make_solution.grid_ny=3")
    assert rc == 0
    rows = (out / "solution.csv").read_text().strip().split("\n")
    assert rows[0] == "x,y1,value"
    vals = {row.split(",")[-1] for row in rows[1:]}
    assert vals == {"1"}
    assert (out / "solution.json").exists()
    assert (out / "solution.svg").read_text().startswith("<svg")


def test_harnack_constants_family(tmp_path):
    rc, out = run(tmp_path, "harnack", "--set", "harnack.family=constants")
    assert rc == 0
    payload = json.loads((out / "harnack.json").read_text())
    assert payload == {"family": "constants", "max_ratio": 1.0, "verdict": None}


def test_harnack_kolmogorov_family_max(tmp_path):
    rc, out = run(tmp_path, "harnack")
    assert rc == 0
    payload = json.loads((out / "harnack.json").read_text())
    assert payload["max_ratio"] == pytest.approx(19 / 11, rel=1e-12)
    lines = (out / "harnack.csv").read_text().strip().split("\n")
    assert len(lines) == 5  # header + 4 offsets


def test_harnack_positivity_failure(tmp_path, capsys):
    rc, _ = run(tmp_path, "harnack",
                "--set", "harnack.family=catalog",
                "--set", "harnack.solutions=kolmogorov(0)")
    assert rc == 1
    assert "not positive" in capsys.readouterr().err


def test_counterexample_verdict(tmp_path):
    rc, out = run(tmp_path, "counterexample", "--svg")
    assert rc == 0
    payload = json.loads((out / "counterexample.json").read_text())
    assert payload["verdict"] == "divergent"
    assert payload["max_ratio"] == pytest.approx(np.exp(8) * np.cosh(np.sqrt(8)), rel=1e-9)
    assert (out / "counterexample.svg").exists()
    lines = (out / "counterexample.csv").read_text().strip().split("\n")
    assert len(lines) == 5


def test_regions_outputs(tmp_path):
    rc, out = run(tmp_path, "regions", "--set", "regions.d=0.5")
    assert rc == 0
    payload = json.loads((out / "regions.json").read_text())
    assert payload["plus_count"] == 49
    assert payload["minus_count"] == 49
    lines = (out / "regions.csv").read_text().strip().split("\n")
    assert len(lines) == 1 + 49 + 49


def test_regions_with_cap_check(tmp_path):
    rc, out = run(tmp_path, "regions",
                  "--set", "regions.solution=kolmogorov(10)",
                  "--set", "regions.cap=2")
    assert rc == 0
    payload = json.loads((out / "regions.json").read_text())
    assert payload["check"]["passed"] is True
    rc, _ = run(tmp_path / "tight", "regions",
                "--set", "regions.solution=kolmogorov(10)",
                "--set", "regions.cap=1.01")
    assert rc == 1


def test_average_output_and_bad_z(tmp_path, capsys):
    rc, out = run(tmp_path, "average")
    assert rc == 0
    rows = (out / "average.csv").read_text().strip().split("\n")
    assert rows[0] == "x,y1,value"
    rc, _ = run(tmp_path / "bad", "average", "--set", "average.z=0.4")
    assert rc == 1
    assert "1/3" in capsys.readouterr().err


def test_harnack_rerun_bitwise_identical(tmp_path):
    _, out_a = run(tmp_path / "a", "harnack", "--svg")
    _, out_b = run(tmp_path / "b", "harnack", "--svg")
    for name in ("harnack.csv", "harnack.json", "harnack.svg"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()
