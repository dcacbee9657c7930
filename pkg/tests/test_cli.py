import json
import os
import subprocess
import sys


def run_cli(*args, env_extra=None):
    env = os.environ.copy()
    env.pop("HYPTIMES_DETECTOR_FAULT", None)
    if env_extra:
        env.update(env_extra)
    return subprocess.run(
        [sys.executable, "-m", "hyptimes.cli", *args],
        capture_output=True, text=True, env=env,
    )


def data_rows(path):
    return [l for l in path.read_text().splitlines() if not l.startswith("#")]


def test_version():
    res = run_cli("--version")
    assert res.returncode == 0
    assert res.stdout.strip() == "hyptimes 0.1.0"


# -- simulate -----------------------------------------------------------------


def test_simulate_doubling_every_step_hyperbolic(tmp_path):
    res = run_cli("simulate", "--map", "doubling", "--sigma", "0.5",
                  "--x0", "0.3", "--n", "50", "--out", str(tmp_path), "--no-plot")
    assert res.returncode == 0, res.stderr
    assert "50 hyperbolic times in 50 steps, first = 1" in res.stdout
    rows = data_rows(tmp_path / "trace.csv")[1:]
    assert rows[0].endswith(",0")
    assert all(r.endswith(",1") for r in rows[1:])
    assert (tmp_path / "record.json").exists()
    assert not (tmp_path / "trace.png").exists()


def test_simulate_censoring_is_reported(tmp_path):
    res = run_cli("simulate", "--map", "circle-intermittent", "--x0", "0.25",
                  "--n", "10", "--out", str(tmp_path), "--no-plot")
    assert res.returncode == 0, res.stderr
    assert "hit the exceptional set at step 1" in res.stdout
    assert "# censored: step=1" in (tmp_path / "trace.csv").read_text()


def test_simulate_renders_figure_by_default(tmp_path):
    res = run_cli("simulate", "--map", "doubling", "--n", "20",
                  "--out", str(tmp_path))
    assert res.returncode == 0, res.stderr
    assert (tmp_path / "trace.png").exists()


def test_simulate_requires_map(tmp_path):
    res = run_cli("simulate", "--n", "10", "--out", str(tmp_path))
    assert res.returncode == 2
    assert "registered" in res.stderr


def test_unknown_map_is_a_usage_error(tmp_path):
    res = run_cli("simulate", "--map", "nosuch", "--out", str(tmp_path))
    assert res.returncode == 2
    assert "error" in res.stderr


# -- recurrence ---------------------------------------------------------------


def test_recurrence_small_run(tmp_path):
    res = run_cli("recurrence", "--x1", "0.25", "--n", "1000",
                  "--out", str(tmp_path), "--no-plot")
    assert res.returncode == 0, res.stderr
    assert res.stdout.count("PASS") == 4
    assert "FAIL" not in res.stdout
    assert len(data_rows(tmp_path / "recurrence.csv")) == 1 + 1000
    payload = json.loads((tmp_path / "recurrence.json").read_text())
    assert payload["induction_holds"] is True
    assert payload["term_bound_holds"] is True


def test_recurrence_too_short_for_growth_evidence(tmp_path):
    # ten terms span no complete decade pair, so the growth check cannot
    # pass and the command signals failure
    res = run_cli("recurrence", "--x1", "0.25", "--n", "10",
                  "--out", str(tmp_path), "--no-plot")
    assert res.returncode == 1
    assert "FAIL per-decade growth bounded below" in res.stdout
    assert len(data_rows(tmp_path / "recurrence.csv")) == 1 + 10


def test_recurrence_rejects_x1_outside_half_interval(tmp_path):
    res = run_cli("recurrence", "--x1", "0.75", "--out", str(tmp_path))
    assert res.returncode == 2
    assert "(0, 1/2)" in res.stderr


# -- ensemble -----------------------------------------------------------------


def test_ensemble_rerun_is_byte_identical(tmp_path):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    args = ("ensemble", "--map", "circle-intermittent", "--n", "200",
            "--orbits", "40", "--workers", "2", "--no-plot")
    assert run_cli(*args, "--seed", "1", "--out", str(a)).returncode == 0
    assert run_cli(*args, "--seed", "1", "--out", str(b)).returncode == 0
    assert run_cli(*args, "--seed", "2", "--out", str(c)).returncode == 0
    for name in ("report.json", "hist.csv", "tail.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    mean = lambda p: json.loads((p / "report.json").read_text())[
        "birkhoff"]["log_inv_deriv"]["mean"]
    assert mean(a) != mean(c)


def test_ensemble_doubling_concentrates_first_times(tmp_path):
    res = run_cli("ensemble", "--map", "doubling", "--sigma", "0.5",
                  "--n", "1000", "--orbits", "30", "--out", str(tmp_path),
                  "--no-plot")
    assert res.returncode == 0, res.stderr
    assert "classified as integrable-like" in res.stdout
    rows = data_rows(tmp_path / "hist.csv")
    assert rows[1] == "1,30,1.0"
    assert rows[-1] == ">1000,0,0.0"


# -- integrals ----------------------------------------------------------------


def test_integrals_empty_exceptional_set(tmp_path):
    res = run_cli("integrals", "--map", "doubling", "--p-max", "2",
                  "--out", str(tmp_path), "--no-plot")
    assert res.returncode == 0, res.stderr
    rows = data_rows(tmp_path / "integrals.csv")
    assert rows[0] == "p,value,levels,est_error,converged,n_eval"
    assert rows[1] == "1,0.0,0,0.0,1,0"
    assert rows[2] == "2,0.0,0,0.0,1,0"


def test_integrals_circle_first_moment(tmp_path):
    res = run_cli("integrals", "--map", "circle-intermittent", "--p-max", "1",
                  "--out", str(tmp_path), "--no-plot")
    assert res.returncode == 0, res.stderr
    # 2 * delta * (1 - log delta) at the default delta = 0.1
    assert "0.660517" in res.stdout


# -- verify -------------------------------------------------------------------


def test_verify_single_criterion(tmp_path):
    res = run_cli("verify", "--criteria", "transfer", "--out", str(tmp_path))
    assert res.returncode == 0, res.stderr
    assert "PASS transfer-identity" in res.stdout
    assert "1/1 criteria passed" in res.stdout
    payload = json.loads((tmp_path / "verify.json").read_text())
    assert payload["passed"] is True


def test_verify_catches_injected_detector_fault(tmp_path):
    res = run_cli("verify", "--criteria", "oracle", "--out", str(tmp_path),
                  env_extra={"HYPTIMES_DETECTOR_FAULT": "drop-last"})
    assert res.returncode == 1
    assert "FAIL oracle-equivalence" in res.stdout
    payload = json.loads((tmp_path / "verify.json").read_text())
    assert payload["passed"] is False


def test_verify_unknown_filter_is_usage_error(tmp_path):
    res = run_cli("verify", "--criteria", "nosuchthing", "--out", str(tmp_path))
    assert res.returncode == 2


# -- config file --------------------------------------------------------------


def test_config_file_supplies_defaults_and_flags_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(
        {"map": "doubling", "sigma": 0.5, "n": 30, "x0": 0.3, "plot": False}))
    res = run_cli("simulate", "--config", str(cfg), "--out", str(tmp_path / "a"))
    assert res.returncode == 0, res.stderr
    assert "30 hyperbolic times in 30 steps, first = 1" in res.stdout
    # an explicit flag wins over the config entry
    res2 = run_cli("simulate", "--config", str(cfg), "--sigma", "0.4",
                   "--out", str(tmp_path / "b"))
    assert res2.returncode == 0, res2.stderr
    assert "0 hyperbolic times in 30 steps, first = >30" in res2.stdout
