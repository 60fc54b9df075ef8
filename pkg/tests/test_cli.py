import json

import numpy as np
import pandas as pd
import pytest

from main import config_from_args, main, parse_arguments
from src.cli.runner import RunConfig
from src.utils.errors import DomainError


def run(*argv):
    return main([*argv, "--threads", "1"])


def entries(log_path):
    return json.loads(log_path.read_text(encoding="utf-8")) if log_path.exists() else []


def test_closed_form_design(model_file, tmp_path, isolated_run_log):
    out = tmp_path / "out"
    assert run("design", "--model", str(model_file()), "--xf", "400", "--closed-form", "--output", str(out)) == 0
    data = json.loads((out / "profile.json").read_text())
    assert data["zone"]["T1_s"] == pytest.approx(0.0409, abs=5e-5)
    assert data["zone"]["T2_s"] == pytest.approx(0.9151, abs=5e-5)
    assert data["N"] == 4
    log = entries(isolated_run_log)
    assert len(log) == 1
    assert log[0]["action"] == "PROFILE_DESIGN"
    assert log[0]["status"] == "SUCCESS"
    assert log[0]["solver"] == "closed_form"


def test_numeric_design_writes_the_certificate(model_file, tmp_path):
    out = tmp_path / "out"
    assert run("design", "--model", str(model_file()), "--output", str(out)) == 0
    data = json.loads((out / "profile.json").read_text())
    assert data["N"] == 2
    assert data["pmp_certificate"]["status"] == "PASS"


def test_design_with_a_profile_certifies_it(model_file, tmp_path, isolated_run_log):
    first = tmp_path / "first"
    assert run("design", "--model", str(model_file()), "--xf", "400", "--closed-form", "--output", str(first)) == 0
    out = tmp_path / "check"
    code = run("design", "--model", str(model_file()), "--profile", str(first / "profile.json"), "--output", str(out))
    assert code == 0
    data = json.loads((out / "certificate.json").read_text())
    assert data["pmp_certificate"]["status"] == "PASS"
    assert "robustness_check" not in data
    log = entries(isolated_run_log)
    assert len(log) == 2
    assert log[-1]["action"] == "VALIDATION"
    assert log[-1]["solver"] == "costate_fit"
    assert log[-1]["status"] == "SUCCESS"


def test_robust_check_of_a_plain_profile_is_partial(model_file, tmp_path, isolated_run_log):
    first = tmp_path / "first"
    assert run("design", "--model", str(model_file()), "--output", str(first)) == 0
    out = tmp_path / "check"
    args = ("--profile", str(first / "profile.json"), "--robust", "--output", str(out))
    assert run("design", "--model", str(model_file()), *args) == 0
    data = json.loads((out / "certificate.json").read_text())
    assert data["robustness_check"]["status"] == "FAIL"
    assert entries(isolated_run_log)[-1]["status"] == "PARTIAL"


def test_closed_form_refuses_a_damped_model(model_file, tmp_path, capsys, isolated_run_log):
    code = run("design", "--model", str(model_file(zeta=0.01)), "--closed-form", "--output", str(tmp_path))
    assert code == 3
    payload = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert payload["exit_code"] == 3
    assert payload["error"] == "DomainError"
    assert entries(isolated_run_log)[-1]["status"] == "FAILURE"


def test_infeasible_switch_cap_exits_with_2(model_file, tmp_path, capsys):
    assert run("design", "--model", str(model_file()), "--max-switches", "0", "--output", str(tmp_path)) == 2
    assert json.loads(capsys.readouterr().err.strip().splitlines()[-1])["exit_code"] == 2


def test_missing_model_is_invalid_input(tmp_path):
    assert run("design", "--model", str(tmp_path / "nope.json")) == 3
    assert run("design") == 3


def test_unknown_flag_is_invalid_input():
    assert main(["design", "--bogus"]) == 3


def test_repro_and_subcommand_are_exclusive(model_file):
    assert run("--repro", "fig4", "zones", "--model", str(model_file())) == 3


def test_zones_csv(model_file, tmp_path):
    out = tmp_path / "out"
    assert run("zones", "--model", str(model_file()), "--x-max", "700", "--points", "14", "--output", str(out)) == 0
    frame = pd.read_csv(out / "zones.csv")
    assert list(frame.columns[:5]) == ["x_f_mm", "n", "T1_s", "T2_s", "t_f_s"]
    assert frame["x_f_mm"].iloc[0] == pytest.approx(50.0)
    assert frame["n"].tolist() == sorted(frame["n"].tolist())
    assert frame["n"].max() == 3


def test_transitions_csv(model_file, tmp_path):
    out = tmp_path / "out"
    assert run("transitions", "--model", str(model_file()), "--x-max", "700", "--output", str(out)) == 0
    frame = pd.read_csv(out / "transitions.csv")
    assert list(frame.columns) == ["x_f_mm", "t_cr_s", "kind"]
    np.testing.assert_allclose(frame["x_f_mm"], [240.0, 480.0, 480.0], atol=1e-6)
    np.testing.assert_allclose(frame["t_cr_s"], [0.5, 0.5, 1.5], atol=1e-9)


def test_simulation_does_not_depend_on_the_sampling_step(model_file, tmp_path):
    model = str(model_file())
    finals = []
    for dt in ("0.01", "0.005"):
        out = tmp_path / dt
        assert run("simulate", "--model", model, "--dt", dt, "--augmented", "--output", str(out)) == 0
        finals.append(pd.read_csv(out / "trajectory.csv").iloc[-1])
    np.testing.assert_allclose(finals[0].to_numpy(), finals[1].to_numpy(), rtol=1e-10, atol=1e-9)


def test_frequency_sweep_of_a_saved_profile(model_file, tmp_path):
    first = tmp_path / "design"
    assert run("design", "--model", str(model_file()), "--output", str(first)) == 0
    out = tmp_path / "sweep"
    code = run(
        "sweep", "--model", str(model_file()), "--profile", str(first / "profile.json"),
        "--points", "5", "--ratio-min", "0.9", "--ratio-max", "1.1", "--output", str(out),
    )
    assert code == 0
    frame = pd.read_csv(out / "sweep.csv")
    assert list(frame.columns) == ["omega_ratio", "V_mm2_s2"]
    assert frame["V_mm2_s2"].iloc[2] <= 1e-10 * 240.0**2


def test_one_log_entry_per_command(model_file, tmp_path, isolated_run_log):
    model = str(model_file())
    run("zones", "--model", model, "--points", "4", "--output", str(tmp_path))
    run("transitions", "--model", model, "--output", str(tmp_path))
    log = entries(isolated_run_log)
    assert [e["component"] for e in log] == ["cli.zones", "cli.transitions"]
    assert all("inputs" in e["details"] and "outputs" in e["details"] for e in log)


def test_repro_fig4(tmp_path):
    out = tmp_path / "fig"
    assert run("--repro", "fig4", "--output", str(out)) == 0
    zones = pd.read_csv(out / "fig4_zones.csv")
    assert len(zones) == 200
    assert len(pd.read_csv(out / "fig4_transitions.csv")) == 3


def test_identical_inputs_give_identical_files(model_file, tmp_path):
    model = str(model_file())
    for name in ("a", "b"):
        assert run("sweep", "--model", model, "--over", "xf", "--x-max", "300", "--points", "4", "--output", str(tmp_path / name)) == 0
    assert (tmp_path / "a" / "designs.csv").read_bytes() == (tmp_path / "b" / "designs.csv").read_bytes()


def test_options_may_precede_the_subcommand(model_file):
    args = parse_arguments(["--xf", "250", "design", "--model", str(model_file())])
    config = config_from_args(args)
    assert config.command == "design"
    assert config.x_f == 250.0
    assert config.max_switches == 8


@pytest.mark.parametrize(
    "changes",
    [{"points": 1}, {"x_min": 50.0, "x_max": 10.0}, {"dt": 0.0}, {"max_switches": 3}, {"over": "zeta"}],
)
def test_config_validation(model_file, changes):
    config = RunConfig(command="sweep", model=model_file(), **changes)
    with pytest.raises(DomainError):
        config.validate()
