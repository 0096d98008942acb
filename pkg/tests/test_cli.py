import csv
import json

import numpy as np
import pytest

from ionphonon import cli, scenarios
from ionphonon.propagate import PropagationError
from ionphonon.scenarios import ConfigError, ExperimentConfig, embedded_scenarios, load_configs

BS_CONFIG = {
    "schema_version": 1,
    "name": "small_bs",
    "scenario": "custom",
    "hamiltonian": {"kind": "effective_bs", "xi_khz": 0.2, "omega_khz": 20.0, "drive_khz": 4.0, "n_max": 6},
    "initial_state": {"a": 1},
    "times": {"start": 0.0, "stop": 2.0, "count": 11},
    "outputs": ["p_1_0", "p_0_1", "nbar_a"],
}


def read_csv(path):
    with open(path, encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "small.json"
    path.write_text(json.dumps(BS_CONFIG), encoding="utf-8")
    return path


def test_params_prints_json(capsys):
    assert cli.main(["params"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["derived"]["xi_khz"] == pytest.approx(7.2377738844942817, rel=1e-12)
    assert data["trap"]["omega_z"] > 0
    assert cli.main(["run", "params"]) == 0


def test_params_custom_trap(tmp_path, capsys):
    trap = tmp_path / "trap.json"
    trap.write_text(json.dumps({"ion_mass": 6.6e-26, "omega_z": 2e6, "omega_a": 8.9e6, "omega_b": 4.4e6,
                                "omega_c": 4.4e6}), encoding="utf-8")
    assert cli.main(["params", "--trap", str(trap)]) == 0
    assert json.loads(capsys.readouterr().out)["derived"]["eta_b"] == 0.0
    trap.write_text(json.dumps({"ion_mass": 1.0, "bogus": 2}), encoding="utf-8")
    assert cli.main(["params", "--trap", str(trap)]) == 2


def test_run_custom_config(config_file, tmp_path):
    out = tmp_path / "out"
    assert cli.main(["run", str(config_file), "--out", str(out)]) == 0
    header, data = read_csv(out / "small_bs.csv")
    assert header == ["t", "p_1_0", "p_1_0_analytic", "p_0_1", "p_0_1_analytic", "nbar_a"]
    col = {name: data[:, i] for i, name in enumerate(header)}
    for name in ("p_1_0", "p_0_1"):
        assert np.all(col[name] >= -1e-12) and np.all(col[name] <= 1 + 1e-9)
        np.testing.assert_allclose(col[name], col[name + "_analytic"], atol=1e-8)
    np.testing.assert_allclose(col["p_1_0"] + col["p_0_1"], 1.0, atol=1e-8)
    np.testing.assert_allclose(col["nbar_a"], col["p_1_0"], atol=1e-8)
    summary = json.loads((out / "small_summary.json").read_text(encoding="utf-8"))
    assert summary["experiments"][0]["config"]["name"] == "small_bs"
    assert summary["experiments"][0]["runs"][0]["diagnostics"]["max_norm_drift"] < 1e-8


def test_rerun_is_byte_identical(config_file, tmp_path):
    first, second = tmp_path / "one", tmp_path / "two"
    assert cli.main(["run", str(config_file), "--out", str(first)]) == 0
    assert cli.main(["run", str(config_file), "--out", str(second)]) == 0
    for name in ("small_bs.csv", "small_summary.json"):
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_overrides_reach_the_summary(config_file, tmp_path):
    assert cli.main(["run", str(config_file), "--out", str(tmp_path), "--nmax", "4", "--tol", "1e-7"]) == 0
    cfg = json.loads((tmp_path / "small_summary.json").read_text(encoding="utf-8"))["experiments"][0]["config"]
    assert cfg["hamiltonian"]["n_max"] == 4 and cfg["tol"] == 1e-7


def test_sweep_writes_table(tmp_path):
    sweep = dict(BS_CONFIG, name="swept", sweep={"drive_khz": [2.0, 4.0]})
    path = tmp_path / "swept.json"
    path.write_text(json.dumps(sweep), encoding="utf-8")
    assert cli.main(["run", str(path), "--out", str(tmp_path)]) == 0
    header, data = read_csv(tmp_path / "swept_sweep.csv")
    assert header[0] == "drive_khz" and data.shape[0] == 2
    assert (tmp_path / "swept_drive_khz=2.csv").exists()


@pytest.mark.parametrize("args", [
    ["run", "nowhere"],
    ["run", "fig1", "--jobs", "0"],
    ["run", "fig1", "--tol", "0.5"],
    ["verify", "--only", "A99"],
])
def test_invalid_input_exit_code(args, tmp_path):
    assert cli.main(args + (["--out", str(tmp_path)] if args[0] == "run" else [])) == 2


@pytest.mark.parametrize("patch", [{"name": "bad name"}, {"times": {"start": 0, "stop": 1, "count": 1}},
                                   {"outputs": ["p_x"]}, {"schema_version": 7}, {"colour": "red"}])
def test_bad_config_exit_code(patch, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(dict(BS_CONFIG, **patch)), encoding="utf-8")
    assert cli.main(["run", str(path), "--out", str(tmp_path)]) == 2
    path.write_text("{not json", encoding="utf-8")
    assert cli.main(["run", str(path), "--out", str(tmp_path)]) == 2


def test_propagation_failure_exit_code(config_file, tmp_path, monkeypatch):
    def broken(cfg, jobs=1):
        raise PropagationError("step size fell below floor")

    monkeypatch.setattr(cli, "run_experiment", broken)
    assert cli.main(["run", str(config_file), "--out", str(tmp_path)]) == 3


def test_probability_range_check():
    assert cli._probability_columns_ok({"p_1": np.array([0.0, 1.0]), "nbar_a": np.array([5.0])})
    assert not cli._probability_columns_ok({"p_1": np.array([0.0, 1.0 + 1e-6])})
    assert not cli._probability_columns_ok({"fidelity_tmss": np.array([-1e-6])})


def test_config_round_trip():
    for configs in embedded_scenarios().values():
        for cfg in configs:
            again = ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
            assert again.to_dict() == cfg.to_dict()
    assert len(load_configs(json.dumps([BS_CONFIG, dict(BS_CONFIG, name="other")]))) == 2
    with pytest.raises(ConfigError):
        load_configs("42")


def test_figure_scenarios_columns(tmp_path):
    assert cli.main(["run", "fig1", "--out", str(tmp_path), "--nmax", "8", "--tol", "1e-6"]) == 0
    header, _ = read_csv(tmp_path / "fig1.csv")
    assert [h for h in header if not h.endswith("_analytic")] == ["t", "p_0", "p_1", "p_2", "nbar_b"]
    assert "p_0_analytic" in header
    assert cli.main(["run", "fig3", "--out", str(tmp_path), "--nmax", "6", "--tol", "1e-6"]) == 0
    header, data = read_csv(tmp_path / "fig3.csv")
    assert [h for h in header if not h.endswith("_analytic")] == ["t", "p_2_2", "p_3_1", "p_1_3", "p_4_0", "p_0_4"]
    assert data[0, 1] == pytest.approx(1.0)


def test_fig4_metrology_columns(tmp_path, monkeypatch):
    fig4 = embedded_scenarios()["fig4"][0]
    small = ExperimentConfig.from_dict({**fig4.to_dict(), "metrology": {"n_values": [0, 1], "t_f": 1.0}})
    monkeypatch.setattr(scenarios, "embedded_scenarios", lambda: {"fig4": [small]})
    monkeypatch.setattr(cli, "embedded_scenarios", lambda: {"fig4": [small]})
    assert cli.main(["run", "fig4", "--out", str(tmp_path), "--nmax", "6"]) == 0
    header, data = read_csv(tmp_path / "fig4.csv")
    assert header == ["n", "lambda", "cfi_lambda", "cfi_epsilon", "qfi_lambda", "qfi_epsilon", "excluded_mass",
                      "deficit"]
    assert data[0, 2] == pytest.approx(0.0, abs=1e-6)
    assert data[1, 2] == pytest.approx(16.0, rel=1e-2)
