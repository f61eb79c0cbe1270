import csv
import xml.etree.ElementTree as ET
from pathlib import Path

import pytest

from sitcontrol.cli import TRAJECTORY_COLUMNS, main
from sitcontrol.config import (
    ConfigError,
    apply_horizon,
    apply_preset,
    dump_config,
    load_config,
    parse_config,
)
from sitcontrol.experiments import nominal_scenario


# --- config parsing ------------------------------------------------------

def test_empty_config_gives_nominal_defaults():
    cfg = parse_config("")
    assert cfg.model.beta_E == 10.0
    assert cfg.model.cap_K == 22200.0
    assert cfg.model_true == cfg.model
    assert cfg.pulse.period_J == 3
    assert cfg.pulse.u_max == 1e6
    assert cfg.controller.alpha < 0.0
    assert cfg.reference.y_target == 500.0
    assert cfg.grid.t_end == 400.0
    assert cfg.montecarlo.n_runs == 100
    assert cfg.epi is None


def test_default_config_scenario_matches_builder():
    assert parse_config("").scenario(seed=5) == nominal_scenario(seed=5)


def test_model_true_overrides_single_key():
    cfg = parse_config("[model.true]\ndelta_S = 0.156\n")
    assert cfg.model.delta_S == 0.12
    assert cfg.model_true.delta_S == 0.156
    assert cfg.model_true.beta_E == cfg.model.beta_E
    # planner's pulse belief follows [model], not [model.true]
    assert cfg.pulse.delta_S_nominal == 0.12


def test_unknown_key_is_rejected_with_location():
    text = "[model]\nbeta_E = 10.0\nbeta_X = 3.0\n"
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert err.value.section == "model"
    assert err.value.key == "beta_X"
    assert err.value.line == 3


def test_unknown_section_is_rejected():
    with pytest.raises(ConfigError, match="unknown section"):
        parse_config("[mosquito]\nx = 1\n")


def test_invalid_value_reports_section():
    with pytest.raises(ConfigError, match=r"delta_S"):
        parse_config("[model]\ndelta_S = -0.12\n")
    with pytest.raises(ConfigError, match="expected a number"):
        parse_config("[model]\ndelta_S = fast\n")


def test_malformed_syntax_reports_line():
    with pytest.raises(ConfigError, match="malformed"):
        parse_config("[model\nbeta_E = 10\n")


def test_epi_section_requires_all_keys():
    with pytest.raises(ConfigError, match="missing keys"):
        parse_config("[epi]\nbite_rate = 0.3\n")


def test_round_trip_default_dump():
    cfg = parse_config("")
    assert parse_config(dump_config(cfg)) == cfg


def test_round_trip_custom_dump():
    text = ("[model]\nbeta_E = 12.5\n"
            "[model.true]\ndelta_S = 0.2\n"
            "[controller]\nk_p = 0.3\ntau = 4.0\n"
            "[pulse]\nperiod_J = 6\n"
            "[reference]\ny_target = 1500.0\nt_settle = 600.0\n"
            "[grid]\nt_end = 200.0\n"
            "[montecarlo]\nn_runs = 10\nbase_seed = 7\n"
            "[epi]\nbite_rate = 0.3\np_v2h = 0.5\np_h2v = 0.5\n"
            "host_pop = 1000.0\nrecovery = 0.1\nvector_death = 0.1\n")
    cfg = parse_config(text)
    assert parse_config(dump_config(cfg)) == cfg


def test_presets():
    cfg = parse_config("")
    assert apply_preset(cfg, "j6").pulse.period_J == 6
    mis = apply_preset(cfg, "mismatch")
    assert mis.model_true.delta_S == pytest.approx(0.156)
    assert mis.model.delta_S == 0.12
    assert apply_preset(cfg, "nominal") == cfg
    with pytest.raises(ConfigError):
        apply_preset(cfg, "j9")


def test_apply_horizon():
    cfg = apply_horizon(parse_config(""), 120.0)
    assert cfg.grid.t_end == 120.0
    with pytest.raises(ConfigError):
        apply_horizon(cfg, -3.0)


def test_load_config_missing_file():
    with pytest.raises(ConfigError, match="cannot read"):
        load_config("/nonexistent/sit.ini")


# --- CLI -----------------------------------------------------------------

def run_cli(*argv):
    return main(list(argv))


def test_simulate_default_run(tmp_path, capsys):
    out = tmp_path / "run"
    code = run_cli("simulate", "--out", str(out), "--horizon", "150")
    assert code == 0
    captured = capsys.readouterr()
    assert "success=true" in captured.out
    for name in ("trajectory.csv", "pulses.csv", "summary.csv", "config_used.ini"):
        assert (out / name).exists()
    with open(out / "trajectory.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == TRAJECTORY_COLUMNS
    assert len(rows) == 152  # header + days 0..150
    assert float(rows[1][1]) == pytest.approx(21062.905162064824)


def test_simulate_zero_release_exits_2(tmp_path):
    config = tmp_path / "zero.ini"
    config.write_text("[pulse]\nu_max = 0.0\n")
    code = run_cli("simulate", "--config", str(config), "--out",
                   str(tmp_path / "out"), "--horizon", "80")
    assert code == 2


def test_simulate_invalid_config_exits_1(tmp_path, capsys):
    config = tmp_path / "bad.ini"
    config.write_text("[model]\ndelta_S = -0.12\n")
    code = run_cli("simulate", "--config", str(config), "--out", str(tmp_path / "o"))
    assert code == 1
    assert "delta_S" in capsys.readouterr().err


def test_simulate_unknown_key_exits_1(tmp_path, capsys):
    config = tmp_path / "bad.ini"
    config.write_text("[pulse]\nperiod = 3\n")
    code = run_cli("simulate", "--config", str(config), "--out", str(tmp_path / "o"))
    assert code == 1
    err = capsys.readouterr().err
    assert "pulse" in err and "period" in err and "line 2" in err


def test_simulate_custom_requires_config(capsys):
    assert run_cli("simulate", "--scenario", "custom") == 1
    assert "requires --config" in capsys.readouterr().err


def test_config_used_round_trips(tmp_path):
    out = tmp_path / "run"
    assert run_cli("simulate", "--out", str(out), "--horizon", "60") == 0
    dumped = load_config(str(out / "config_used.ini"))
    horizon60 = apply_horizon(parse_config(""), 60.0)
    assert dumped == horizon60


def test_simulate_output_is_byte_deterministic(tmp_path):
    outs = []
    for name in ("r1", "r2"):
        out = tmp_path / name
        assert run_cli("simulate", "--out", str(out), "--horizon", "90") == 0
        outs.append(out)
    for filename in ("trajectory.csv", "pulses.csv", "summary.csv"):
        assert (outs[0] / filename).read_bytes() == (outs[1] / filename).read_bytes()


def test_montecarlo_cli_deterministic(tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    for out in (out_a, out_b):
        code = run_cli("montecarlo", "--out", str(out), "--runs", "3",
                       "--seed", "11", "--horizon", "120")
        assert code in (0, 2)
    assert (out_a / "mc_summary.csv").read_bytes() == \
        (out_b / "mc_summary.csv").read_bytes()


def test_montecarlo_csv_schema(tmp_path):
    out = tmp_path / "mc"
    run_cli("montecarlo", "--out", str(out), "--runs", "2", "--seed", "3",
            "--horizon", "100")
    with open(out / "mc_summary.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == (["run_id", "seed"] + [f"I{i}" for i in range(1, 9)]
                       + ["rmse", "total_released", "saturation_count", "success"])
    assert len(rows) == 4  # header + 2 runs + aggregate
    assert rows[-1][0] == "aggregate"
    assert all(0.7 <= float(v) <= 1.3 for v in rows[1][2:10])


def test_equilibrium_command(capsys):
    assert run_cli("equilibrium") == 0
    out = capsys.readouterr().out
    assert "x1* = 21062.9" in out
    assert "x4* = 0" in out


def test_equilibrium_with_epi(tmp_path, capsys):
    config = tmp_path / "epi.ini"
    config.write_text("[epi]\nbite_rate = 1.0\np_v2h = 1.0\np_h2v = 1.0\n"
                      "host_pop = 1.0\nrecovery = 1.0\nvector_death = 1.0\n")
    assert run_cli("equilibrium", "--config", str(config)) == 0
    out = capsys.readouterr().out
    assert "V_c = 1" in out
    assert "egg target" in out


def test_equilibrium_extinction_notice(tmp_path, capsys):
    config = tmp_path / "ext.ini"
    config.write_text("[model]\nbeta_E = 0.01\n")
    assert run_cli("equilibrium", "--config", str(config)) == 0
    out = capsys.readouterr().out
    assert "extinct" in out
    assert "x1* = 0" in out


# --- figures -------------------------------------------------------------

def test_plot_outputs_are_valid_svg(tmp_path):
    out = tmp_path / "fig"
    code = run_cli("simulate", "--out", str(out), "--horizon", "90", "--plot")
    assert code == 0
    expectations = {
        "states.svg": 5,             # x1..x4 + reference overlay
        "control_continuous.svg": 2,  # command + realized stock
        "control_impulse.svg": 1,     # stem marker line
    }
    for name, min_series in expectations.items():
        path = out / name
        assert path.exists()
        root = ET.parse(path).getroot()  # well-formed XML
        assert root.tag.endswith("svg")
        line_groups = [el for el in root.iter()
                       if el.get("id", "").startswith("line2d")]
        assert len(line_groups) >= min_series, name
