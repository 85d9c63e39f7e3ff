import json
import os
import subprocess
import sys

import pytest

from wafersmc import presets
from wafersmc.cli import EXIT_ASSERT, EXIT_CONFIG, EXIT_OK, main
from wafersmc.config import ConfigError, apply_overrides, effective_yaml, load_config, parse_config


def _yaml(tmp_path, text):
    p = tmp_path / "exp.yaml"
    p.write_text(text)
    return str(p)


def test_parse_full_config(tmp_path):
    exp = load_config(_yaml(tmp_path, "kind: case1\nseed: 3\ncontrollers: [LVGSTA, PFVSTA]\n"
                                      "noise: {power: 4.0e-18}\nsim: {control_rate: 20000}\n"))
    cfgs = apply_overrides(presets.case_configs(1), exp)
    assert list(cfgs) == ["LVGSTA", "PFVSTA"]
    for cfg in cfgs.values():
        assert cfg.noise.seed == 3 and cfg.noise.power == 4e-18 and cfg.control_rate == 20000


@pytest.mark.parametrize("text", [
    "kind: case1\nnosie: {power: 1}\n",
    "kind: case1\nnoise: {powr: 1}\n",
    "kind: case1\nsim: {rate: 1}\n",
    "kind: nothing\n",
    "seed: 1\n",
    "kind: case1\nseed: 1.5\n",
    "kind: case1\ncontrollers: 7\n",
])
def test_bad_configs_rejected(tmp_path, text):
    with pytest.raises(ConfigError):
        load_config(_yaml(tmp_path, text))


def test_override_validation():
    with pytest.raises(ConfigError):
        apply_overrides(presets.case_configs(1), parse_config({"kind": "case1", "controllers": ["X"]}))
    with pytest.raises(ConfigError):
        apply_overrides(presets.accel_study_configs(),
                        parse_config({"kind": "accel-study", "trajectory": {"scan_length": 0.1}}))


def test_effective_yaml_is_stable():
    exp = parse_config({"kind": "case2", "seed": 5})
    cfgs = apply_overrides(presets.case_configs(2), exp)
    assert effective_yaml(exp, cfgs) == effective_yaml(exp, cfgs)
    assert "seed: 5" in effective_yaml(exp, cfgs)


def test_gains_command(capsys):
    rc = main(["gains", "--p1", "2", "--p2", "-1", "--p4", "1", "--D1", "0.5", "--D2", "1",
               "--D3", "0", "--D4", "0.5", "--gamma", "1", "--v-dot", "0"])
    assert rc == EXIT_OK
    assert "6" in capsys.readouterr().out


def test_gains_constraint_violation_exits_2(capsys):
    rc = main(["gains", "--p1", "2", "--p2", "1", "--p4", "1", "--D1", "0.5", "--D2", "1",
               "--D3", "0", "--D4", "0.5", "--gamma", "1"])
    assert rc == EXIT_CONFIG
    assert "error" in capsys.readouterr().err


def test_bound_command(capsys):
    assert main(["bound"]) == EXIT_OK
    eps = float(capsys.readouterr().out.split("=")[1])
    assert 0.08 < eps < 0.085


def test_bad_config_file_exits_2(tmp_path):
    assert main(["case", "1", "--config", _yaml(tmp_path, "kind: case1\nbogus: 1\n")]) == EXIT_CONFIG
    assert main(["theorem", "--config", _yaml(tmp_path, "kind: case1\n")]) == EXIT_CONFIG


def test_theorem_outputs(tmp_path):
    out = tmp_path / "thm"
    assert main(["theorem", "--out", str(out), "--assert"]) == EXIT_OK
    names = set(os.listdir(out))
    assert {"PFVSTA-theorem.csv", "comparison.csv", "comparison.txt", "summary.json",
            "effective_config.yaml"} <= names
    summary = json.loads((out / "summary.json").read_text())
    assert all(summary["checks"].values())
    assert not [n for n in names if n.startswith(".")]


def test_assert_flag_reports_failure(capsys):
    # without PFVSTA in the set its ordering checks cannot pass
    assert main(["case", "1", "--controllers", "LVGSTA"]) == EXIT_OK
    assert main(["case", "1", "--controllers", "LVGSTA", "--assert"]) == EXIT_ASSERT
    assert "[FAIL] PFVSTA has the smallest SP RMS" in capsys.readouterr().out


def test_sweep_command(tmp_path, capsys):
    cfg = _yaml(tmp_path, "kind: sweep\nsweep:\n  preset: theorem\n  controller: PFVSTA-theorem\n"
                          "  axis: {noise.seed: [1, 2]}\n")
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "sw")]) == EXIT_OK
    lines = (tmp_path / "sw" / "sweep.csv").read_text().splitlines()
    assert lines[0].startswith("noise.seed,run,status") and len(lines) == 3


def test_rerun_is_byte_identical(tmp_path):
    for d in ("a", "b"):
        assert main(["accel-study", "--controllers", "PFVSTA", "--seed", "4",
                     "--out", str(tmp_path / d)]) in (EXIT_OK, EXIT_ASSERT)
    for name in ("PFVSTA.csv", "comparison.csv", "summary.json", "effective_config.yaml"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "wafersmc.cli", "bound", "--k1", "0"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("epsilon")
