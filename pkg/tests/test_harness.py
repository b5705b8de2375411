"""Experiment harness: config parsing, hashing, reports, CLI."""

import json

import numpy as np
import pytest

from heatlab import cli, harness


LIGHT = {
    "grid.n": 256,
    "mc.N": 5000,
    "mc.h_t": 0.01,
    "mc.keep_paths": 10,
    "truncation.K_max": 8,
    "truncation.m": 64,
    "ibound.k_max": 1,
    "ibound.times": [0.5],
    "times": [0.5],
    "mollify.levels": [2, 4],
}


def test_config_parse_kv(tmp_path):
    f = tmp_path / "exp.cfg"
    f.write_text("""
# comment line
grid.n = 128
drift.preset = constant
drift.amplitude = 2.5
times = 0.25, 0.5
""")
    cfg = harness.ExperimentConfig.from_file(f)
    assert cfg["grid.n"] == 128
    assert cfg["drift.preset"] == "constant"
    assert cfg["drift.amplitude"] == 2.5
    assert cfg["times"] == [0.25, 0.5]
    assert cfg["grid.d"] == 1  # default survives


def test_config_parse_json_equivalent(tmp_path):
    f1 = tmp_path / "exp.cfg"
    f1.write_text("grid.n = 128\ndrift.amplitude = 2.5\n")
    f2 = tmp_path / "exp.json"
    f2.write_text(json.dumps({"grid": {"n": 128}, "drift": {"amplitude": 2.5}}))
    c1 = harness.ExperimentConfig.from_file(f1)
    c2 = harness.ExperimentConfig.from_file(f2)
    assert c1.hash == c2.hash


def test_config_hash_sensitivity():
    a = harness.ExperimentConfig.default()
    b = harness.ExperimentConfig.default(**{"mc.seed": 999})
    assert a.hash != b.hash
    assert a.hash == harness.ExperimentConfig.default().hash
    assert a.override(**{"mc.seed": None}).hash == a.hash


def test_run_sharpness_report(tmp_path):
    cfg = harness.ExperimentConfig.default(**LIGHT)
    status, paths = harness.run("sharpness", cfg, tmp_path)
    assert status == 0
    assert len(paths) == 1
    text = paths[0].read_text()
    assert f"# config_hash = {cfg.hash}" in text
    assert "# version = heatlab-" in text
    assert "# status = ok" in text
    assert text.splitlines()[4].startswith("side,lambda,dilation")
    # measured within 2% of the closed forms
    rows = [ln.split(",") for ln in text.splitlines()[5:]]
    for row in rows:
        assert float(row[6]) < 0.02


def test_run_is_deterministic(tmp_path):
    cfg = harness.ExperimentConfig.default(**LIGHT)
    harness.run("besov-check", cfg, tmp_path / "a")
    harness.run("besov-check", cfg, tmp_path / "b")
    fa = (tmp_path / "a" / f"besov-check_{cfg.hash}.csv").read_bytes()
    fb = (tmp_path / "b" / f"besov-check_{cfg.hash}.csv").read_bytes()
    assert fa == fb


def test_run_escape_subcommand(tmp_path):
    cfg = harness.ExperimentConfig.default(**LIGHT)
    status, paths = harness.run("escape", cfg, tmp_path)
    assert status == 0
    lines = paths[0].read_text().splitlines()
    assert lines[4] == "K,p_hat,ci_lo,ci_hi,oracle,oracle_shifted,ok"
    for ln in lines[5:]:
        K, p_hat, lo, hi = (float(v) for v in ln.split(",")[:4])
        assert 0 <= lo <= p_hat <= hi <= 1


def test_run_unknown_subcommand(tmp_path):
    with pytest.raises(KeyError):
        harness.run("frobnicate", harness.ExperimentConfig.default(), tmp_path)


def test_run_failure_names_violation(tmp_path):
    # a drift far too strong for the truncation: NoDecay, nonzero exit,
    # violation named in the report
    cfg = harness.ExperimentConfig.default(**{
        **LIGHT, "drift.preset": "constant", "drift.amplitude": 40.0,
        "times": [1.0], "truncation.K_max": 4,
    })
    status, paths = harness.run("parametrix", cfg, tmp_path)
    assert status == 1
    text = paths[0].read_text()
    assert "# status = failed: NoDecay" in text
    assert "NoDecay" in text


def test_cli_main(tmp_path, capsys):
    rc = cli.main(["sharpness", "--out", str(tmp_path / "r"),
                   "--config", _write_light_cfg(tmp_path)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "sharpness_" in out


def _write_light_cfg(tmp_path):
    f = tmp_path / "light.cfg"
    f.write_text("\n".join(f"{k} = {_fmt(v)}" for k, v in LIGHT.items()) + "\n")
    return str(f)


def _fmt(v):
    if isinstance(v, list):
        return ", ".join(str(x) for x in v)
    return str(v)


def test_cli_seed_override(tmp_path):
    cfgf = _write_light_cfg(tmp_path)
    rc1 = cli.main(["escape", "--out", str(tmp_path / "s1"), "--config", cfgf,
                    "--seed", "77"])
    rc2 = cli.main(["escape", "--out", str(tmp_path / "s2"), "--config", cfgf,
                    "--seed", "78"])
    assert rc1 == rc2 == 0
    f1 = sorted((tmp_path / "s1").glob("escape_*.csv"))[0]
    f2 = sorted((tmp_path / "s2").glob("escape_*.csv"))[0]
    assert f1.name != f2.name  # seed participates in the config hash
    assert f1.read_bytes() != f2.read_bytes()
