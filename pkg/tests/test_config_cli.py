"""Configuration parsing, presets and command line behavior."""

import json
import math
import subprocess
import sys

import pytest

from docksim import (
    ConfigError,
    config_hash,
    dump_config,
    load_config,
    parse_angle,
    preset_names,
)

CASE1_K3 = 0.8168433610931571
CASE2_K3 = 1.7152867114612311


def run_cli(*args, env=None):
    return subprocess.run(
        [sys.executable, "-m", "docksim.cli", *args],
        capture_output=True,
        text=True,
        env=env,
    )


def test_parse_angle():
    assert parse_angle(0.7) == 0.7
    assert parse_angle(2) == 2.0
    assert parse_angle("40deg") == pytest.approx(math.radians(40))
    assert parse_angle("-20deg") == pytest.approx(math.radians(-20))
    assert parse_angle("0.7rad") == 0.7
    assert parse_angle(" 1.5 RAD ") == 1.5
    assert parse_angle("0.35") == 0.35
    for bad in ("fortydeg", "deg", "", True, None, math.inf):
        with pytest.raises(ValueError):
            parse_angle(bad)


def test_presets_exist_and_load():
    assert preset_names() == ("case1", "case2")
    c1 = load_config("case1")
    c2 = load_config("case2")
    assert c1.camera.alpha_bar == pytest.approx(math.radians(40))
    assert c1.landmark.beta == 0.0
    assert c1.gains.k3 == pytest.approx(CASE1_K3, abs=1e-12)
    assert c2.landmark.beta == pytest.approx(math.radians(-20))
    assert c2.gains.k3 == pytest.approx(CASE2_K3, abs=1e-12)
    assert c2.object.width == pytest.approx(0.35)


def test_load_config_defaults_and_overrides():
    cfg = load_config({})
    assert cfg.camera.l == 0.26
    assert cfg.gains.k1 == 0.15
    assert cfg.seed == 0
    # k3 defaults to the designed value for the geometry
    assert cfg.gains.k3 == pytest.approx(CASE1_K3, abs=1e-12)
    cfg = load_config({"gains": {"k3": 0.5}, "seed": 11})
    assert cfg.gains.k3 == 0.5
    assert cfg.seed == 11


def test_load_config_angle_suffixes_and_lambda_key():
    cfg = load_config(
        {"camera": {"alpha_bar": "45deg"}, "landmark": {"lambda": "340deg", "beta": "-20deg"}}
    )
    assert cfg.camera.alpha_bar == pytest.approx(math.radians(45))
    # lambda maps onto the lam attribute, normalized
    assert cfg.landmark.lam == pytest.approx(math.radians(-20))
    assert cfg.landmark.beta == pytest.approx(math.radians(-20))


def test_load_config_rejects_unknown_keys():
    with pytest.raises(ConfigError, match="camera.focal"):
        load_config({"camera": {"focal": 500}})
    with pytest.raises(ConfigError, match="turbo"):
        load_config({"turbo": True})
    with pytest.raises(ConfigError):
        load_config({"camera": ["not", "a", "map"]})
    with pytest.raises(ConfigError, match="seed"):
        load_config({"seed": -3})
    with pytest.raises(ConfigError, match="seed"):
        load_config({"seed": 1.5})


def test_load_config_wraps_component_errors():
    with pytest.raises(ConfigError, match="camera"):
        load_config({"camera": {"alpha_bar": "100deg"}})
    with pytest.raises(ConfigError, match="gains"):
        load_config({"gains": {"k1": 0.6, "k2": 0.15}})
    with pytest.raises(ConfigError, match="k3"):
        # infeasible geometry with k3 left to the designer
        load_config({"camera": {"alpha_bar": "20deg"}, "landmark": {"beta": "80deg"}})


def test_load_config_sources(tmp_path):
    with pytest.raises(ConfigError, match="preset"):
        load_config("nosuchpreset")
    with pytest.raises(ConfigError, match="not found"):
        load_config(str(tmp_path / "missing" / "conf.yaml"))
    with pytest.raises(TypeError):
        load_config(42)
    bad = tmp_path / "bad.yaml"
    bad.write_text("foo: [unclosed\n")
    with pytest.raises(ConfigError, match="YAML"):
        load_config(bad)


def test_dump_round_trip_and_hash(tmp_path):
    cfg = load_config("case2")
    text = dump_config(cfg)
    path = tmp_path / "case2_dump.yaml"
    path.write_text(text)
    back = load_config(path)
    assert back == cfg
    assert config_hash(back) == config_hash(cfg)
    other = load_config({"seed": 1})
    assert config_hash(other) != config_hash(cfg)


def test_cli_version_and_config():
    out = run_cli("--version")
    assert out.returncode == 0
    out = run_cli("config", "--list")
    assert out.returncode == 0
    assert out.stdout.split() == ["case1", "case2"]
    out = run_cli("config", "--config", "case1")
    assert out.returncode == 0
    assert "k3:" in out.stdout
    assert "# sha256:" in out.stdout


def test_cli_usage_and_config_errors(tmp_path):
    out = run_cli("frobnicate")
    assert out.returncode == 2
    out = run_cli("run", "--config", "nosuchpreset", "--out", str(tmp_path / "x"))
    assert out.returncode == 2
    assert "preset" in out.stderr
    out = run_cli("run", "--config", "case1", "--alpha", "badangle",
                  "--out", str(tmp_path / "y"))
    assert out.returncode == 2


def test_cli_run_and_outcome_codes(tmp_path):
    out_dir = tmp_path / "run"
    out = run_cli(
        "run", "--config", "case1", "--rho", "1.2", "--alpha", "10deg",
        "--ideal", "--out", str(out_dir),
    )
    assert out.returncode == 0, out.stderr
    assert (out_dir / "trajectory.csv").is_file()
    assert (out_dir / "config.yaml").is_file()
    assert (out_dir / "manifest.json").is_file()
    pngs = sorted(p.name for p in out_dir.glob("*.png"))
    assert pngs == [
        "trajectory_plan.png",
        "trajectory_states.png",
        "trajectory_velocities.png",
    ]
    manifest = json.loads((out_dir / "manifest.json").read_text())
    assert manifest["command"] == "run"
    assert "config_hash" in manifest and "parameters" in manifest
    assert "trajectory.csv" in manifest["artifacts"]
    header = (out_dir / "trajectory.csv").read_text().splitlines()[0]
    assert header == "t,x,y,theta,rho,alpha,phi,alpha_star,v_cmd,w_cmd,v_act,w_act"
    # a start with the object out of view exits with the outcome code
    out = run_cli(
        "run", "--config", "case1", "--rho", "1.5", "--alpha", "60deg",
        "--ideal", "--out", str(tmp_path / "fov"),
    )
    assert out.returncode == 10
    out = run_cli(
        "run", "--config", "case1", "--rho", "1.5", "--t-max", "0.5",
        "--ideal", "--out", str(tmp_path / "to"),
    )
    assert out.returncode == 11


def test_cli_no_plots(tmp_path):
    out_dir = tmp_path / "quiet"
    out = run_cli(
        "run", "--config", "case1", "--rho", "1.0", "--no-plots",
        "--out", str(out_dir),
    )
    assert out.returncode == 0
    assert not list(out_dir.glob("*.png"))
    assert (out_dir / "trajectory.csv").is_file()


def test_cli_sweep_fit_verify_chain(tmp_path):
    sw = tmp_path / "sw"
    out = run_cli("sweep", "--config", "case1", "--n", "7", "--quiet",
                  "--out", str(sw))
    assert out.returncode == 0, out.stderr
    assert (sw / "feasible.csv").is_file()
    header = (sw / "feasible.csv").read_text().splitlines()[0]
    assert header == "rho,alpha,phi,feasible,outcome"
    ft = tmp_path / "ft"
    out = run_cli("fit", "--config", "case1", "--labels", str(sw / "feasible.csv"),
                  "--out", str(ft))
    assert out.returncode == 0, out.stderr
    fit = json.loads((ft / "fit.json").read_text())
    assert set(fit) == {"k4", "k5", "k6", "k7", "rho_min", "rho_max"}
    vr = tmp_path / "vr"
    out = run_cli("verify", "--config", "case1", "--fit", str(ft / "fit.json"),
                  "--n-samples", "2000", "--out", str(vr))
    assert out.returncode == 0, out.stderr
    report = json.loads((vr / "verify.json").read_text())
    assert report["passed"] is True
    assert report["n_positive"] == 0


def test_cli_perceive(tmp_path):
    out_dir = tmp_path / "per"
    out = run_cli(
        "perceive", "--config", "case1", "--rho", "2.0", "--alpha", "3deg",
        "--noise", "0.005", "--seed", "4", "--out", str(out_dir),
    )
    assert out.returncode == 0, out.stderr
    est = json.loads((out_dir / "estimate.json").read_text())
    assert est["polar"]["rho"] == pytest.approx(2.0, abs=0.05)
    assert (out_dir / "cloud.xyz").is_file()
    assert (out_dir / "perception.png").is_file()
    # reading back the written cloud gives the same estimate
    out2 = run_cli(
        "perceive", "--config", "case1", "--cloud", str(out_dir / "cloud.xyz"),
        "--out", str(tmp_path / "per2"),
    )
    assert out2.returncode == 0, out2.stderr
    est2 = json.loads((tmp_path / "per2" / "estimate.json").read_text())
    assert est2["polar"]["rho"] == pytest.approx(est["polar"]["rho"], abs=1e-6)
