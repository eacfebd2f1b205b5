import json

import pytest
from click.testing import CliRunner

from isoshell.cli import ConfigError, RegimeMismatch, RunConfig, execute, main


@pytest.fixture
def runner():
    return CliRunner()


def _run(runner, tmp_path, *args, env=None):
    return runner.invoke(main, ["--out", str(tmp_path), *args], env=env)


def test_cylinder_energy_prints_two_pi(runner, tmp_path):
    r = _run(runner, tmp_path, "energy", "cylinder", "--w0", "cos(2*theta)")
    assert r.exit_code == 0
    assert r.output.splitlines()[0] == "6.2831853071795463"


def test_shorthand_expressions(runner, tmp_path):
    r = _run(runner, tmp_path, "run", "cylinder-energy", "w0=cos2θ")
    assert r.exit_code == 0 and "6.2831853071795463" in r.output


@pytest.mark.parametrize("args, code", [
    (("isometry", "check", "--surface", "sphere", "--set", "w=z"), 0),
    (("isometry", "check", "--surface", "sphere", "--set", "w=x*y"), 1),
    (("isometry", "check", "--surface", "sphere", "--set", "w=X1"), 2),
    (("hyperbolic", "evolve", "--surface", "sphere"), 2),
    (("parabolic", "isometry", "--surface", "sphere"), 2),
    (("run", "no-such-task"), 2),
    (("run", "surface-info", "n_theta=7"), 2),
])
def test_exit_codes(runner, tmp_path, args, code):
    r = _run(runner, tmp_path, *args)
    assert r.exit_code == code, r.output
    if code == 2:
        assert list(tmp_path.glob("*-error.json"))


def test_outputs_are_deterministic(runner, tmp_path):
    args = ("run", "elliptic-cap", "kappa=1", "a=0.5", "psi=cos(2θ)")
    a, b = tmp_path / "a", tmp_path / "b"
    assert _run(runner, a, *args).exit_code == 0
    assert _run(runner, b, *args).exit_code == 0
    files = sorted(p.name for p in a.iterdir())
    assert files == sorted(p.name for p in b.iterdir())
    for f in files:
        assert (a / f).read_bytes() == (b / f).read_bytes()


def test_csv_and_manifest_format(runner, tmp_path):
    assert _run(runner, tmp_path, "energy", "cylinder", "--w0", "cos(3*theta)").exit_code == 0
    lines = (tmp_path / "cylinder-energy-profiles.csv").read_text().splitlines()
    meta = [ln for ln in lines if ln.startswith("#")]
    body = [ln for ln in lines if not ln.startswith("#")]
    assert lines[:len(meta)] == meta and body[0] == "theta,w0,w1"
    assert any(len(x.split(".")[-1]) >= 15 for x in body[2].split(","))
    man = json.loads((tmp_path / "cylinder-energy-manifest.json").read_text())
    assert man["passed"] and man["inputs"]["params"]["w0"] == "cos(3*theta)"
    assert set(man["outputs"]) == {"cylinder-energy-profiles.csv"}
    assert {"inputs", "tolerances", "versions", "summary", "gates"} <= set(man)


def test_config_file_and_flag_override(runner, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# sphere cap\nsurface = sphere\nn_theta = 16\nt_max = 0.4\n")
    out = tmp_path / "out"
    r = _run(runner, out, "surface", "info", "--config", str(cfg), "--n-theta", "24")
    assert r.exit_code == 0 and "elliptic" in r.output
    man = json.loads((out / "surface-info-manifest.json").read_text())
    assert man["inputs"]["n_theta"] == 24 and man["inputs"]["t_max"] == 0.4


def test_output_dir_from_environment(runner, tmp_path):
    r = runner.invoke(main, ["surface", "info"], env={"ISOSHELL_OUTPUT_DIR": str(tmp_path)})
    assert r.exit_code == 0
    assert (tmp_path / "surface-info-manifest.json").exists()


def test_mixed_regime_is_reported(runner, tmp_path):
    r = _run(runner, tmp_path, "surface", "info", "--surface", "graph:h=x1**3+x2**2",
             "--t-max", "0.3")
    assert r.exit_code == 0 and "regime: mixed" in r.output


def test_run_config_validation():
    with pytest.raises(RegimeMismatch):
        RunConfig(task="surface-info", regime="bogus")
    with pytest.raises(ConfigError):
        RunConfig(task="surface-info", n_theta=7)
    cfg = RunConfig.from_pairs({"n_theta": "24", "kappa": "2"}, RunConfig(task="elliptic-eigen"))
    assert cfg.n_theta == 24 and cfg.params["kappa"] == "2"


def test_execute_direct(tmp_path):
    lines = []
    cfg = RunConfig(task="elliptic-eigen", output_dir=str(tmp_path), params={"kappa": "4", "a": "0.785398163397448"})
    assert execute(cfg, lines.append) == 0
    assert any(ln.startswith("lambda1") for ln in lines)
