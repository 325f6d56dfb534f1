import json
from pathlib import Path

import pytest

from zonocalc.cli import main
from zonocalc.multivector import MultiVector
from zonocalc.zonotope import Zonotope


def write(path: Path, text: str) -> str:
    path.write_text(text)
    return str(path)


EXPECT_CFG = """
experiment = "expect"
seed = 11

[manifold]
name = "circle"
n = 64

[model]
basis = "fourier"
order = 1
law = "gaussian"

[estimate]
n_samples = 1024

[simulate]
trials = 500
grid_n = 64
"""


def test_expect_linear_circle_passes(tmp_path, capsys):
    cfg = write(tmp_path / "cfg.toml", EXPECT_CFG)
    code = main(["expect", "--config", cfg, "--out", str(tmp_path / "run")])
    assert code == 0
    report = json.loads((tmp_path / "run" / "report.json").read_text())
    assert report["result"]["verdict"] == "PASS"
    assert report["result"]["predicted"] == pytest.approx(2.0, abs=0.05)
    assert "config_hash" in report and report["seed"] == 11


def test_malformed_config_names_key(tmp_path, capsys):
    cfg = write(tmp_path / "bad.toml", EXPECT_CFG + "\n[model2]\nwhatever = 3\n")
    code = main(["expect", "--config", cfg, "--out", str(tmp_path / "run")])
    assert code == 2
    err = capsys.readouterr().err
    doc = json.loads(err.strip().splitlines()[-1])
    assert doc["error"] == "config"
    assert "model2.whatever" in doc["key"]


def test_missing_seed_rejected(tmp_path, capsys):
    cfg = write(tmp_path / "noseed.toml", 'experiment = "expect"\n[manifold]\nname = "circle"\n')
    code = main(["expect", "--config", cfg, "--out", str(tmp_path / "run")])
    assert code == 2
    doc = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert doc["key"] == "seed"


def test_experiment_mismatch_rejected(tmp_path, capsys):
    cfg = write(tmp_path / "cfg.toml", EXPECT_CFG)
    code = main(["simulate", "--config", cfg, "--out", str(tmp_path / "run")])
    assert code == 2


def test_algebra_mixed_volume(tmp_path, capsys):
    segx = Zonotope.segment(MultiVector.from_vector([1.0, 0.0]))
    segy = Zonotope.segment(MultiVector.from_vector([0.0, 1.0]))
    (tmp_path / "segx.json").write_text(segx.dumps())
    (tmp_path / "segy.json").write_text(segy.dumps())
    cfg = write(
        tmp_path / "alg.toml",
        f"""
experiment = "algebra"
seed = 1
[algebra]
op = "mixed_volume"
inputs = ["{tmp_path}/segx.json", "{tmp_path}/segy.json"]
""",
    )
    code = main(["algebra", "--config", cfg, "--out", str(tmp_path / "run")])
    assert code == 0
    out = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert out["result"]["value"] == pytest.approx(0.5)


def test_seed_override_changes_report(tmp_path, capsys):
    cfg = write(tmp_path / "cfg.toml", EXPECT_CFG)
    main(["expect", "--config", cfg, "--out", str(tmp_path / "a"), "--seed", "99"])
    report = json.loads((tmp_path / "a" / "report.json").read_text())
    assert report["seed"] == 99


def _csv_body(path: Path) -> str:
    lines = path.read_text().splitlines()
    return "\n".join(line for line in lines if not line.startswith("#"))


def test_csv_bodies_deterministic(tmp_path, capsys):
    cfg = write(tmp_path / "cfg.toml", EXPECT_CFG)
    main(["expect", "--config", cfg, "--out", str(tmp_path / "a"), "--dump-trials"])
    main(["expect", "--config", cfg, "--out", str(tmp_path / "b"), "--dump-trials"])
    for name in ("density.csv", "section.csv", "trials.csv"):
        assert _csv_body(tmp_path / "a" / name) == _csv_body(tmp_path / "b" / name)


def test_simulate_subcommand(tmp_path, capsys):
    cfg = write(
        tmp_path / "sim.toml",
        """
experiment = "simulate"
seed = 5
[manifold]
name = "circle"
n = 64
[model]
basis = "kostlan"
degree = 2
[simulate]
trials = 300
grid_n = 128
""",
    )
    code = main(["simulate", "--config", cfg, "--out", str(tmp_path / "run")])
    assert code == 0
    report = json.loads((tmp_path / "run" / "report.json").read_text())
    mean = report["result"]["report"]["mean"]
    se = report["result"]["report"]["standard_error"]
    assert abs(mean - 2.0 * 2.0**0.5) <= 4 * se


def test_inequality_af_sweep(tmp_path, capsys):
    cfg = write(
        tmp_path / "af.toml",
        """
experiment = "inequality"
seed = 7
[inequality]
kind = "af"
seeds = 25
""",
    )
    code = main(["inequality", "--config", cfg, "--out", str(tmp_path / "run")])
    assert code == 0
    report = json.loads((tmp_path / "run" / "report.json").read_text())
    assert report["result"]["fraction_holds"] == 1.0


def test_crofton_subcommand(tmp_path, capsys):
    cfg = write(
        tmp_path / "cro.toml",
        """
experiment = "crofton"
seed = 9
[manifold]
name = "sphere2"
n_theta = 8
n_phi = 16
[model]
basis = "linear"
[estimate]
n_samples = 768
[simulate]
trials = 600
grid_n = 96
[crofton]
curve = "equator"
length = 3.141592653589793
n_t = 32
""",
    )
    code = main(["crofton", "--config", cfg, "--out", str(tmp_path / "run")])
    report = json.loads((tmp_path / "run" / "report.json").read_text())
    assert report["result"]["verdict"] == "PASS"
    assert report["result"]["predicted_crossings"] == pytest.approx(1.0, abs=0.1)
    assert code == 0
    assert (tmp_path / "run" / "curve_length.csv").exists()


def test_numerical_failure_exit_code(tmp_path, capsys):
    cfg = write(
        tmp_path / "degen.toml",
        """
experiment = "expect"
seed = 3
[manifold]
name = "circle"
n = 16
[model]
basis = "fourier"
order = 1
cov = [[0.0, 0.0], [0.0, 0.0]]
""",
    )
    code = main(["expect", "--config", cfg, "--out", str(tmp_path / "run")])
    assert code == 3
    doc = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert doc["error"] == "numerical"


def test_section_subcommand_exports(tmp_path, capsys):
    cfg = write(
        tmp_path / "sec.toml",
        """
experiment = "section"
seed = 4
[manifold]
name = "circle"
n = 32
[model]
basis = "fourier"
order = 1
[estimate]
n_samples = 256
""",
    )
    code = main(["section", "--config", cfg, "--out", str(tmp_path / "run")])
    assert code == 0
    doc = json.loads((tmp_path / "run" / "section.json").read_text())
    assert doc["manifold"] == "circle" and len(doc["nodes"]) == 32
    assert (tmp_path / "run" / "section.csv").exists()


def test_expect_torus_length_branch(tmp_path, capsys):
    cfg = write(
        tmp_path / "len.toml",
        """
experiment = "expect"
seed = 6
[manifold]
name = "torus2"
nx = 6
[model]
basis = "trig2d"
order = 1
[estimate]
n_samples = 512
[simulate]
trials = 120
grid_n = 96
""",
    )
    code = main(["expect", "--config", cfg, "--out", str(tmp_path / "run")])
    report = json.loads((tmp_path / "run" / "report.json").read_text())
    assert report["result"]["verdict"] == "PASS"
    assert code == 0


def test_expect_torus_count_branch(tmp_path, capsys):
    cfg = write(
        tmp_path / "cnt.toml",
        """
experiment = "expect"
seed = 8
[manifold]
name = "torus2"
nx = 6
[model]
basis = "trig2d"
order = 1
components = 2
[estimate]
n_samples = 512
[simulate]
trials = 250
grid_n = 32
""",
    )
    code = main(["expect", "--config", cfg, "--out", str(tmp_path / "run")])
    report = json.loads((tmp_path / "run" / "report.json").read_text())
    assert report["result"]["verdict"] == "PASS"
    assert code == 0
