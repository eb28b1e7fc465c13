import json

import numpy as np
import pytest

from skewexact.cli import main
from skewexact.sim import read_skeletons_csv


def test_density_grid(tmp_path):
    out = tmp_path / "d.csv"
    assert main(["density", "--theta", "0.5,-0.5", "--z", "1", "--t", "0.55", "--x", "0.5",
                 "--y-grid", "-2:3:0.05", "-o", str(out)]) == 0
    data = np.genfromtxt(out, delimiter=",", names=True)
    assert data.size == 101 and np.all(data["p"] > 0)


def test_bridge_density(tmp_path):
    out = tmp_path / "q.csv"
    assert main(["density", "--theta", "0.5,-0.5", "--t", "0.2", "--x", "0.5", "--bridge-T", "0.55",
                 "--x2", "0.5", "--y-grid", "-1:2:0.5", "-o", str(out)]) == 0
    assert np.genfromtxt(out, delimiter=",", names=True)["q"].size == 7


def test_sample_writes_csv_and_metadata(tmp_path, monkeypatch):
    monkeypatch.setenv("SKEWEXACT_OUTPUT_DIR", str(tmp_path))
    assert main(["sample", "--drift", "b1", "--T", "1", "--n", "50", "--method", "srrs", "--T-el", "0.55",
                 "--delta", "0.75", "--seed", "7", "--kde", str(tmp_path / "k.csv")]) == 0
    sk = read_skeletons_csv(tmp_path / "samples.csv")
    assert len(sk) == 50 and all(s.times[0] == 1.0 for s in sk)
    meta = json.loads((tmp_path / "samples.json").read_text())
    assert meta["config"]["seed"] == 7 and meta["samples"] == 50
    assert (tmp_path / "k.csv").exists()


def test_sample_euler_and_config_file(tmp_path):
    cfg = tmp_path / "drift.ini"
    cfg.write_text("[drift]\nkind = constant\nmu = 0.7\n")
    out = tmp_path / "e.csv"
    assert main(["sample", "--drift-config", str(cfg), "--method", "euler", "--step", "0.1", "--n", "20",
                 "-o", str(out)]) == 0
    assert len(read_skeletons_csv(out)) == 20


def test_path_command(tmp_path):
    out = tmp_path / "p.csv"
    assert main(["path", "--T", "1", "--fill-step", "0.01", "-o", str(out)]) == 0
    sk = read_skeletons_csv(out)[0]
    assert len(sk.times) >= 100


def test_benchmark_and_verify(tmp_path, capsys):
    assert main(["benchmark", "--drift", "constant", "--mu", "0.2", "--methods", "srrs", "--horizons", "0.5",
                 "--n", "5", "-o", str(tmp_path / "b.csv")]) == 0
    assert main(["verify", "--suite", "l1", "--suite", "a-invariance"]) == 0
    assert "checks passed" in capsys.readouterr().out


def test_errors(capsys):
    with pytest.raises(SystemExit) as e:
        main(["bogus"])
    assert e.value.code != 0
    with pytest.raises(SystemExit):
        main(["sample", "--no-such-flag"])
    assert main(["sample", "--delta", "1.5", "--n", "1"]) == 2
    assert "delta" in capsys.readouterr().err
    assert main(["verify", "--suite", "nope"]) == 2
