import json
import os

import pytest

from esterr import cli, persist

CONFIG = """\
[experiment]
mode = "min_variance"
n_samples = 40
master_seed = 3
grid = [[10, 20], [10, 40]]

[process]
family = "iid_gaussian"
"""


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text(CONFIG)
    return path


def test_sweep_writes_outputs(config, tmp_path, capsys):
    out = tmp_path / "out"
    assert cli.main(["sweep", "--config", str(config), "--out", str(out)]) == 0
    lines = (out / "sweep.csv").read_text().splitlines()
    assert lines[0].split(",") == list(persist.SWEEP_COLUMNS)
    row = dict(zip(lines[0].split(","), lines[1].split(",")))
    assert float(row["analytic_q0"]) == pytest.approx(2**0.5, rel=1e-15)
    assert (out / "hist_N10_T20.csv").exists() and (out / "hist_N10_T40.csv").exists()
    summary = json.loads((out / "summary.json").read_text())
    assert summary["points"][0]["n_samples"] == 40
    assert "N=10 T=20" in capsys.readouterr().out
    assert not [p for p in os.listdir(out) if p.endswith(".tmp")]


def test_rerun_is_byte_identical_across_worker_counts(config, tmp_path):
    outs = []
    for i, workers in enumerate(["1", "3"]):
        out = tmp_path / f"o{i}"
        assert cli.main(["sweep", "--config", str(config), "--out", str(out), "--workers", workers]) == 0
        outs.append(out)
    names = sorted(p for p in os.listdir(outs[0]) if p.endswith(".csv"))
    assert names == sorted(p for p in os.listdir(outs[1]) if p.endswith(".csv"))
    for name in names:
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


def test_seed_override_changes_output(config, tmp_path):
    cli.main(["sweep", "--config", str(config), "--out", str(tmp_path / "a")])
    cli.main(["sweep", "--config", str(config), "--out", str(tmp_path / "b"), "--seed", "4"])
    assert (tmp_path / "a" / "sweep.csv").read_bytes() != (tmp_path / "b" / "sweep.csv").read_bytes()


def test_unknown_key_exits_2(tmp_path, capsys):
    path = tmp_path / "bad.toml"
    path.write_text(CONFIG.replace("n_samples", "samles"))
    assert cli.main(["sweep", "--config", str(path)]) == 2
    assert "samles" in capsys.readouterr().err


def test_synthetic_exponent(tmp_path):
    path = tmp_path / "exp.toml"
    path.write_text("""\
[experiment]
mode = "min_variance"
n = 100
ratios = [0.5, 0.6, 0.7, 0.8, 0.9]

[process]
family = "iid_gaussian"

[exponent]
synthetic = true
""")
    out = tmp_path / "e"
    assert cli.main(["exponent", "--config", str(path), "--out", str(out)]) == 0
    data = json.loads((out / "exponent.json").read_text())
    # T = round(N / r) exactly reproduces r at every grid point here
    assert abs(data["exponent"] + 0.5) <= 1e-12
    assert data["expected_exponent"] == -0.5 and len(data["points"]) == 5


def test_monte_carlo_exponent_writes_sweep(tmp_path):
    path = tmp_path / "exp.toml"
    path.write_text(CONFIG.replace("grid = [[10, 20], [10, 40]]", "n = 10\nratios = [0.3, 0.5, 0.7]"))
    out = tmp_path / "e"
    assert cli.main(["exponent", "--config", str(path), "--out", str(out)]) == 0
    assert (out / "sweep.csv").exists()
    assert json.loads((out / "exponent.json").read_text())["exponent"] < 0


def test_exponent_rejects_supercritical_grid(tmp_path, capsys):
    path = tmp_path / "exp.toml"
    path.write_text(CONFIG.replace("min_variance", "min_variance_noshort").replace("[10, 20]", "[10, 5]"))
    assert cli.main(["exponent", "--config", str(path), "--out", str(tmp_path)]) == 2


def test_verify_passes(capsys):
    assert cli.main(["verify"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and out.count("PASS") == 7


def test_atomic_write_leaves_old_file_on_error(tmp_path, monkeypatch):
    target = tmp_path / "x.csv"
    target.write_text("old\n")

    def boom(*args):
        raise OSError("disk full")

    monkeypatch.setattr(persist.os, "replace", boom)
    with pytest.raises(OSError):
        persist.atomic_write_text(target, "new\n")
    assert target.read_text() == "old\n"
    assert os.listdir(tmp_path) == ["x.csv"]


def test_fmt_round_trips():
    for x in (0.1, 1 / 3, 2**0.5, 1e-300, 123456789.123456789):
        assert float(persist.fmt(x)) == x
    assert persist.fmt(None) == "" and persist.fmt(7) == "7"
    assert persist.fmt(float("inf")) == "inf"
