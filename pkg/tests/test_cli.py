import json

import pytest

from soba.cli import main, parse_seeds
from soba.datasets import load_snapshot
from soba.harness import read_series_csv

DATA = ["--dataset", "synnonsep", "--samples", "400", "--k", "3", "--d", "4", "--margin", "0.2"]


def test_parse_seeds():
    assert parse_seeds("0:4") == [0, 1, 2, 3]
    assert parse_seeds("3, 5,9") == [3, 5, 9]


def test_datagen_then_sweep(tmp_path, capsys):
    snap = tmp_path / "d.snap"
    assert main(["datagen", *DATA, "--out", str(snap)]) == 0
    assert load_snapshot(snap).n == 400
    out = tmp_path / "r.csv"
    rc = main(["sweep", "--dataset", str(snap), "--algo", "soba,banditron", "--gammas", "0.05,0.2",
               "--seeds", "0:2", "--checkpoints", "linear:100", "--out", str(out)])
    assert rc == 0
    rows = read_series_csv(out)
    assert len(rows) == 2 * 2 * 2 and all(len(v) == 4 for v in rows.values())
    assert "banditron" in capsys.readouterr().out


def test_run_single_cell(tmp_path):
    out = tmp_path / "one.json"
    assert main(["run", *DATA, "--algo", "sobadiag", "--gamma", "0.1", "--seeds", "7",
                 "--out", str(out), "--format", "json"]) == 0
    payload = json.loads(out.read_text())
    assert [(r["algorithm"], r["gamma"], r["seed"]) for r in payload["runs"]] == [("sobadiag", 0.1, 7)]


def test_run_rejects_grids(capsys):
    assert main(["run", *DATA, "--algo", "soba", "--gamma", "0.1,0.2"]) == 2
    assert main(["run", *DATA, "--algo", "soba", "--seeds", "0:3"]) == 2
    assert "error:" in capsys.readouterr().err


def test_config_file_with_overrides(tmp_path):
    cfg = tmp_path / "exp.toml"
    out = tmp_path / "from_file.csv"
    cfg.write_text(f"""
[dataset]
kind = "synsep"
n = 300
k = 3
d = 4
margin = 0.2

[[algorithm]]
name = "sobadiag"
gammas = [0.05, 0.1]

[[algorithm]]
name = "perceptron"

[run]
seeds = [0, 1]
checkpoints = "log:10"
out = "{out}"
""")
    assert main(["sweep", "--config", str(cfg), "--gammas", "0.2", "--parallel"]) == 0
    keys = sorted(read_series_csv(out), key=str)
    assert keys == sorted([("sobadiag", 0.2, 0), ("sobadiag", 0.2, 1),
                           ("perceptron", 0.0, 0), ("perceptron", 0.0, 1)], key=str)


def test_config_errors(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text("[dataset\n")
    assert main(["sweep", "--config", str(bad)]) == 2
    bad.write_text('[dataset]\nkind = "synsep"\ncolour = 3\n[[algorithm]]\nname = "soba"\n')
    assert main(["sweep", "--config", str(bad)]) == 2
    assert main(["sweep", "--algo", "soba"]) == 2
    assert main(["sweep", *DATA, "--algo", "exp4"]) == 2
    assert main(["sweep", "--dataset", str(tmp_path / "missing.svm"), "--algo", "soba"]) == 2


def test_workers_env(monkeypatch):
    from soba.harness import default_workers
    monkeypatch.setenv("SOBA_WORKERS", "3")
    assert default_workers() == 3


def test_check_command(capsys):
    assert main(["check"]) == 0
    out = capsys.readouterr().out
    assert out.count("[PASS]") == 9 and "all 9 checks passed" in out


def test_check_reports_failures(monkeypatch, capsys):
    from soba import checks
    monkeypatch.setattr(checks, "quick_suite",
                        lambda: [checks.CheckResult("broken", False, "forced")])
    assert main(["check"]) == 1
    assert "[FAIL] broken" in capsys.readouterr().out


def test_missing_subcommand():
    with pytest.raises(SystemExit):
        main([])
