import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from asyncons import cli
from helpers import EXAMPLE1, EXAMPLE2


@pytest.fixture
def topo1(tmp_path):
    p = tmp_path / "ex1.csv"
    p.write_text("\n".join(",".join(str(v) for v in row) for row in EXAMPLE1) + "\n")
    return p


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_bundled_examples_match():
    from asyncons.topology import load_topology
    np.testing.assert_array_equal(load_topology(cli.example_topology_text("example1")).weights,
                                  EXAMPLE1)
    np.testing.assert_array_equal(load_topology(cli.example_topology_text("example2")).weights,
                                  EXAMPLE2)


def test_analyze(topo1, tmp_path, capsys):
    out = tmp_path / "out"
    assert cli.main(["analyze", "--topology", str(topo1), "--out", str(out),
                     "--x0", "3,2,1,3,5"]) == 0
    d = json.loads((out / "analysis.json").read_text())
    assert {"leaders", "rho_margin", "mu", "theorem1_applies", "notes", "topology"} <= set(d)
    assert d["leaders"] == [] and d["rho_margin"] == pytest.approx(0.83, abs=0.01)
    assert "predicted consensus value" in capsys.readouterr().out


def test_analyze_example2_leaders_one_based(tmp_path):
    p = tmp_path / "ex2.txt"
    p.write_text(cli.example_topology_text("example2"))
    assert cli.main(["analyze", "--topology", str(p), "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "analysis.json").read_text())["leaders"] == [1, 4]


def test_missing_topology(tmp_path, capsys):
    missing = tmp_path / "nope.csv"
    assert cli.main(["analyze", "--topology", str(missing), "--out", str(tmp_path)]) == 2
    assert str(missing) in capsys.readouterr().err


def test_malformed_topology(tmp_path, capsys):
    p = tmp_path / "bad.csv"
    p.write_text("1,0\n0,0\n")
    assert cli.main(["analyze", "--topology", str(p), "--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert str(p) in err and "row 2" in err


def test_x0_length_mismatch(topo1, tmp_path):
    assert cli.main(["simulate", "--topology", str(topo1), "--out", str(tmp_path),
                     "--x0", "1,2"]) == 2


def test_simulate_headers(topo1, tmp_path):
    assert cli.main(["simulate", "--topology", str(topo1), "--out", str(tmp_path),
                     "--x0", "3,2,1,3,5", "--tau-d", "2", "--steps", "50"]) == 0
    rows = read_csv(tmp_path / "trajectory.csv")
    assert rows[0] == ["step", "norm", "x1", "x2", "x3", "x4", "x5"]
    assert len(rows) == 52
    assert rows[1][2:] == ["3", "2", "1", "3", "5"]


def test_tau_zero_matches_none(topo1, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    base = ["simulate", "--topology", str(topo1), "--x0", "3,2,1,3,5", "--steps", "80"]
    assert cli.main(base + ["--out", str(a), "--tau-d", "0"]) == 0
    assert cli.main(base + ["--out", str(b), "--delay-kind", "none", "--tau-d", "4"]) == 0
    assert (a / "trajectory.csv").read_bytes() == (b / "trajectory.csv").read_bytes()


def test_montecarlo_outputs(topo1, tmp_path):
    assert cli.main(["montecarlo", "--topology", str(topo1), "--out", str(tmp_path),
                     "--x0", "3,2,1,3,5", "--tau-d", "3", "--samples", "4",
                     "--steps", "400", "--seed", "9"]) == 0
    assert read_csv(tmp_path / "norms.csv")[0] == ["step", "norm", "sample_id"]
    cons = read_csv(tmp_path / "consensus.csv")
    assert cons[0] == ["sample_id", "seed", "consensus_step", "consensus_value"]
    assert [r[0] for r in cons[1:]] == ["0", "1", "2", "3"]
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert set(summary) == {"config", "ensemble", "sync", "discrepancy"}
    assert summary["config"]["seed"] == 9
    assert summary["ensemble"]["non_converged"] == 0


def test_json_format(topo1, tmp_path):
    assert cli.main(["simulate", "--topology", str(topo1), "--out", str(tmp_path),
                     "--x0", "3,2,1,3,5", "--steps", "5", "--format", "json"]) == 0
    recs = json.loads((tmp_path / "trajectory.json").read_text())
    assert len(recs) == 6 and recs[0]["x5"] == 5.0


def test_config_file_and_override(topo1, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"topology": str(topo1), "x0": [3, 2, 1, 3, 5],
                               "steps": 7, "tau-d": 1}))
    out = tmp_path / "o"
    assert cli.main(["simulate", "--config", str(cfg), "--out", str(out), "--steps", "3"]) == 0
    assert len(read_csv(out / "trajectory.csv")) == 5


def test_out_env(topo1, tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "env"))
    assert cli.main(["analyze", "--topology", str(topo1)]) == 0
    assert (tmp_path / "env" / "analysis.json").is_file()


def test_reproduce_example2_small(tmp_path):
    assert cli.main(["reproduce", "example2", "--out", str(tmp_path), "--samples", "5",
                     "--steps", "600"]) == 0
    d = json.loads((tmp_path / "example2" / "summary.json").read_text())["discrepancy"]
    assert d["max_abs_deviation"] < 1e-6 and d["fraction_within"] == 1.0


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "asyncons.cli", "--help"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "reproduce" in r.stdout
