import json

import numpy as np
import pytest

from l0ggm import io
from l0ggm.cli import main
from l0ggm.model import load_instance, objective_F0


@pytest.fixture
def dataset(tmp_path):
    d = tmp_path / "gen"
    code = main(["generate", "--model", "banded", "--p", "8", "--k", "2",
                 "--n", "60", "--cond", "5", "--seed", "3", "--n-val", "60",
                 "--out-dir", str(d)])
    assert code == 0
    return d


def test_csv_round_trip(tmp_path):
    A = np.random.default_rng(0).standard_normal((5, 3)) * 1e-7
    path = tmp_path / "a.csv"
    io.write_matrix_csv(path, A)
    np.testing.assert_array_equal(io.read_matrix_csv(path), A)


def test_csv_header_and_errors(tmp_path):
    good = tmp_path / "h.csv"
    good.write_text("a,b\n1,2\n3,4\n")
    np.testing.assert_array_equal(io.read_matrix_csv(good), [[1, 2], [3, 4]])
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2\n3,x\n")
    with pytest.raises(ValueError, match="malformed"):
        io.read_matrix_csv(bad)
    ragged = tmp_path / "r.csv"
    ragged.write_text("1,2\n3\n")
    with pytest.raises(ValueError):
        io.read_matrix_csv(ragged)
    empty = tmp_path / "e.csv"
    empty.write_text("")
    with pytest.raises(ValueError, match="empty"):
        io.read_matrix_csv(empty)


def test_json_writes_null_for_non_finite(tmp_path):
    path = tmp_path / "x.json"
    io.write_json(path, {"a": float("inf"), "b": np.float64(2.0),
                         "c": [np.int64(3)]})
    assert io.read_json(path) == {"a": None, "b": 2.0, "c": [3]}


def test_generate_outputs(dataset):
    meta = io.read_json(dataset / "meta.json")
    truth = io.read_matrix_csv(dataset / "truth.csv")
    assert meta["bigM"] == pytest.approx(2 * np.abs(truth).max())
    assert io.read_matrix_csv(dataset / "data.csv").shape == (60, 8)
    assert io.read_matrix_csv(dataset / "val.csv").shape == (60, 8)


def test_solve_exact(dataset, tmp_path):
    out = tmp_path / "exact"
    code = main(["solve", str(dataset / "data.csv"), "--lambda0", "0.05",
                 "--lambda2", "0.05", "--big-m", "2", "--out", str(out),
                 "--log-nodes", "--truth", str(dataset / "truth.csv")])
    assert code == 0
    report = io.read_json(out / "report.json")
    assert report["status"] == "optimal" and report["gap"] <= 0.05
    assert {"lower_bound", "nodes", "wall_time", "metrics"} <= set(report)
    theta = io.read_matrix_csv(out / "theta.csv")
    inst = load_instance(io.read_matrix_csv(dataset / "data.csv"), 0.05, 0.05,
                         2.0)
    assert abs(objective_F0(inst, theta) - report["objective"]) <= 1e-9
    lines = (out / "nodes.jsonl").read_text().splitlines()
    assert len(lines) >= 1 and json.loads(lines[0])["id"] == 0
    meta = io.read_json(out / "instance.json")
    assert meta["p"] == 8 and meta["bigM"] == 2.0


def test_solve_heuristic_has_no_gap(dataset, tmp_path, capsys):
    out = tmp_path / "heur"
    code = main(["solve", str(dataset / "data.csv"), "--lambda0", "0.05",
                 "--lambda2", "0.05", "--mode", "heuristic", "--out", str(out),
                 "-v"])
    assert code == 0
    report = io.read_json(out / "report.json")
    assert "gap" not in report and report["status"] == "converged"
    assert "sweep 1:" in capsys.readouterr().err


def test_time_limit_zero_exits_two(dataset, tmp_path):
    out = tmp_path / "t0"
    code = main(["solve", str(dataset / "data.csv"), "--lambda0", "0.01",
                 "--lambda2", "0.01", "--big-m", "2", "--out", str(out),
                 "--time-limit", "0"])
    assert code == 2
    report = io.read_json(out / "report.json")
    assert report["status"] == "time_limit"
    assert (out / "theta.csv").exists()


def test_errors_exit_one(dataset, tmp_path, capsys):
    assert main(["solve", str(tmp_path / "missing.csv"), "--lambda0", "1",
                 "--lambda2", "1", "--big-m", "1"]) == 1
    assert main(["solve", str(dataset / "data.csv"), "--lambda0", "1",
                 "--lambda2", "1", "--out", str(tmp_path / "o")]) == 1
    zero = tmp_path / "z.csv"
    io.write_matrix_csv(zero, np.column_stack([np.ones(5), np.arange(5.0)]))
    assert main(["solve", str(zero), "--lambda0", "1", "--lambda2", "1",
                 "--big-m", "1", "--standardize",
                 "--out", str(tmp_path / "o")]) == 1
    assert "zero column 0" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        main(["tune", "--train", "a", "--val", "b", "--grid", "4by4"])


def test_determinism(dataset, tmp_path):
    outs = []
    for name in ("r1", "r2"):
        out = tmp_path / name
        main(["solve", str(dataset / "data.csv"), "--lambda0", "0.02",
              "--lambda2", "0.02", "--big-m", "2", "--gap-tol", "0.001",
              "--node-limit", "30", "--out", str(out), "--log-nodes"])
        outs.append(out)
    for f in ("theta.csv", "nodes.jsonl"):
        assert (outs[0] / f).read_bytes() == (outs[1] / f).read_bytes()


def test_eval_and_tune(dataset, tmp_path, capsys, monkeypatch):
    truth = str(dataset / "truth.csv")
    assert main(["eval", "--estimate", truth, "--truth", truth,
                 "--out", str(tmp_path / "m.json")]) == 0
    assert "mcc=1.0" in capsys.readouterr().out
    assert io.read_json(tmp_path / "m.json")["frob_rel"] == 0.0

    monkeypatch.setenv("PRECISION_BNB_THREADS", "2")
    out = tmp_path / "tune"
    code = main(["tune", "--train", str(dataset / "data.csv"), "--val",
                 str(dataset / "val.csv"), "--grid", "3x2", "--big-m", "2",
                 "--out", str(out), "--truth", truth])
    assert code == 0
    report = io.read_json(out / "report.json")
    assert len(report["table"]) == 6
    assert "metrics" in report and (out / "theta.csv").exists()
    printed = capsys.readouterr().out
    assert printed.count("\n") == 7 and "*" in printed
