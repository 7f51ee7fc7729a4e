import json
import subprocess
import sys

import numpy as np
import pytest

from avgk import cli
from avgk.core import save_labels, save_scores
from conftest import EX2_MATRIX


def run(*args, env=None):
    return subprocess.run(
        [sys.executable, "-m", "avgk.cli", *args], capture_output=True, text=True, env=env
    )


@pytest.fixture
def ex2_files(tmp_path):
    rows, labels = [], []
    for eta in EX2_MATRIX:
        for k, p in enumerate(eta):
            rows += [eta] * round(p * 6)
            labels += [k] * round(p * 6)
    save_scores(tmp_path / "scores.csv", np.array(rows))
    save_labels(tmp_path / "labels.txt", labels)
    save_scores(tmp_path / "zones.csv", EX2_MATRIX)
    return tmp_path


def test_predict_avgk(ex2_files, capsys):
    out = ex2_files / "sets.csv"
    code = cli.main(["predict", "--scores", str(ex2_files / "zones.csv"), "--k", "2",
                     "--mode", "avgk", "--out", str(out)])
    assert code == 0
    assert out.read_text().splitlines() == ["0", "1;2", "3;4;5"]
    assert "mean set size: 2" in capsys.readouterr().err


def test_predict_topk_and_mask(ex2_files, capsys):
    assert cli.main(["predict", "--scores", str(ex2_files / "zones.csv"), "--k", "2", "--mode", "topk"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert all(len(line.split(";")) == 2 for line in lines)
    assert cli.main(["predict", "--scores", str(ex2_files / "zones.csv"), "--k", "1", "--mask"]) == 0
    assert capsys.readouterr().out.splitlines()[0] == "1,0,0,0,0,0"


@pytest.mark.parametrize("k, mode", [("0", "avgk"), ("1.5", "topk"), ("7", "topk")])
def test_predict_bad_k(ex2_files, k, mode):
    assert cli.main(["predict", "--scores", str(ex2_files / "zones.csv"), "--k", k, "--mode", mode]) == 2


def test_predict_empty_set_lines(tmp_path, capsys):
    save_scores(tmp_path / "s.csv", np.array([[0.9, 0.1], [0.5, 0.5]]))
    assert cli.main(["predict", "--scores", str(tmp_path / "s.csv"), "--k", "0.5"]) == 0
    assert capsys.readouterr().out == "0\n\n"


def test_evaluate(ex2_files):
    out = ex2_files / "report.json"
    code = cli.main(["evaluate", "--scores", str(ex2_files / "scores.csv"),
                     "--labels", str(ex2_files / "labels.txt"), "--kmax", "3", "--out", str(out)])
    assert code == 0
    report = json.loads(out.read_text())
    assert [c["top_k_error"] for c in report["curves"]] == pytest.approx([7 / 18, 1 / 9, 0])
    assert [c["avg_k_error"] for c in report["curves"]] == pytest.approx([1 / 3, 0, 0])
    assert out.read_text() == json.dumps(report, indent=2, sort_keys=True) + "\n"


def test_evaluate_defaults_and_single_k(ex2_files, capsys):
    args = ["evaluate", "--scores", str(ex2_files / "scores.csv"), "--labels", str(ex2_files / "labels.txt")]
    assert cli.main(args) == 0
    assert len(json.loads(capsys.readouterr().out)["curves"]) == 6
    assert cli.main(args + ["--kmax", "1"]) == 0
    assert len(json.loads(capsys.readouterr().out)["curves"]) == 1


def test_evaluate_length_mismatch(ex2_files):
    save_labels(ex2_files / "short.txt", [0, 1])
    code = cli.main(["evaluate", "--scores", str(ex2_files / "scores.csv"),
                     "--labels", str(ex2_files / "short.txt")])
    assert code == 2


def test_oracle_examples(capsys):
    assert cli.main(["oracle", "--example", "2", "--k", "2"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["top_k_error"] == pytest.approx(1 / 9, abs=1e-15)
    assert data["avg_k_error"] == 0
    assert data["straddle"][0] == pytest.approx(1 / 27, abs=1e-15)
    assert cli.main(["oracle", "--example", "1", "--k", "2"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["adaptive_gain"] == 0 and data["support_gap"] is True


def test_oracle_spec_file(tmp_path, capsys):
    path = tmp_path / "d.json"
    path.write_text(json.dumps({"n_classes": 3, "zones": [
        {"weight": 0.5, "eta": [0.7, 0.2, 0.1]}, {"weight": 0.5, "eta": [0.4, 0.4, 0.2]}]}))
    assert cli.main(["oracle", "--spec", str(path), "--k", "1"]) == 0
    assert json.loads(capsys.readouterr().out)["k"] == 1


@pytest.mark.parametrize("text", ["{not json", '{"n_classes": 3}', '{"n_classes": 2, "zones": [{"weight": 1, "eta": [0.5, 0.6]}]}'])
def test_oracle_bad_spec(tmp_path, text):
    path = tmp_path / "bad.json"
    path.write_text(text)
    assert cli.main(["oracle", "--spec", str(path)]) == 2


def test_missing_file_exits_2(tmp_path):
    assert cli.main(["predict", "--scores", str(tmp_path / "nope.csv"), "--k", "1"]) == 2


def test_table1(capsys):
    assert cli.main(["oracle", "--table1"]) == 0
    rows = json.loads(capsys.readouterr().out)["rows"]
    assert [r["example"] for r in rows] == [2, 3, 4]


def test_verify_small_sample_inconclusive(capsys):
    code = cli.main(["verify", "--example", "1", "--samples", "10", "--seed", "0"])
    checks = {c["name"]: c["status"] for c in json.loads(capsys.readouterr().out)["checks"]}
    assert checks["monte_carlo_agreement"] == "inconclusive"
    assert checks["straddle_lower_bound"] == "pass"
    assert code == 0


def test_verify_corrupt(capsys):
    code = cli.main(["verify", "--example", "4", "--samples", "20000", "--seed", "1", "--corrupt", "0.3"])
    checks = {c["name"]: c["status"] for c in json.loads(capsys.readouterr().out)["checks"]}
    assert checks["plugin_bound_top"] == checks["plugin_bound_avg"] == "pass"
    assert checks["estimation_error_chain"] == "pass"
    assert code == 0


def test_verify_example_two_seed_seven(capsys):
    """The three-zone example at n = 2e5, seed 7.

    Every bound check passes.  The avg-2 Monte-Carlo cell has closed form 0,
    so its binomial tolerance is 0, while the sample threshold leaves a
    residual error of order 1e-4; verify reports that cell as a failure.
    """
    code = cli.main(["verify", "--example", "2", "--samples", "200000", "--seed", "7"])
    verdict = json.loads(capsys.readouterr().out)
    statuses = {c["name"]: c["status"] for c in verdict["checks"]}
    assert all(s == "pass" for name, s in statuses.items() if name != "monte_carlo_agreement")
    rows = next(c for c in verdict["checks"] if c["name"] == "monte_carlo_agreement")["detail"]["rows"]
    failing = [(r["k"], r["mode"]) for r in rows if not r["agree"]]
    assert failing == [(2, "avg")]
    assert code == 1


def test_calibrate(tmp_path):
    rng = np.random.default_rng(0)
    z = rng.normal(size=(200, 3)) * 3
    y = z.argmax(axis=1)
    save_scores(tmp_path / "z.csv", z)
    save_labels(tmp_path / "y.txt", y)
    out = tmp_path / "fit.json"
    proc = run("calibrate", "--logits", str(tmp_path / "z.csv"), "--labels", str(tmp_path / "y.txt"),
               "--out", str(out))
    assert proc.returncode == 0, proc.stderr
    fit = json.loads(out.read_text())
    assert fit["nll_after"] <= fit["nll_before"]
    assert set(fit) == {"temperature", "nll_before", "nll_after", "iterations", "warning"}


def test_calibrate_warning_on_stderr(tmp_path):
    save_scores(tmp_path / "z.csv", np.array([[3.0, 1.0, 0.0]]))
    save_labels(tmp_path / "y.txt", [0])
    proc = run("calibrate", "--logits", str(tmp_path / "z.csv"), "--labels", str(tmp_path / "y.txt"))
    assert proc.returncode == 0
    assert "warning" in proc.stderr
    assert json.loads(proc.stdout)["temperature"] == 0.001


def test_noise_inject(tmp_path):
    save_labels(tmp_path / "y.txt", [0, 1, 2, 2, 1, 0] * 50)
    (tmp_path / "g.json").write_text(json.dumps({"groups": [[0, 1], [2]]}))
    outs = []
    for name in ("a.txt", "b.txt"):
        proc = run("noise-inject", "--labels", str(tmp_path / "y.txt"), "--groups", str(tmp_path / "g.json"),
                   "--seed", "3", "--out", str(tmp_path / name))
        assert proc.returncode == 0, proc.stderr
        outs.append((tmp_path / name).read_text())
    assert outs[0] == outs[1]
    new = [int(v) for v in outs[0].split()]
    assert all(v == 2 for v, old in zip(new, [0, 1, 2, 2, 1, 0] * 50) if old == 2)


def test_noise_inject_bad_groups(tmp_path):
    save_labels(tmp_path / "y.txt", [0, 1])
    (tmp_path / "g.json").write_text(json.dumps({"groups": [[0, 1], [1, 2]]}))
    proc = run("noise-inject", "--labels", str(tmp_path / "y.txt"), "--groups", str(tmp_path / "g.json"))
    assert proc.returncode == 2
    assert proc.stdout == ""


def test_usage_errors_exit_2():
    assert run("predict").returncode == 2
    assert run("frobnicate").returncode == 2


def test_threads_env(ex2_files):
    import os

    env = dict(os.environ, AVGK_THREADS="3")
    args = ["evaluate", "--scores", str(ex2_files / "scores.csv"), "--labels", str(ex2_files / "labels.txt")]
    threaded = run(*args, env=env)
    env["AVGK_THREADS"] = "0"
    auto = run(*args, env=env)
    assert threaded.returncode == auto.returncode == 0
    assert threaded.stdout == auto.stdout
    env["AVGK_THREADS"] = "many"
    assert run(*args, env=env).returncode == 2
