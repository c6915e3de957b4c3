"""Command-line interface tests, run in-process through main()."""

import json
import subprocess
import sys

import numpy as np
import pytest

import cvxadp.cli as cli
from cvxadp.cli import main
from cvxadp.fadp import load_stack
from cvxadp.lp import LpNumericError, Polytope, save_polytope


def write_linear_csv(path, n=60, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 2))
    y = X @ np.array([1.5, -0.5]) + 2.0
    rows = ["%r,%r,%r" % (float(X[i, 0]), float(X[i, 1]), float(y[i]))
            for i in range(n)]
    path.write_text("\n".join(rows) + "\n")


@pytest.fixture(scope="module")
def brewery_stack(tmp_path_factory):
    out = tmp_path_factory.mktemp("stack") / "brewery2.json"
    rc = main(["plan", "brewery", "--horizon", "2", "--n", "20", "--m", "2",
               "--seed", "0", "--out", str(out)])
    assert rc == 0
    return out


# --- exit codes -------------------------------------------------------------


def test_no_command_is_usage_error(capsys):
    assert main([]) == 1
    assert "usage error" in capsys.readouterr().err


def test_unknown_problem_is_usage_error(tmp_path, capsys):
    rc = main(["plan", "windmill", "--out", str(tmp_path / "x.json")])
    assert rc == 1
    assert "usage error" in capsys.readouterr().err


def test_missing_required_argument_is_usage_error(tmp_path, capsys):
    assert main(["evaluate", "--stack", "s.json",
                 "--out", str(tmp_path / "x.csv")]) == 1


def test_invalid_baseline_pair_is_usage_error(tmp_path, capsys):
    rc = main(["baseline", "brewery", "nostorage", "--episodes", "1",
               "--out", str(tmp_path / "x.csv")])
    assert rc == 1
    assert "not defined" in capsys.readouterr().err


def test_missing_dataset_is_input_error(tmp_path, capsys):
    rc = main(["regress", "--data", str(tmp_path / "nope.csv"),
               "--out", str(tmp_path / "m.json")])
    assert rc == 2
    assert "input error" in capsys.readouterr().err


def test_empty_dataset_is_input_error(tmp_path):
    data = tmp_path / "empty.csv"
    data.write_text("")
    assert main(["regress", "--data", str(data),
                 "--out", str(tmp_path / "m.json")]) == 2


def test_overwrite_needs_force(tmp_path, capsys):
    data = tmp_path / "data.csv"
    write_linear_csv(data, n=30)
    out = tmp_path / "model.json"
    out.write_text("occupied")
    rc = main(["regress", "--data", str(data), "--out", str(out)])
    assert rc == 2
    assert "refusing to overwrite" in capsys.readouterr().err
    assert out.read_text() == "occupied"
    rc = main(["regress", "--data", str(data), "--out", str(out), "--force"])
    assert rc == 0
    assert out.read_text() != "occupied"


def test_missing_stack_is_input_error(tmp_path):
    rc = main(["evaluate", "brewery", "--horizon", "2",
               "--stack", str(tmp_path / "nope.json"),
               "--out", str(tmp_path / "out.csv")])
    assert rc == 2


def test_stack_problem_mismatch(tmp_path, brewery_stack, capsys):
    rc = main(["evaluate", "energy", "--horizon", "2",
               "--stack", str(brewery_stack),
               "--out", str(tmp_path / "out.csv"), "--episodes", "1"])
    assert rc == 2
    assert "dimension" in capsys.readouterr().err
    rc = main(["evaluate", "brewery", "--horizon", "3",
               "--stack", str(brewery_stack),
               "--out", str(tmp_path / "out.csv"), "--episodes", "1"])
    assert rc == 2


def test_missing_config_is_input_error(tmp_path):
    rc = main(["plan", "brewery", "--config", "no-such-config",
               "--horizon", "2", "--out", str(tmp_path / "s.json")])
    assert rc == 2


def test_malformed_config_is_input_error(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    rc = main(["plan", "brewery", "--config", str(bad),
               "--horizon", "2", "--out", str(tmp_path / "s.json")])
    assert rc == 2


def test_wrong_problem_config_is_input_error(tmp_path):
    rc = main(["plan", "energy", "--config", "brewery", "--horizon", "2",
               "--n", "12", "--m", "1", "--out", str(tmp_path / "s.json")])
    assert rc == 2


def test_numeric_failure_exit_code(tmp_path, monkeypatch, capsys):
    def boom(*a, **k):
        raise LpNumericError("synthetic numeric failure")

    monkeypatch.setattr(cli, "run_fadp", boom)
    rc = main(["plan", "brewery", "--horizon", "2",
               "--out", str(tmp_path / "s.json")])
    assert rc == 3
    assert "numeric failure" in capsys.readouterr().err


def test_unwritable_output_is_input_error(tmp_path, capsys):
    rc = main(["plan", "brewery", "--horizon", "2", "--n", "20", "--m", "1",
               "--out", str(tmp_path / "no" / "such" / "dir" / "s.json")])
    assert rc == 2
    assert "input error" in capsys.readouterr().err


def test_bad_parameter_combination_is_usage_error(tmp_path, capsys):
    # brewery decisions are 16-dimensional; --n 5 cannot satisfy the
    # trainer's sample-size requirement and must exit cleanly
    rc = main(["plan", "brewery", "--horizon", "2", "--n", "5", "--m", "1",
               "--out", str(tmp_path / "s.json")])
    assert rc == 1
    assert "usage error" in capsys.readouterr().err


def test_version_flag():
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "cvxadp", "--version"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.startswith("cvxadp ")


# --- regress ----------------------------------------------------------------


def test_regress_linear_csv(tmp_path, capsys):
    data = tmp_path / "data.csv"
    write_linear_csv(data)
    out = tmp_path / "model.json"
    rc = main(["regress", "--data", str(data), "--out", str(out), "--seed", "3"])
    assert rc == 0
    assert "wrote" in capsys.readouterr().out
    doc = json.loads(out.read_text())
    assert doc["format"] == "cvxadp-estimate"
    assert doc["final_train_risk"] <= 1e-10
    manifest = json.loads((tmp_path / "model.json.manifest.json").read_text())
    assert manifest["command"] == "regress"
    assert manifest["seed"] == 3
    assert manifest["parameters"]["folds"] == 10
    first = out.read_bytes()
    assert main(["regress", "--data", str(data), "--out", str(out),
                 "--seed", "3", "--force"]) == 0
    assert out.read_bytes() == first


def test_regress_header_flag(tmp_path):
    data = tmp_path / "data.csv"
    rng = np.random.default_rng(1)
    x = rng.uniform(-1, 1, size=40)
    rows = ["x,y"] + ["%r,%r" % (float(v), float(abs(v))) for v in x]
    data.write_text("\n".join(rows) + "\n")
    out = tmp_path / "model.json"
    assert main(["regress", "--data", str(data), "--header",
                 "--out", str(out)]) == 0
    # without --header the text row fails float parsing
    assert main(["regress", "--data", str(data),
                 "--out", str(tmp_path / "m2.json")]) == 2


# --- plan / evaluate / baseline ---------------------------------------------


def test_plan_writes_valid_stack(brewery_stack):
    stack = load_stack(brewery_stack)
    assert stack.problem == "brewery"
    assert stack.horizon == 2
    manifest = json.loads(
        (brewery_stack.parent / (brewery_stack.name + ".manifest.json")).read_text())
    assert manifest["format"] == "cvxadp-manifest"
    assert manifest["parameters"]["n"] == 20
    assert manifest["parameters"]["horizon"] == 2
    assert manifest["config"]["problem"] == "brewery"
    import hashlib
    digest = hashlib.sha256(brewery_stack.read_bytes()).hexdigest()
    assert manifest["outputs"][brewery_stack.name] == digest


def test_evaluate_csv_output(tmp_path, brewery_stack):
    out = tmp_path / "rev.csv"
    rc = main(["evaluate", "brewery", "--horizon", "2",
               "--stack", str(brewery_stack), "--episodes", "3",
               "--seed", "1", "--out", str(out)])
    assert rc == 0
    lines = out.read_text().strip().split("\n")
    assert lines[0] == "episode,revenue"
    assert len(lines) == 5  # header + 3 episodes + summary
    assert lines[-1].startswith("summary,")
    revs = [float(l.split(",")[1]) for l in lines[1:4]]
    mean = float(lines[-1].split(",")[1])
    assert mean == pytest.approx(np.mean(revs), abs=1e-12)


def test_evaluate_columns_output(tmp_path, brewery_stack):
    out = tmp_path / "rev.txt"
    rc = main(["evaluate", "brewery", "--horizon", "2",
               "--stack", str(brewery_stack), "--episodes", "2",
               "--columns", "--out", str(out)])
    assert rc == 0
    lines = out.read_text().strip().split("\n")
    assert len(lines) == 3
    assert lines[0].startswith("0 ")
    assert lines[-1].startswith("# mean ")


def test_evaluate_deterministic_and_thread_invariant(tmp_path, brewery_stack):
    args = ["evaluate", "brewery", "--horizon", "2",
            "--stack", str(brewery_stack), "--episodes", "4", "--seed", "2"]
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    c = tmp_path / "c.csv"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert main(args + ["--out", str(c), "--threads", "3"]) == 0
    assert a.read_bytes() == b.read_bytes() == c.read_bytes()


def test_manifest_replay_reproduces_output(tmp_path, brewery_stack):
    out = tmp_path / "rev.csv"
    assert main(["evaluate", "brewery", "--horizon", "2",
                 "--stack", str(brewery_stack), "--episodes", "2",
                 "--seed", "7", "--out", str(out)]) == 0
    man = json.loads((tmp_path / "rev.csv.manifest.json").read_text())
    p = man["parameters"]
    replay = tmp_path / "replay.csv"
    assert main(["evaluate", p["problem"], "--horizon", str(p["horizon"]),
                 "--stack", p["stack"], "--episodes", str(p["episodes"]),
                 "--seed", str(man["seed"]), "--threads", str(p["threads"]),
                 "--out", str(replay)]) == 0
    assert replay.read_bytes() == out.read_bytes()


def test_baseline_energy_nostorage(tmp_path):
    out = tmp_path / "base.csv"
    rc = main(["baseline", "energy", "nostorage", "--horizon", "3",
               "--episodes", "2", "--out", str(out)])
    assert rc == 0
    lines = out.read_text().strip().split("\n")
    assert len(lines) == 4
    assert lines[0] == "episode,revenue"


def test_baseline_energy_heuristic(tmp_path):
    out = tmp_path / "base.csv"
    rc = main(["baseline", "energy", "heuristic", "--horizon", "3",
               "--episodes", "2", "--out", str(out)])
    assert rc == 0


def test_baseline_brewery_deterministic(tmp_path):
    out = tmp_path / "det.csv"
    rc = main(["baseline", "brewery", "deterministic", "--horizon", "2",
               "--out", str(out)])
    assert rc == 0
    lines = out.read_text().strip().split("\n")
    assert len(lines) == 3  # header + one plan row + summary
    assert float(lines[1].split(",")[1]) == float(lines[2].split(",")[1])


def test_packaged_config_resolution(tmp_path):
    # bare names resolve to the packaged defaults
    out = tmp_path / "stack.json"
    rc = main(["plan", "brewery", "--config", "brewery", "--horizon", "2",
               "--n", "20", "--m", "1", "--out", str(out)])
    assert rc == 0


def test_config_dir_env_var(tmp_path, monkeypatch):
    cfgdir = tmp_path / "cfgs"
    cfgdir.mkdir()
    (cfgdir / "mine.json").write_text(json.dumps(
        {"problem": "brewery", "horizon": 2}))
    monkeypatch.setenv("CVXADP_CONFIG_DIR", str(cfgdir))
    out = tmp_path / "stack.json"
    rc = main(["plan", "brewery", "--config", "mine",
               "--n", "20", "--m", "1", "--out", str(out)])
    assert rc == 0
    assert load_stack(out).horizon == 2


# --- sample -----------------------------------------------------------------


def test_sample_box(tmp_path):
    region = Polytope(np.concatenate([np.eye(2), -np.eye(2)]),
                      [1.0, 1.0, 0.0, 0.0])
    pjson = tmp_path / "box.json"
    save_polytope(region, pjson)
    out = tmp_path / "pts.csv"
    rc = main(["sample", "--polytope", str(pjson), "--count", "40",
               "--out", str(out)])
    assert rc == 0
    pts = np.array([[float(v) for v in line.split(",")]
                    for line in out.read_text().strip().split("\n")])
    assert pts.shape == (40, 2)
    assert pts.min() >= -1e-9 and pts.max() <= 1.0 + 1e-9
    man = json.loads((tmp_path / "pts.csv.manifest.json").read_text())
    assert man["parameters"]["mode"] == "walk"
    assert man["parameters"]["count"] == 40


def test_sample_missing_polytope(tmp_path):
    rc = main(["sample", "--polytope", str(tmp_path / "nope.json"),
               "--out", str(tmp_path / "pts.csv")])
    assert rc == 2
