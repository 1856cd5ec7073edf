import csv
import json

import pytest

from multibump.cli import ProblemSpec, run
from multibump.errors import SpecError

SIN3 = {"weight": {"kind": "sin_multibump", "m": 3, "L": 1.0}, "p": 3.0, "lambda": -80.0, "N": 257}


def write_spec(tmp_path, **over):
    spec = {**SIN3, **over}
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(spec))
    return str(path)


def err_json(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


def test_solve_writes_manifest(tmp_path):
    out = tmp_path / "out"
    assert run(["solve", "--spec", write_spec(tmp_path), "--out", str(out)]) == 0
    man = json.loads((out / "manifest.json").read_text())
    assert len(man["solutions"]) == 3
    assert sorted(tuple(s["index_set"]) for s in man["solutions"]) == [(1,), (1, 2), (2,)]
    assert all(s["residual"] <= 1e-6 for s in man["solutions"])
    assert json.loads((out / "spec.json").read_text())["p"] == 3.0


def test_solve_is_deterministic(tmp_path):
    spec = write_spec(tmp_path)
    run(["solve", "--spec", spec, "--out", str(tmp_path / "a")])
    run(["solve", "--spec", spec, "--out", str(tmp_path / "b")])
    for name in ("manifest.json", "solutions.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_p_equal_one_is_a_spec_error(tmp_path, capsys):
    assert run(["solve", "--spec", write_spec(tmp_path, p=1.0), "--out", str(tmp_path / "o")]) == 2
    err = err_json(capsys)
    assert err["error"] == "SpecError" and err["exit_code"] == 2
    assert "p > 1" in err["message"]


@pytest.mark.parametrize("over", [{"lambda": 5.0}, {"N": 1}, {"lambda_grid": [-10, -5]}, {"bogus": 1},
                                  {"L": 2.0}])
def test_bad_specs(tmp_path, capsys, over):
    assert run(["solve", "--spec", write_spec(tmp_path, **over), "--out", str(tmp_path / "o")]) == 2
    assert err_json(capsys)["exit_code"] == 2


def test_unreadable_spec(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["count", "--spec", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert run(["count", "--spec", str(tmp_path / "missing.json"), "--out", str(tmp_path / "o")]) == 2


def test_spec_round_trip():
    spec = ProblemSpec.from_dict({**SIN3, "lambda_grid": [-10, -20], "newton": {"max_iters": 50}})
    assert ProblemSpec.from_dict(spec.to_dict()) == spec
    with pytest.raises(SpecError):
        ProblemSpec.from_dict({"p": 3.0})


def test_count_and_classify(tmp_path):
    out = tmp_path / "c"
    assert run(["count", "--spec", write_spec(tmp_path), "--out", str(out)]) == 0
    count = json.loads((out / "count.json").read_text())
    assert count["count"] == 3
    assert all(s["sup"] > count["r_lambda"] for s in count["solutions"])
    assert (out / "scan.csv").read_text().startswith("s,S,blew_up")
    # classify a solutions file produced by solve
    run(["solve", "--spec", write_spec(tmp_path), "--out", str(tmp_path / "s")])
    assert run(["classify", "--spec", write_spec(tmp_path), "--out", str(tmp_path / "k"),
                "--input", str(tmp_path / "s" / "solutions.json")]) == 0
    boxes = sorted(r["box"] for r in json.loads((tmp_path / "k" / "classify.json").read_text())["solutions"])
    assert boxes == ["{1,2}", "{1}", "{2}"]


def test_degree_table_command(tmp_path):
    out = tmp_path / "d"
    assert run(["degree-table", "--spec", write_spec(tmp_path), "--out", str(out)]) == 0
    rows = list(csv.reader((out / "degree_table.csv").read_text().splitlines()))
    assert rows == [["index_set", "degree"], ["{}", "1"], ["{1}", "-1"], ["{2}", "-1"], ["{1,2}", "1"]]
    omega = list(csv.reader((out / "omega_table.csv").read_text().splitlines()))
    assert omega == [["index_set", "degree"], ["{}", "1"], ["{1}", "0"], ["{2}", "0"], ["{1,2}", "0"]]


def test_liouville_command(tmp_path):
    out = tmp_path / "l"
    assert run(["liouville", "--spec", write_spec(tmp_path), "--out", str(out)]) == 0
    rep = json.loads((out / "liouville.json").read_text())
    assert rep["configurations"] == 108 and rep["failures"] == 0


def test_continue_command(tmp_path):
    spec = write_spec(tmp_path, continuation={"max_points": 200, "N": 129})
    out = tmp_path / "b"
    assert run(["continue", "--spec", spec, "--out", str(out)]) == 0
    br = json.loads((out / "branch.json").read_text())
    assert br["status"] == "MAX_POINTS" and br["points"] == 200
    assert abs(br["seed_lambda"] - 9.8696) < 1e-2
    assert (out / "branch.csv").read_text().startswith("lambda,sup_norm,fold_flag")


def test_sweep_command_threads_agree(tmp_path):
    spec = write_spec(tmp_path, lambda_grid=[-40.0, -80.0])
    run(["sweep", "--spec", spec, "--out", str(tmp_path / "one")])
    run(["sweep", "--spec", spec, "--out", str(tmp_path / "two"), "--threads", "2"])
    assert (tmp_path / "one" / "sweep.csv").read_bytes() == (tmp_path / "two" / "sweep.csv").read_bytes()
    rep = json.loads((tmp_path / "one" / "sweep.json").read_text())
    assert rep["lambda_c"] == -40.0


def test_grid_override(tmp_path):
    out = tmp_path / "g"
    run(["solve", "--spec", write_spec(tmp_path), "--out", str(out), "--grid-N", "129"])
    assert json.loads((out / "spec.json").read_text())["N"] == 129
    sol = json.loads((out / "solutions.json").read_text())["solutions"][0]["profile"]
    assert len(sol["values"]) == 131


@pytest.mark.slow
def test_verify_command(tmp_path):
    out = tmp_path / "v"
    code = run(["verify", "--spec", write_spec(tmp_path), "--out", str(out)])
    rep = json.loads((out / "reports.json").read_text())
    status = {r["lemma"]: r["status"] for r in rep["reports"]}
    assert status["2.2"] == "PASS" and status["2.3"] == "PASS" and status["3.3"] == "PASS"
    assert rep["jacobian_max_rel_error"] <= 1e-6
    assert code == 0
