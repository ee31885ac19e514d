import json
import os
import subprocess
import sys

import numpy as np
import pytest

from oracles import random_game, random_mdp
from robustmdp import io
from robustmdp._parallel import ordered_map, thread_count
from robustmdp.cli import disjoint_union, run_command
from robustmdp.model import Mdp, Skeleton
from robustmdp.uncertainty import BallModel, BallSpec, ImdpModel, ImdpSpec


def write(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(io.dumps(doc))
    return str(path)


def run(argv, capsys):
    code = run_command(argv)
    out, err = capsys.readouterr()
    return code, out, err


def run_json(argv, capsys):
    code, out, err = run(argv + ["--json"], capsys)
    assert code == 0, err
    return json.loads(out)


def _skeleton(rng, S=3, A=2):
    return Skeleton([f"s{i}" for i in range(S)], [f"a{i}" for i in range(A)],
                    np.round(rng.normal(size=(S, A)), 3), 0, 0.85)


def uncertain_models():
    rng = np.random.default_rng(60)
    skel = _skeleton(rng)
    P = rng.dirichlet(np.ones(3), size=(3, 2))
    w = rng.uniform(0.0, 0.2, size=(3, 2, 3))
    imdp = ImdpModel(skel, {(s, a): ImdpSpec(np.clip(P[s, a] - w[s, a], 0, 1),
                                             np.clip(P[s, a] + w[s, a], 0, 1))
                            for s, a in skel.pairs()})
    l1 = BallModel(skel, {(s, a): BallSpec(P[s, a], 0.3, "l1") for s, a in skel.pairs()})
    linf = BallModel(skel, {(s, a): BallSpec(P[s, a], 0.1, "linf") for s, a in skel.pairs()})
    return {"imdp": imdp, "l1": l1, "linf": linf}


@pytest.fixture
def mdp_file(tmp_path):
    return write(tmp_path, "mdp.json", io.render_model(random_mdp(np.random.default_rng(61), 4, 2)))


@pytest.mark.parametrize("kind", ["imdp", "l1", "linf"])
def test_convert_then_solve_agrees(kind, tmp_path, capsys):
    src = write(tmp_path, f"{kind}.json", io.render_model(uncertain_models()[kind]))
    converted = tmp_path / "poly.json"
    code, _, err = run(["convert", src, "--out", str(converted)], capsys)
    assert code == 0, err
    assert json.loads(converted.read_text())["kind"] == "rmdp-polytope"
    direct = run_json(["solve", src], capsys)
    via = run_json(["solve", str(converted)], capsys)
    assert abs(direct["value"] - via["value"]) <= 1e-9
    assert direct["policy"] == via["policy"]


def test_solve_algorithms_agree(mdp_file, capsys):
    rpi = run_json(["solve", mdp_file], capsys)
    rpiot = run_json(["solve", mdp_file, "--algo", "rpiot", "--seed", "3"], capsys)
    rvi = run_json(["solve", mdp_file, "--algo", "rvi", "--eps", "1e-7"], capsys)
    assert rpi["value"] == pytest.approx(rpiot["value"], abs=1e-9)
    assert abs(rvi["value"] - rpi["value"]) <= 1e-7
    assert rvi["lower"]["s0"] <= rpi["value"] + 1e-9 <= rvi["upper"]["s0"] + 2e-9
    assert "lower" not in rpi and rpi["iterations"] >= 1


def test_solve_text_output(mdp_file, capsys):
    code, out, _ = run(["solve", mdp_file], capsys)
    assert code == 0 and out.startswith("value ") and "s0:" in out


def test_threshold_mode(mdp_file, capsys):
    value = run_json(["solve", mdp_file], capsys)["value"]
    yes = run_json(["solve", mdp_file, "--kappa", str(value - 0.01)], capsys)
    no = run_json(["solve", mdp_file, "--kappa", str(value + 0.01)], capsys)
    assert yes["decision"] == "yes" and "policy" in yes
    assert no["decision"] == "no" and no["bound"] == pytest.approx(value)
    code, _, _ = run(["solve", mdp_file, "--algo", "rvi", "--kappa", "0"], capsys)
    assert code == 2


def test_eval_policy_file(mdp_file, tmp_path, capsys):
    best = run_json(["solve", mdp_file], capsys)
    policy = write(tmp_path, "pol.json", {"format_version": "1", "kind": "policy",
                                          "policy": best["policy"]})
    values = run_json(["eval", mdp_file, "--policy", policy], capsys)["values"]
    assert values == pytest.approx(best["values"], abs=1e-9)


@pytest.mark.parametrize("engine", ["rpi", "rvi", "fixpoint"])
def test_bisim_engines_agree(engine, mdp_file, capsys):
    ref = run_json(["bisim", mdp_file, "--engine", "rpi"], capsys)
    got = run_json(["bisim", mdp_file, "--engine", engine, "--eps", "1e-7"], capsys)
    assert np.abs(np.array(ref["table"]) - np.array(got["table"])).max() <= 1e-5
    pair = run_json(["bisim", mdp_file, "--engine", engine, "--pair", "s0,s3"], capsys)
    assert pair["distance"] == pytest.approx(ref["table"][0][3], abs=1e-5)


def test_bisim_union(tmp_path, capsys):
    m = Mdp(["x"], ["a"], [[[1.0]]], [[1.0]], 0, 0.9)
    n = Mdp(["y"], ["a"], [[[1.0]]], [[0.0]], 0, 0.9)
    a = write(tmp_path, "a.json", io.render_model(m))
    b = write(tmp_path, "b.json", io.render_model(n))
    out = run_json(["bisim", a, "--union", b], capsys)
    assert out["pair"] == ["1:x", "2:y"]
    assert out["distance"] == pytest.approx(1.0, abs=1e-9)


def test_disjoint_union_layout():
    rng = np.random.default_rng(62)
    u = disjoint_union(random_mdp(rng, 2, 2), random_mdp(rng, 3, 2))
    assert u.states == ("1:s0", "1:s1", "2:s0", "2:s1", "2:s2")
    assert u.transition[:2, :, 2:].sum() == 0 and u.transition[2:, :, :2].sum() == 0


def test_game_solve(tmp_path, capsys):
    game = random_game(np.random.default_rng(63), 3, 2)
    path = write(tmp_path, "g.json", io.render_model(game))
    out = run_json(["game-solve", path], capsys)
    from oracles import game_value_by_enumeration
    assert out["value"] == pytest.approx(game_value_by_enumeration(game), abs=1e-8)
    code, _, _ = run(["game-solve", write(tmp_path, "m.json", io.render_model(
        random_mdp(np.random.default_rng(0), 2, 1)))], capsys)
    assert code == 2


def test_validate(tmp_path, capsys):
    good = write(tmp_path, "good.json", io.render_model(uncertain_models()["l1"]))
    assert run_json(["validate", good], capsys)["ok"]
    doc = {"format_version": "1", "kind": "rmdp-polytope", "states": ["x", "y"],
           "actions": ["a"], "initial": "x", "discount": 0.9,
           "rewards": {"x": {"a": 0}, "y": {"a": 0}},
           "polytopes": {"x": {"a": {"rows": [[1, 0], [0, 1]], "rhs": [0.5, 0.5]}},
                         "y": {"a": {"eq_rows": [[1, 1]], "eq_rhs": [1]}}}}
    code, out, _ = run(["validate", write(tmp_path, "bad.json", doc), "--json"], capsys)
    report = json.loads(out)
    assert code == 2 and not report["ok"]
    assert report["problems"] == [{"state": "x", "action": "a", "feasible": True,
                                   "bounded": True, "in_simplex": False}]


def test_frozen_lake_generator(tmp_path, capsys):
    out = tmp_path / "fl.json"
    assert run(["frozen-lake", "--out", str(out)], capsys)[0] == 0
    doc = json.loads(out.read_text())
    assert doc["layout"] == ["SFFF", "FHFH", "FFFH", "HFFG"]
    assert len(doc["states"]) == 16
    assert io.parse_model(doc).n_states == 16
    seeded = run_json(["frozen-lake", "--size", "5", "--layout-seed", "3"], capsys)
    assert len(seeded["layout"]) == 5
    custom = run_json(["frozen-lake", "--size", "2", "--map", "SF,FG", "--slip", "0"], capsys)
    assert custom["layout"] == ["SF", "FG"]
    assert run(["frozen-lake", "--size", "2", "--map", "SH,HG"], capsys)[0] == 0
    assert run(["frozen-lake", "--size", "3", "--map", "SF,FG"], capsys)[0] == 2
    assert run(["frozen-lake", "--slip", "1.5"], capsys)[0] == 2


def test_bench_report_is_reproducible(tmp_path, capsys):
    argv = ["bench", "frozen-lake", "--sizes", "2", "--seeds", "2", "--no-timing", "--json"]
    first = run(argv + ["--csv", str(tmp_path / "a.csv")], capsys)
    second = run(argv + ["--csv", str(tmp_path / "b.csv")], capsys)
    assert first[0] == 0 and first[1] == second[1]
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    report = json.loads(first[1])
    assert report["kind"] == "bench-report"
    values = {row["algorithm"]: row["value_mean"] for row in report["summary"]}
    assert values["RPI"] == pytest.approx(values["RPIOT"], abs=1e-9)
    assert abs(values["BVI"] - values["RPI"]) <= 1e-6
    header = (tmp_path / "a.csv").read_text().splitlines()[0]
    assert header == "algorithm,size,seed,value,time_s,iterations"


@pytest.mark.parametrize("argv, code", [
    (["solve", "/nonexistent.json"], 2),
    (["solve"], 2),
    (["nosuchcommand"], 2),
    (["bisim", "x.json", "--engine", "magic"], 2),
    (["solve", "x.json", "--algo", "lp"], 2),
])
def test_exit_codes(argv, code, capsys):
    assert run(argv, capsys)[0] == code


def test_json_errors_on_stderr(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"format_version": "9"}')
    code, out, err = run(["solve", str(bad), "--json"], capsys)
    assert code == 2 and out == ""
    assert json.loads(err)["error"] == "FormatError"


def test_action_mismatch_is_an_input_error(tmp_path, capsys):
    mdp = Mdp(["s0", "s1"], ["a", "b"], [[[1, 0], [1, 0]], [[0, 1], [0, 1]]],
              [[0, 0], [1, 0]], enabled=[[0, 1], [0]])
    code, _, err = run(["bisim", write(tmp_path, "m.json", io.render_model(mdp))], capsys)
    assert code == 2 and "ActionMismatch" in err


def test_solver_failure_exit_code(mdp_file, capsys):
    code, _, err = run(["solve", mdp_file, "--algo", "rvi", "--eps", "1e-300"], capsys)
    assert code == 1 and "IterationCapExceeded" in err


def test_thread_count(monkeypatch):
    monkeypatch.setenv("ROBUSTMDP_THREADS", "3")
    assert thread_count() == 3
    monkeypatch.setenv("ROBUSTMDP_THREADS", "0")
    assert thread_count() == (os.cpu_count() or 1)
    monkeypatch.setenv("ROBUSTMDP_THREADS", "junk")
    assert thread_count() == (os.cpu_count() or 1)
    assert ordered_map(lambda x: x * x, range(20), threads=4) == [x * x for x in range(20)]


def _cli(args, **env):
    full = {**os.environ, **env}
    return subprocess.run([sys.executable, "-m", "robustmdp.cli", *args], env=full,
                          capture_output=True, text=True, timeout=600)


def test_thread_setting_does_not_change_results(mdp_file):
    one = _cli(["bisim", mdp_file, "--json"], ROBUSTMDP_THREADS="1")
    four = _cli(["bisim", mdp_file, "--json"], ROBUSTMDP_THREADS="4")
    assert one.returncode == 0 and one.stdout == four.stdout


def test_pure_python_kernel_selection(mdp_file):
    probe = "import robustmdp.lp as lp; print(lp.KERNEL)"
    forced = subprocess.run([sys.executable, "-c", probe], capture_output=True, text=True,
                            env={**os.environ, "ROBUSTMDP_PURE_PYTHON": "1"})
    assert forced.stdout.strip() == "python"
    default = subprocess.run([sys.executable, "-c", probe], capture_output=True, text=True,
                             env={k: v for k, v in os.environ.items()
                                  if k != "ROBUSTMDP_PURE_PYTHON"})
    from robustmdp.lp import cython_available
    assert default.stdout.strip() == ("cython" if cython_available() else "python")
    a = json.loads(_cli(["solve", mdp_file, "--json"], ROBUSTMDP_PURE_PYTHON="1").stdout)
    b = json.loads(_cli(["solve", mdp_file, "--json"]).stdout)
    assert a["value"] == pytest.approx(b["value"], abs=1e-9)
