import json
import subprocess
import sys

import pytest

from ampclab import cli
from ampclab.boolfn import GraphInstance
from ampclab.errors import ModelViolation, ResourceLimit


def call(capsys, *argv):
    code = cli.main(list(argv))
    return code, json.loads(capsys.readouterr().out)


def test_envelope(capsys):
    code, doc = call(capsys, "bounds", "--n", "1024", "--S", "32")
    assert code == 0
    assert doc["schema"] == "ampclab.report/1"
    assert doc["status"] == "ok"
    assert doc["generator"].startswith("numpy.PCG64")
    assert doc["config"]["n"] == 1024
    assert doc["result"]["deterministic"]["exact"] == "1/3"
    assert doc["result"]["randomized"]["exact"] == "7/30"


def test_bounds_eps(capsys):
    code, doc = call(capsys, "bounds", "--n", "4096", "--eps", "1/4", "--rand")
    assert code == 0 and set(doc["result"]) == {"randomized"}
    assert doc["result"]["randomized"]["exact"] == "1/2"


def test_solve_exhaustive(capsys):
    code, doc = call(capsys, "solve", "--n", "6", "--k", "2", "--S", "8", "--exhaustive")
    assert code == 0
    assert doc["result"]["instances"] == doc["result"]["correct"] == 70


def test_solve_random_and_transcript(capsys, tmp_path):
    tr = tmp_path / "t.jsonl"
    code, doc = call(capsys, "solve", "--n", "12", "--S", "8", "--samples", "4", "--seed", "3", "--transcript", str(tr))
    assert code == 0
    assert doc["result"]["correct"] == 4
    lines = tr.read_text().splitlines()
    assert lines and all(json.loads(l)["round"] >= 1 for l in lines)


def test_solve_graph_file(capsys, tmp_path):
    g = GraphInstance.from_edges(6, [(i, (i + 1) % 6) for i in range(6)])
    path = tmp_path / "g.json"
    path.write_text(g.to_json())
    code, doc = call(capsys, "solve", "--n", "6", "--S", "8", "--graph", str(path))
    assert code == 0 and doc["result"]["answer"] == 1


def test_solve_eps_capacity(capsys):
    code, doc = call(capsys, "solve", "--n", "1024", "--eps", "1/2", "--value", "1", "--seed", "1")
    assert code == 0
    assert doc["result"]["S"] == 32
    assert doc["result"]["correct"] == 1
    assert doc["result"]["rounds"] <= doc["result"]["schedule"]["round_bound"]


def test_complexity_commands(capsys):
    assert call(capsys, "complexity", "--family", "octc", "--n", "6", "--measure", "C")[1]["result"]["value"] == 3
    assert call(capsys, "complexity", "--family", "pmaj", "--N", "3", "--measure", "D")[1]["result"]["value"] == 3
    assert call(capsys, "complexity", "--measure", "deg", "--table", "0110")[1]["result"]["value"] == 2
    assert call(capsys, "complexity", "--measure", "D", "--table", "0001")[1]["result"]["value"] == 2
    doc = call(capsys, "complexity", "--family", "pmaj", "--N", "5", "--measure", "Cdelta")[1]
    assert doc["result"]["value"] == 3


def test_framework_command(capsys):
    code, doc = call(capsys, "framework", "--family", "pmaj", "--N", "5")
    assert code == 0 and doc["result"]["value"] == 2
    code, doc = call(capsys, "framework", "--family", "octc", "--n", "6")
    assert doc["result"]["witness"]["max_zero_degree"] == 18


def test_extract_command(capsys):
    code, doc = call(capsys, "extract", "--n", "6", "--S", "8")
    # N = 15 exceeds the default cap without --extended
    assert code == 3 and doc["status"] == "config-error"


def test_adversary_command(capsys, tmp_path):
    trace = tmp_path / "trace.jsonl"
    code, doc = call(capsys, "adversary", "--n", "64", "--k", "2", "--strategy", "greedy", "--seed", "1", "--trace", str(trace))
    assert code == 0
    assert doc["result"]["reached_phase2"] and doc["result"]["no_bound_holds"]
    assert len(trace.read_text().splitlines()) == doc["result"]["queries"]


def test_config_errors(capsys):
    code, doc = call(capsys, "solve", "--n", "6", "--k", "3", "--S", "8")
    assert code == 3 and doc["status"] == "config-error"
    code, doc = call(capsys, "bounds", "--n", "16")
    assert code == 3
    with pytest.raises(SystemExit) as err:
        cli.main(["solve", "--eps", "x/y"])
    assert err.value.code == 3


def test_violation_and_limit_codes(capsys, monkeypatch):
    def violate(args):
        raise ModelViolation("over budget", 2, (0,), "query-budget")

    def limit(args):
        raise ResourceLimit("too big", lower=1, upper=5)

    monkeypatch.setitem(cli.COMMANDS, "bounds", violate)
    code, doc = call(capsys, "bounds", "--n", "4", "--S", "2")
    assert code == 2 and doc["result"]["constraint"] == "query-budget"
    monkeypatch.setitem(cli.COMMANDS, "bounds", limit)
    code, doc = call(capsys, "bounds", "--n", "4", "--S", "2")
    assert code == 4 and doc["result"]["upper"] == 5


def test_out_file(capsys, tmp_path):
    out = tmp_path / "r.json"
    assert cli.main(["bounds", "--n", "64", "--S", "8", "--out", str(out)]) == 0
    assert capsys.readouterr().out == ""
    assert json.loads(out.read_text())["status"] == "ok"


def test_threads_env(capsys, monkeypatch):
    monkeypatch.setenv("AMPCLAB_THREADS", "3")
    assert call(capsys, "bounds", "--n", "64", "--S", "8")[1]["threads"] == 3


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "ampclab", "bounds", "--n", "64", "--S", "8"],
        capture_output=True, text=True, check=True,
    )
    assert json.loads(proc.stdout)["result"]["deterministic"]["n"] == 64
