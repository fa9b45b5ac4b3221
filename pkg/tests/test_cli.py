from __future__ import annotations

import json

import pytest

from drengine.cli import run
from drengine.pixton import TautExpression, dr_cycle

def call(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip() else None), err


@pytest.fixture
def loop_json(loop):
    return json.dumps(loop.to_json())


def test_graphs(capsys):
    code, doc, _ = call(capsys, "graphs", "--g", "1", "--n", "2")
    assert code == 0 and doc["count"] == 5
    assert sorted(g["automorphisms"] for g in doc["graphs"]) == [1, 1, 2, 2, 2]
    assert len({g["canonical"] for g in doc["graphs"]}) == 5


def test_sum_and_ct(capsys, loop_json):
    code, doc, _ = call(capsys, "sum", "--graph", loop_json, "--A", "0", "--r", "7", "--Q", "x_2*x_3")
    assert code == 0 and doc["value"] == {"num": "8", "den": "1"}
    code, doc, _ = call(capsys, "ct", "--graph", loop_json, "--A", "0", "--Q", "x_2*x_3")
    assert code == 0 and doc["value"] == {"num": "-1", "den": "6"}
    assert doc["certificate"]["excluded_moduli"] == [2, 3]
    code, doc2, _ = call(capsys, "sum", "--graph", loop_json, "--A", "0", "--r", "ct", "--Q", "x_2*x_3")
    assert doc2["value"] == doc["value"]


def test_request_document(capsys, loop):
    req = json.dumps({"graph": loop.to_json(), "A": [0], "k": 0, "r": 5, "Q": "x_2*x_3"})
    code, doc, _ = call(capsys, "sum", "--request", req)
    assert code == 0 and doc["value"] == {"num": "4", "den": "1"}


def test_graph_file_and_out(capsys, tmp_path, loop_json):
    gfile = tmp_path / "g.json"
    gfile.write_text(loop_json)
    out = tmp_path / "res.json"
    code, doc, _ = call(capsys, "ct", "--graph", str(gfile), "--A", "0", "--out", str(out))
    assert code == 0 and doc is None
    assert json.loads(out.read_text())["value"] == {"num": "1", "den": "1"}


def test_spoly(capsys, banana):
    code, doc, _ = call(capsys, "spoly", "--graph", json.dumps(banana.to_json()), "--Q", "x_3*x_4", "--A=2,-2")
    assert code == 0
    assert doc["twisted"]["variables"] == ["a_1", "a_2", "k"]
    assert doc["k0"]["lattice"]
    assert doc["value_at_A"]["A"] == [2, -2]


def test_dr_round_trip(capsys):
    code, doc, _ = call(capsys, "dr", "--g", "1", "--n", "2", "--A=3,-1", "--k", "1")
    assert code == 0
    assert TautExpression.from_json(doc) == dr_cycle(1, 2, [3, -1], 1)
    code, doc2, _ = call(capsys, "dr", "--g", "1", "--n", "2", "--A=3,-1")
    assert doc2 == doc


def test_drpoly(capsys):
    code, doc, _ = call(capsys, "drpoly", "--g", "1", "--n", "2", "--method", "recursion")
    assert code == 0 and doc["method"] == "recursion"
    assert doc["lattice"]["variables"] == ["a_1", "k"]


def test_threads_deterministic(capsys):
    _, a, _ = call(capsys, "dr", "--g", "2", "--n", "1", "--A", "3", "--k", "1", "--threads", "1")
    _, b, _ = call(capsys, "dr", "--g", "2", "--n", "1", "--A", "3", "--k", "1", "--threads", "8")
    assert a == b


def test_threads_from_environment(capsys, monkeypatch, loop_json):
    monkeypatch.setenv("DRENGINE_THREADS", "4")
    code, doc, _ = call(capsys, "sum", "--graph", loop_json, "--A", "0", "--r", "9", "--Q", "x_2*x_3")
    assert code == 0 and doc["value"] == {"num": "40", "den": "3"}


def test_domain_errors(capsys, loop_json):
    code, doc, err = call(capsys, "sum", "--graph", loop_json, "--A", "1", "--r", "5")
    assert code == 2 and doc is None and "domain error" in err
    code, _, _ = call(capsys, "ct", "--graph", loop_json, "--A", "0", "--Q", "x_1")
    assert code == 2
    code, _, _ = call(capsys, "graphs", "--g", "1")
    assert code == 2
    code, _, _ = call(capsys, "sum", "--graph", loop_json, "--A", "0", "--r", "seven")
    assert code == 2
    code, _, _ = call(capsys, "dr", "--g", "1", "--n", "2", "--A=1,0")
    assert code == 2
    code, _, _ = call(capsys, "sum", "--graph", "/nonexistent.json", "--A", "0", "--r", "3")
    assert code == 2


def test_certification_error(capsys):
    code, _, err = call(capsys, "drpoly", "--g", "1", "--n", "2", "--max-degree", "1")
    assert code == 3 and "certification" in err


def test_internal_error(capsys, monkeypatch):
    import drengine.cli as cli

    def boom(*a, **kw):
        raise RuntimeError("boom")

    monkeypatch.setattr(cli, "enumerate_stable_graphs", boom)
    code, _, err = call(capsys, "graphs", "--g", "1", "--n", "1")
    assert code == 1 and "internal error" in err
