import json

import pytest

from cksearch import cli
from cksearch.graph import serialize_edge_list

from conftest import fig5_graph


@pytest.fixture
def fig5_file(tmp_path):
    path = tmp_path / "fig5.txt"
    path.write_text(serialize_edge_list(fig5_graph()))
    return path


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    return code, capsys.readouterr()


def test_query_json(capsys, fig5_file):
    code, out = run(capsys, "query", "--graph", fig5_file, "--q", "u2")
    assert code == 0
    data = json.loads(out.out)
    assert set(data["members"]) == {"u1", "u3", "u4", "u5", "u6", "u7"}
    assert data["params"]["n"] == 6


def test_query_csv_and_trace(capsys, fig5_file, tmp_path):
    fig = tmp_path / "trace.png"
    code, out = run(capsys, "query", "--graph", fig5_file, "--q", "u2,w1", "--n", "3",
                    "--variant", "avg", "--format", "csv", "--trace-fig", fig)
    assert code == 0
    lines = out.out.strip().splitlines()
    assert lines[0] == "rank,node,prob" and len(lines) == 4
    assert fig.stat().st_size > 0


def test_exact_methods(capsys, fig5_file, tmp_path):
    results = []
    for method in ("bottomup", "topdown", "tcp"):
        code, out = run(capsys, "exact", "--graph", fig5_file, "--q", "w2", "--method", method)
        assert code == 0
        data = json.loads(out.out)
        results.append(data["members"])
    assert results[0] == results[1] == results[2] == ["u1", "u3", "u4", "u5", "u6", "u7"]


def test_index_build_and_query(capsys, fig5_file, tmp_path):
    idx = tmp_path / "idx.json"
    code, out = run(capsys, "index", "build", "--graph", fig5_file, "--out", idx)
    assert code == 0 and json.loads(out.out)["max_trussness"] == 6
    code, out = run(capsys, "index", "query", "--graph", fig5_file, "--index", idx,
                    "--q", "u3", "--format", "csv")
    assert code == 0 and out.out.startswith("query,node,role")
    code, out = run(capsys, "exact", "--graph", fig5_file, "--q", "u3", "--method", "tcp",
                    "--index", idx)
    assert code == 0


def test_gen_then_eval(capsys, tmp_path):
    gpath = tmp_path / "planted.txt"
    code, _ = run(capsys, "gen", "--background", 80, "--clique", 7, "--attach", 8,
                  "--seed", 2, "--out", gpath)
    assert code == 0
    assert "# planted nodes:" in gpath.read_text()
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"graph": str(gpath), "queries": {"random": 5, "seed": 1},
                               "algorithms": ["tb", "exact-tcp"], "timing": False}))
    out_dir = tmp_path / "report"
    code, out = run(capsys, "eval", "--config", cfg, "--out", out_dir)
    assert code == 0
    assert (out_dir / "results.csv").exists() and (out_dir / "figures" / "precision.png").exists()
    first = (out_dir / "results.csv").read_text()
    code, _ = run(capsys, "eval", "--config", cfg, "--out", out_dir, "--no-figures")
    assert (out_dir / "results.csv").read_text() == first


def test_eval_partial_failure(capsys, tmp_path, monkeypatch):
    from cksearch import evaluation
    real = evaluation.cks_random_walk

    def flaky(g, Q, params=None, trace=False):
        if list(Q)[0] % 2:
            raise RuntimeError("boom")
        return real(g, Q, params, trace)

    monkeypatch.setattr(evaluation, "cks_random_walk", flaky)
    gpath = tmp_path / "g.txt"
    gpath.write_text(serialize_edge_list(fig5_graph()))
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"graph": str(gpath), "queries": {"random": 15},
                               "algorithms": ["tb"], "timing": False}))
    code, out = run(capsys, "eval", "--config", cfg)
    assert code == 4
    assert "error:RuntimeError" in out.out


def test_analyze_commands(capsys, fig5_file, tmp_path):
    code, out = run(capsys, "analyze", "chain", "--gamma", 1, "--mu", 1, "--beta", 1,
                    "--eta", 1)
    data = json.loads(out.out)
    assert code == 0 and sorted(data["eigenvalues"]) == pytest.approx([-0.5, -0.5, 1.0])
    assert len(data["extended"]) == 6
    code, out = run(capsys, "analyze", "chain", "--graph", fig5_file, "--q", "u2")
    assert code == 0
    code, out = run(capsys, "analyze", "bayes", "--graph", fig5_file, "--q", "u2")
    assert code == 0
    data = json.loads(out.out)
    assert len(data["nodes"]) == 15
    table = tmp_path / "t.csv"
    table.write_text("a,b\n1,1\n2,3\n3,2\n")
    code, out = run(capsys, "analyze", "pcc", "--csv", table, "--x", "a", "--y", "b")
    assert code == 0 and json.loads(out.out)["r"] == pytest.approx(0.5)


def test_exit_codes(capsys, fig5_file, tmp_path):
    assert run(capsys, "query", "--graph", tmp_path / "missing.txt", "--q", "1")[0] == 3
    assert run(capsys, "query", "--graph", fig5_file, "--q", "nobody")[0] == 3
    assert run(capsys, "query", "--graph", fig5_file, "--q", "u2", "--r", "0")[0] == 2
    assert run(capsys, "analyze", "chain", "--gamma", 1)[0] == 2
    bad = tmp_path / "bad.txt"
    bad.write_text("1 2 3\n")
    assert run(capsys, "exact", "--graph", bad, "--q", "1")[0] == 3
    assert run(capsys, "eval", "--config", tmp_path / "nope.json")[0] == 2
    with pytest.raises(SystemExit) as exc:
        cli.main(["query", "--graph", str(fig5_file), "--q", "u2", "--variant", "nope"])
    assert exc.value.code == 2
