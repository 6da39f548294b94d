import csv
import io
import json

import pytest

from cksearch import Graph, key_members_exact, truss_decompose
from cksearch.evaluation import (ConfigError, ExperimentConfig, density, diameter,
                                 generate_planted_truss, is_connected, parse_algorithm,
                                 precision_recall_f1, run_experiment, sample_queries, write_report)

from conftest import complete_graph, fig5_graph


def test_metrics():
    assert precision_recall_f1([1, 2, 3, 4], [1, 2, 3, 5]) == (0.75, 0.75, 0.75)
    assert precision_recall_f1([1], [1, 2]) == (1.0, 0.5, pytest.approx(2 / 3))
    assert precision_recall_f1([7], [1]) == (0.0, 0.0, 0.0)
    with pytest.raises(ConfigError):
        precision_recall_f1([1], [])


def test_diameter_and_density():
    assert diameter(complete_graph(6)) == 1
    assert diameter(Graph(4, [(0, 1), (1, 2), (2, 3)])) == 3
    assert density(complete_graph(6)) == 2.5
    assert density(Graph(3, [])) == 0.0
    split = Graph(5, [(0, 1), (1, 2), (3, 4)])
    assert not is_connected(split) and diameter(split) == 2
    with pytest.raises(ConfigError):
        density(Graph(0, []))


def test_key_member_density_bound(fig5):
    res = key_members_exact(fig5, fig5.node("u2"))
    from cksearch import induced_subgraph
    sub = induced_subgraph(fig5, res.members)
    assert density(sub) >= (res.k_hat - 1) / 2
    assert diameter(sub) == 1


def test_generator_deterministic():
    a, pa = generate_planted_truss(60, 0.05, 6, 10, seed=3)
    b, pb = generate_planted_truss(60, 0.05, 6, 10, seed=3)
    assert pa == pb and (a.edges == b.edges).all()
    c, _ = generate_planted_truss(60, 0.05, 6, 10, seed=4)
    assert c.n_edges != a.n_edges or not (c.edges == a.edges).all()


def test_generator_clique_in_empty_background():
    g, planted = generate_planted_truss(5, 0.0, 4, 0, seed=0)
    assert g.n_nodes == 9 and g.n_edges == 6
    assert {u for e in g.edges.tolist() for u in e} == set(planted)


def test_generator_planted_is_key_members():
    g, planted = generate_planted_truss(200, 0.02, 10, 20, seed=0)
    phi = truss_decompose(g)
    assert phi.max_trussness == 10
    q = sorted(planted)[0]
    assert key_members_exact(g, q).members == planted


def test_generator_errors():
    with pytest.raises(ConfigError):
        generate_planted_truss(10, 0.1, 3, 0, 0)
    with pytest.raises(ConfigError):
        generate_planted_truss(10, 1.5, 5, 0, 0)


def test_parse_algorithm():
    assert parse_algorithm("rw-tb") == ("rw", "tb")
    assert parse_algorithm("rw-basic") == ("rw", "basic")
    assert parse_algorithm("RW-avg") == ("rw", "avg")
    assert parse_algorithm("skew") == ("rw", "skew")
    assert parse_algorithm("exact-tcp") == ("exact", "tcp")
    assert parse_algorithm("exact") == ("exact", "bottomup")
    with pytest.raises(ConfigError):
        parse_algorithm("exact-nope")


def planted_cfg(**kw):
    base = dict(planted={"n_background": 100, "p_background": 0.03, "clique_size": 8,
                         "attach_edges": 10, "seed": 1},
                query_count=8, query_seed=2, timing=False)
    base.update(kw)
    return ExperimentConfig(**base)


def test_exact_self_comparison():
    rep = run_experiment(planted_cfg(algorithms=["exact", "exact-topdown", "exact-tcp"]))
    assert len(rep.rows) == 24 and rep.failed == 0
    assert all(row["precision"] == row["recall"] == 1.0 for row in rep.rows)


def test_fraction_halves_recall():
    cfg = planted_cfg(algorithms=["rw-tb"], fraction=50)
    rep = run_experiment(cfg)
    g, planted = generate_planted_truss(**{k: cfg.planted[k] for k in
                                           ("n_background", "p_background", "clique_size",
                                            "attach_edges", "seed")})
    for row in rep.rows:
        q = g.node(row["query_id"])
        truth = key_members_exact(g, q).members
        if row["precision"] == 1.0:
            # n = ceil(f * |truth|) hits out of |truth|
            assert row["recall"] == pytest.approx(row["n"] / len(truth))
        if truth == planted:
            assert row["recall"] == pytest.approx(0.5, abs=1e-12)


def test_equal_sizes_give_equal_metrics():
    rep = run_experiment(planted_cfg(algorithms=["basic", "avg", "skew", "tb"]))
    for row in rep.rows:
        if "truncated" not in row["flags"]:
            assert row["precision"] == row["recall"] == row["f1"]


def test_csv_deterministic():
    cfg = planted_cfg(algorithms=["tb", "exact"])
    a = run_experiment(cfg).to_csv()
    assert a == run_experiment(cfg).to_csv()
    rows = list(csv.DictReader(io.StringIO(a)))
    assert list(rows[0]) == ["query_id", "algo", "variant", "m", "r", "alpha", "n", "precision",
                             "recall", "f1", "diameter", "density", "runtime_ms", "flags"]


def test_query_sampling_only_triangle_nodes(fig5):
    qs = sample_queries(fig5, 100, 0)
    assert len(qs) == fig5.n_nodes
    with pytest.raises(ConfigError):
        sample_queries(Graph(3, [(0, 1)]), 1, 0)


def test_config_from_dict(tmp_path):
    (tmp_path / "g.txt").write_text("1 2\n2 3\n3 1\n")
    d = {"graph": "g.txt", "queries": {"ids": ["1"]}, "algorithms": ["exact"],
         "params": {"m": 3}}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(d))
    cfg = ExperimentConfig.load(path)
    assert cfg.m == 3 and cfg.graph == str(tmp_path / "g.txt")
    rep = run_experiment(cfg)
    assert rep.rows[0]["precision"] == 1.0
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"graph": "x", "queries": {"ids": [1]}, "bogus": 1})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"queries": {"ids": [1]}})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"graph": "x", "queries": {"ids": [1]},
                                    "params": {"r": 0}})


def test_write_report_with_figures(tmp_path):
    rep = run_experiment(planted_cfg(algorithms=["tb", "exact"], timing=True, query_count=4))
    paths = write_report(rep, tmp_path)
    assert paths["csv"].read_text().startswith("query_id,")
    summary = json.loads(paths["summary"].read_text())
    assert summary["density_formula"] == "|E|/|V|"
    assert (tmp_path / "figures" / "precision.png").stat().st_size > 0
    assert (tmp_path / "figures" / "runtime.png").stat().st_size > 0
