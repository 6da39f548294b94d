import json

import networkx as nx
import numpy as np
import pytest

from cksearch import (Graph, build_tcp_index, key_members_exact, key_members_from_trussness,
                      max_truss_containing, tcp_query, truss_decompose)
from cksearch.truss import IndexFormatError, TCPIndex

from conftest import complete_graph, k6_pendant, random_graph
from oracles import brute_key_members, brute_trussness, to_networkx


def test_clique_trussness():
    for h in range(2, 8):
        phi = truss_decompose(complete_graph(h))
        assert set(phi.values.tolist()) == {h}


def test_fig5_trussness(fig5):
    phi = truss_decompose(fig5)
    N = fig5.node
    assert phi[N("u1"), N("u3")] == 6
    assert phi[N("u1"), N("u2")] == 3
    assert phi[N("u2"), N("w4")] == 3
    assert phi.max_trussness == 6


def test_fig5_key_members(fig5):
    N = fig5.node
    for method in ("bottomup", "topdown"):
        res = key_members_exact(fig5, N("u2"), method)
        assert res.k == 3 and res.k_hat == 6
        assert res.community == frozenset(range(fig5.n_nodes))
        assert {fig5.label(u) for u in res.members} == {"u1", "u3", "u4", "u5", "u6", "u7"}


def test_triangle_free_query_gets_component():
    g = Graph(5, [(0, 1), (1, 2), (3, 4)])
    res = key_members_exact(g, 0)
    assert res.k == 2 and res.community == frozenset({0, 1, 2})
    assert res.k_hat == 2 and res.members == frozenset({0, 1, 2})


def test_isolated_query_is_degenerate():
    g = Graph(3, [(1, 2)])
    res = key_members_exact(g, 0)
    assert res.degenerate and res.members == frozenset({0})
    idx = build_tcp_index(g)
    assert tcp_query(idx, g, 0).members == frozenset({0})


def test_two_top_blocks_inside_one_community():
    # two K5s joined by a chain of triangles: both K5 blocks are key members
    pairs = [(i, j) for i in range(5) for j in range(i + 1, 5)]
    pairs += [(i + 5, j + 5) for i in range(5) for j in range(i + 1, 5)]
    pairs += [(4, 10), (4, 11), (10, 11), (11, 5), (10, 5)]
    g = Graph(12, pairs)
    res = key_members_exact(g, 10)
    assert res.k == 3 and res.k_hat == 5
    assert res.members == frozenset(range(10))
    idx = build_tcp_index(g)
    assert tcp_query(idx, g, 10).members == res.members


@pytest.mark.parametrize("seed", range(60))
def test_decomposition_matches_oracles(seed):
    g = random_graph(25, (0.2, 0.3, 0.4)[seed % 3], seed)
    phi = truss_decompose(g)
    assert dict(phi.items()) == brute_trussness(g)
    nxg = to_networkx(g)
    for k in range(3, phi.max_trussness + 2):
        ours = {tuple(e) for e in phi.edges_at_least(k).tolist()}
        theirs = {tuple(sorted(e)) for e in nx.k_truss(nxg, k).edges()}
        assert ours == theirs


@pytest.mark.parametrize("seed", range(30))
def test_query_methods_agree(seed):
    g = random_graph(22, 0.3, 100 + seed)
    phi = truss_decompose(g)
    idx = build_tcp_index(g, phi)
    for q in range(g.n_nodes):
        a = key_members_exact(g, q, "bottomup")
        b = key_members_exact(g, q, "topdown")
        c = tcp_query(idx, g, q)
        d = key_members_from_trussness(g, phi, q)
        assert a == b == c == d
        if g.degree(q):
            k, comm, k_hat, members = brute_key_members(g, q)
            assert (a.k, set(a.community), a.k_hat, set(a.members)) == (k, comm, k_hat, members)


def test_max_truss_directions(fig5):
    N = fig5.node
    assert max_truss_containing(fig5, N("u3"), "bottomup") == \
           max_truss_containing(fig5, N("u3"), "topdown")
    k, comm = max_truss_containing(fig5, N("u3"))
    assert k == 6 and len(comm) == 6
    with pytest.raises(ValueError):
        max_truss_containing(fig5, 0, "sideways")


def test_index_forest_is_max_spanning(fig5):
    phi = truss_decompose(fig5)
    idx = build_tcp_index(fig5, phi)
    N = fig5.node
    u = N("u1")
    ego = nx.Graph()
    for v in fig5.neighbors(u).tolist():
        for w in fig5.neighbors(u).tolist():
            if v < w and fig5.has_edge(v, w):
                ego.add_edge(v, w, weight=min(phi[u, v], phi[u, w], phi[v, w]))
    ref = nx.maximum_spanning_tree(ego).size(weight="weight")
    assert idx.forest(u)[:, 2].sum() == ref
    assert idx.neighbors_at_level(N("u3"), 6) == {N(x) for x in ("u1", "u4", "u5", "u6", "u7")}


def test_index_persist_round_trip(tmp_path):
    g = random_graph(30, 0.3, 7)
    idx = build_tcp_index(g)
    path = tmp_path / "idx.json"
    idx.save(path)
    back = TCPIndex.load(path, g)
    for q in range(g.n_nodes):
        assert tcp_query(back, g, q) == tcp_query(idx, g, q)


def test_index_rejects_other_graph(tmp_path):
    idx = build_tcp_index(random_graph(30, 0.3, 7))
    path = tmp_path / "idx.json"
    idx.save(path)
    with pytest.raises(IndexFormatError):
        TCPIndex.load(path, random_graph(31, 0.3, 7))
    data = json.loads(path.read_text())
    data["format"] = "other"
    path.write_text(json.dumps(data))
    with pytest.raises(IndexFormatError):
        TCPIndex.load(path, random_graph(30, 0.3, 7))


def test_pendant_outside_key_members():
    g = k6_pendant()
    res = key_members_exact(g, g.node("a"))
    assert {g.label(u) for u in res.members} == set("abcdef")
    assert res.to_labels(g)["members"] == list("abcdef")
