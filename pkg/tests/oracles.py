"""Slow, obviously-correct reference implementations used only by the tests."""
from itertools import combinations

import networkx as nx
import numpy as np


def brute_supports(g):
    """Triangle count per edge by enumerating every node triple."""
    adj = [set(g.neighbors(u).tolist()) for u in range(g.n_nodes)]
    sup = {tuple(e): 0 for e in g.edges.tolist()}
    for a, b, c in combinations(range(g.n_nodes), 3):
        if b in adj[a] and c in adj[a] and c in adj[b]:
            for e in ((a, b), (a, c), (b, c)):
                sup[e] += 1
    return sup


def _supports_of(edge_set):
    adj = {}
    for u, v in edge_set:
        adj.setdefault(u, set()).add(v)
        adj.setdefault(v, set()).add(u)
    return {(u, v): len(adj[u] & adj[v]) for u, v in edge_set}


def brute_trussness(g):
    """For each k delete low-support edges, recounting from scratch, until stable."""
    edges = {tuple(e) for e in g.edges.tolist()}
    phi = {e: 2 for e in edges}
    k = 3
    alive = set(edges)
    while alive:
        current = set(alive)
        while True:
            sup = _supports_of(current)
            keep = {e for e in current if sup[e] >= k - 2}
            if keep == current:
                break
            current = keep
        for e in current:
            phi[e] = k
        alive = current
        k += 1
    return phi


def brute_key_members(g, q):
    """Definition-level answer: best k at q, q's component there, top trussness inside."""
    phi = brute_trussness(g)
    inc = [phi[tuple(sorted((q, v)))] for v in g.neighbors(q).tolist()]
    if not inc:
        return 2, {q}, 2, {q}
    k = max(inc)
    h = nx.Graph()
    h.add_node(q)
    h.add_edges_from(e for e, t in phi.items() if t >= k)
    comp = nx.node_connected_component(h, q)
    sub = g.__class__(g.n_nodes, [e for e in phi if e[0] in comp and e[1] in comp])
    phi_sub = brute_trussness(sub)
    k_hat = max(phi_sub.values())
    members = {x for e, t in phi_sub.items() if t == k_hat for x in e}
    return k, comp, k_hat, members


def to_networkx(g):
    h = nx.Graph()
    h.add_nodes_from(range(g.n_nodes))
    h.add_edges_from(map(tuple, g.edges.tolist()))
    return h


def stationary_by_eigen(P):
    """Left Perron vector of a dense stochastic matrix."""
    w, v = np.linalg.eig(np.asarray(P).T)
    i = int(np.argmin(np.abs(w - 1.0)))
    pi = np.real(v[:, i])
    return pi / pi.sum()
