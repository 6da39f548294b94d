"""Exact key-member search: truss decomposition, the two-step framework and the TCP index."""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .graph import EdgeValues, Graph, GraphError, compute_supports, induced_subgraph
from .walk import truss_bound_from_supports

INDEX_FORMAT = "cksearch-tcp-index"
INDEX_VERSION = 1


class TrussnessMap(EdgeValues):
    """phi(e): the largest k such that e survives in the k-truss."""

    @property
    def max_trussness(self) -> int:
        return int(self.values.max()) if len(self.values) else 2

    def edges_at_least(self, k: int) -> np.ndarray:
        return self.graph.edges[self.values >= k]


@dataclass(frozen=True)
class KeyMemberResult:
    k: int
    community: frozenset
    k_hat: int
    members: frozenset
    degenerate: bool = False

    def to_labels(self, g: Graph) -> dict:
        return {
            "k": self.k,
            "k_hat": self.k_hat,
            "community": sorted((g.label(u) for u in self.community), key=_label_key),
            "members": sorted((g.label(u) for u in self.members), key=_label_key),
            "degenerate": self.degenerate,
        }


def _label_key(label: str):
    return (0, int(label), "") if label.lstrip("-").isdigit() else (1, 0, label)


# ---------------------------------------------------------------------------
# peeling
# ---------------------------------------------------------------------------

def _mutable_adjacency(g: Graph) -> list[set]:
    return [set(s) for s in g.neighbor_sets]


def _edge_key(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


def truss_decompose(g: Graph) -> TrussnessMap:
    """Bottom-up peeling with support buckets.

    Level ``k`` removes every edge whose live support is below ``k - 2``;
    an edge removed at level ``k`` gets trussness ``k - 1``.
    """
    m = g.n_edges
    phi = np.full(m, 2, dtype=np.int64)
    if m == 0:
        return TrussnessMap(g, phi)
    sup = compute_supports(g).values.tolist()
    eid = {(u, v): i for i, (u, v) in enumerate(g.edges.tolist())}
    edges = g.edges.tolist()
    adj = _mutable_adjacency(g)

    buckets: dict[int, set[int]] = {}
    for e, s in enumerate(sup):
        buckets.setdefault(s, set()).add(e)
    queued = [False] * m
    alive = m
    k = 2
    while alive:
        k += 1
        stack = list(buckets.pop(k - 3, ()))
        for e in stack:
            queued[e] = True
        while stack:
            e = stack.pop()
            u, v = edges[e]
            phi[e] = k - 1
            alive -= 1
            a, b = (adj[u], adj[v]) if len(adj[u]) <= len(adj[v]) else (adj[v], adj[u])
            for w in [w for w in a if w in b]:
                for f in (eid[_edge_key(u, w)], eid[_edge_key(v, w)]):
                    if queued[f]:
                        continue
                    s = sup[f]
                    buckets[s].discard(f)
                    sup[f] = s - 1
                    if s - 1 < k - 2:
                        queued[f] = True
                        stack.append(f)
                    else:
                        buckets.setdefault(s - 1, set()).add(f)
            adj[u].discard(v)
            adj[v].discard(u)
    return TrussnessMap(g, phi)


def _peel(adj: list[set], sup: dict, threshold: int) -> list[tuple[int, int]]:
    """Remove edges with support < threshold in place until none remain.

    Returns the removed edges.
    """
    stack = [e for e, s in sup.items() if s < threshold]
    dead = set(stack)
    while stack:
        u, v = stack.pop()
        for w in adj[u] & adj[v]:
            for f in ((u, w) if u < w else (w, u), (v, w) if v < w else (w, v)):
                if f in dead:
                    continue
                sup[f] -= 1
                if sup[f] < threshold:
                    dead.add(f)
                    stack.append(f)
        adj[u].discard(v)
        adj[v].discard(u)
    for e in dead:
        del sup[e]
    return list(dead)


def _component(adj: list[set], q: int) -> set[int]:
    seen = {q}
    queue = deque([q])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return seen


def _initial_supports(g: Graph) -> dict:
    s = compute_supports(g)
    return {(u, v): x for (u, v), x in s.items()}


def max_truss_containing(g: Graph, q: int, direction: str = "bottomup") -> tuple[int, frozenset]:
    """Largest k such that q touches the k-truss, and q's component in it.

    ``direction`` picks ascending peeling from k=3 or descending search from
    the support bound ``max sup(e_q.) + 2``; both give the same answer.
    """
    g._check(q)
    if g.degree(q) == 0:
        return 2, frozenset([q])
    if direction == "bottomup":
        return _bottomup(g, q)
    if direction == "topdown":
        return _topdown(g, q)
    raise ValueError(f"unknown direction {direction!r}")


def _bottomup(g: Graph, q: int) -> tuple[int, frozenset]:
    adj = _mutable_adjacency(g)
    sup = _initial_supports(g)
    k = 3
    while True:
        removed = _peel(adj, sup, k - 2)
        if not adj[q]:
            # put the last level back: that is the (k-1)-truss
            for u, v in removed:
                adj[u].add(v)
                adj[v].add(u)
            return k - 1, frozenset(_component(adj, q))
        k += 1


def _topdown(g: Graph, q: int) -> tuple[int, frozenset]:
    full = _initial_supports(g)
    incident = [[] for _ in range(g.n_nodes)]
    for (u, v), s in full.items():
        incident[u].append(s)
        incident[v].append(s)
    # a node in the k-truss needs k-1 incident edges carrying k-2 triangles each
    bound = [truss_bound_from_supports(x) for x in incident]
    for k in range(bound[q], 2, -1):
        sub = {(u, v): 0 for (u, v), s in full.items()
               if s >= k - 2 and bound[u] >= k and bound[v] >= k}
        adj: list[set] = [set() for _ in range(g.n_nodes)]
        for u, v in sub:
            adj[u].add(v)
            adj[v].add(u)
        if not adj[q]:
            continue
        for u, v in sub:
            sub[(u, v)] = len(adj[u] & adj[v])
        _peel(adj, sub, k - 2)
        if adj[q]:
            return k, frozenset(_component(adj, q))
    return 2, frozenset(_component(_mutable_adjacency(g), q))


def key_members_exact(g: Graph, q: int, direction: str = "bottomup") -> KeyMemberResult:
    """Two-step exact search: best truss community of q, then its densest truss."""
    k, community = max_truss_containing(g, q, direction)
    if g.degree(q) == 0:
        return KeyMemberResult(2, community, 2, community, degenerate=True)
    sub = induced_subgraph(g, community)
    phi = truss_decompose(sub)
    k_hat = phi.max_trussness
    top = phi.edges_at_least(k_hat)
    members = frozenset(sub.parent_ids[np.unique(top)].tolist())
    return KeyMemberResult(k, community, k_hat, members, degenerate=k == 2)


def key_members_from_trussness(g: Graph, phi: TrussnessMap, q: int) -> KeyMemberResult:
    """Same answer as :func:`key_members_exact`, reusing a global decomposition."""
    g._check(q)
    if g.degree(q) == 0:
        c = frozenset([q])
        return KeyMemberResult(2, c, 2, c, degenerate=True)
    k = int(phi.incident(q).max())
    community = _threshold_component(g, phi, [q], k)
    k_hat, top_nodes = _top_level(g, phi, community, k)
    return KeyMemberResult(k, community, k_hat, top_nodes, degenerate=k == 2)


def _threshold_component(g: Graph, phi: TrussnessMap, starts, k: int) -> frozenset:
    seen = set(starts)
    queue = deque(seen)
    while queue:
        u = queue.popleft()
        nbrs = g.neighbors(u)
        vals = phi.incident(u)
        for v in nbrs[vals >= k].tolist():
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return frozenset(seen)


def _top_level(g: Graph, phi: TrussnessMap, community: frozenset, k: int) -> tuple[int, frozenset]:
    k_hat = k
    for u in community:
        if g.degree(u):
            k_hat = max(k_hat, int(phi.incident(u).max()))
    members = set()
    for u in community:
        if g.degree(u) and (phi.incident(u) == k_hat).any():
            members.add(u)
    return k_hat, frozenset(members)


# ---------------------------------------------------------------------------
# TCP index
# ---------------------------------------------------------------------------

class _DisjointSet:
    def __init__(self):
        self.parent: dict[int, int] = {}

    def find(self, x: int) -> int:
        parent = self.parent
        parent.setdefault(x, x)
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[ra] = rb
        return True


class TCPIndex:
    """Per-node maximum spanning forests of ego networks.

    In the forest of ``u`` an ego edge ``(v, w)`` is weighted by the weakest
    trussness of the triangle ``u, v, w``, so a forest edge of weight ``>= k``
    certifies that both ``u-v`` and ``u-w`` lie in the k-truss.
    """

    def __init__(self, trussness: TrussnessMap, forests: list[np.ndarray]):
        self.trussness = trussness
        self.graph = trussness.graph
        self.forests = forests  # forests[u]: (n, 3) int array of (v, w, weight)

    def forest(self, u: int) -> np.ndarray:
        return self.forests[u]

    def neighbors_at_level(self, u: int, k: int) -> set[int]:
        f = self.forests[u]
        hit = f[f[:, 2] >= k]
        return set(hit[:, 0].tolist()) | set(hit[:, 1].tolist())

    # -- persistence -----------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "format": INDEX_FORMAT,
            "version": INDEX_VERSION,
            "n_nodes": self.graph.n_nodes,
            "n_edges": self.graph.n_edges,
            "trussness": self.trussness.values.tolist(),
            "forests": [f.tolist() for f in self.forests],
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), separators=(",", ":")))

    @classmethod
    def from_dict(cls, data: dict, g: Graph) -> "TCPIndex":
        if data.get("format") != INDEX_FORMAT:
            raise IndexFormatError("not a TCP index file")
        if data.get("version") != INDEX_VERSION:
            raise IndexFormatError(f"unsupported index version {data.get('version')!r}")
        if data.get("n_nodes") != g.n_nodes or data.get("n_edges") != g.n_edges:
            raise IndexFormatError(
                f"index built for {data.get('n_nodes')} nodes / {data.get('n_edges')} edges, "
                f"graph has {g.n_nodes} / {g.n_edges}")
        phi = TrussnessMap(g, data["trussness"])
        forests = [np.asarray(f, dtype=np.int64).reshape(-1, 3) for f in data["forests"]]
        if len(forests) != g.n_nodes:
            raise IndexFormatError("forest section does not match node count")
        return cls(phi, forests)

    @classmethod
    def load(cls, path, g: Graph) -> "TCPIndex":
        return cls.from_dict(json.loads(Path(path).read_text()), g)


class IndexFormatError(GraphError):
    pass


def build_tcp_index(g: Graph, trussness: TrussnessMap | None = None) -> TCPIndex:
    phi = truss_decompose(g) if trussness is None else trussness
    nbr_sets = g.neighbor_sets
    forests = []
    for u in range(g.n_nodes):
        nbrs = g.neighbors(u).tolist()
        w_u = dict(zip(nbrs, phi.incident(u).tolist()))
        ego = []
        for v in nbrs:
            for w in nbr_sets[v] & nbr_sets[u]:
                if w > v:
                    weight = min(w_u[v], w_u[w], phi[v, w])
                    ego.append((-weight, v, w))
        ego.sort()
        dsu = _DisjointSet()
        kept = [(v, w, -nw) for nw, v, w in ego if dsu.union(v, w)]
        forests.append(np.asarray(kept, dtype=np.int64).reshape(-1, 3))
    return TCPIndex(phi, forests)


def _traverse(idx: TCPIndex, starts: Iterable[int], k: int) -> set[int]:
    seen = set(starts)
    stack = list(seen)
    while stack:
        x = stack.pop()
        for y in idx.neighbors_at_level(x, k):
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return seen


def tcp_query(idx: TCPIndex, g: Graph, q: int) -> KeyMemberResult:
    g._check(q)
    phi = idx.trussness
    if g.degree(q) == 0:
        c = frozenset([q])
        return KeyMemberResult(2, c, 2, c, degenerate=True)
    k = int(phi.incident(q).max())
    if k >= 3:
        community = frozenset(_traverse(idx, [q], k))
    else:
        # triangle-free edges never appear in ego forests; every edge is in the 2-truss
        community = _threshold_component(g, phi, [q], 2)

    k_hat = k
    for u in community:
        if g.degree(u):
            k_hat = max(k_hat, int(phi.incident(u).max()))
    if k_hat < 3:
        members = frozenset(u for u in community if g.degree(u))
        return KeyMemberResult(k, community, k_hat, members, degenerate=True)
    members: set[int] = set()
    for u in sorted(community):
        if u in members or not (phi.incident(u) == k_hat).any():
            continue
        members |= _traverse(idx, [u], k_hat)
    return KeyMemberResult(k, community, k_hat, frozenset(members), degenerate=k == 2)
