"""Immutable undirected simple graphs, edge-list I/O, supports and bounded subgraphs."""
from __future__ import annotations

from collections import deque
from functools import cached_property
from typing import Iterable, Sequence, TextIO

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components as _components


class GraphError(ValueError):
    pass


class EdgeListParseError(GraphError):
    def __init__(self, lineno: int, line: str):
        super().__init__(f"line {lineno}: expected two node labels, got {line.strip()!r}")
        self.lineno = lineno


class NodeIdMap:
    """Bijection between external node labels and dense internal ids."""

    def __init__(self, labels: Sequence[str]):
        self._labels = tuple(str(x) for x in labels)
        self._ids = {lab: i for i, lab in enumerate(self._labels)}
        if len(self._ids) != len(self._labels):
            raise GraphError("node labels must be unique")

    def __len__(self) -> int:
        return len(self._labels)

    @property
    def labels(self) -> tuple[str, ...]:
        return self._labels

    def to_id(self, label) -> int:
        try:
            return self._ids[str(label)]
        except KeyError:
            raise KeyError(f"unknown node label {label!r}") from None

    def to_label(self, node: int) -> str:
        return self._labels[node]

    def __eq__(self, other) -> bool:
        return isinstance(other, NodeIdMap) and self._labels == other._labels

    def __repr__(self) -> str:
        return f"NodeIdMap({len(self)} labels)"


def _sort_labels(labels: Iterable[str]) -> list[str]:
    labels = set(labels)
    try:
        return sorted(labels, key=int)
    except ValueError:
        return sorted(labels)


class Graph:
    """Undirected simple graph in CSR layout.

    Neighbor arrays are sorted ascending, node ids run over ``0..n-1`` and
    every edge has a dense id given by its rank among canonical ``(u, v)``
    pairs with ``u < v``.
    """

    def __init__(self, n_nodes: int, edges=(), labels: Sequence[str] | None = None,
                 parent_ids: Sequence[int] | None = None):
        n_nodes = int(n_nodes)
        pairs = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if pairs.size and (pairs.min() < 0 or pairs.max() >= n_nodes):
            raise GraphError("edge endpoint out of range")
        pairs = pairs[pairs[:, 0] != pairs[:, 1]]
        pairs = np.sort(pairs, axis=1)
        keys = np.unique(pairs[:, 0] * max(n_nodes, 1) + pairs[:, 1])
        pairs = np.column_stack([keys // max(n_nodes, 1), keys % max(n_nodes, 1)])
        self._n = n_nodes
        self._edges = pairs
        self._edges.flags.writeable = False

        m = len(pairs)
        src = np.concatenate([pairs[:, 0], pairs[:, 1]])
        dst = np.concatenate([pairs[:, 1], pairs[:, 0]])
        eid = np.concatenate([np.arange(m), np.arange(m)])
        order = np.lexsort((dst, src))
        self._indices = dst[order]
        self._edge_ids = eid[order]
        self._indptr = np.zeros(n_nodes + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n_nodes), out=self._indptr[1:])
        for arr in (self._indices, self._edge_ids, self._indptr):
            arr.flags.writeable = False

        if labels is None:
            labels = [str(i) for i in range(n_nodes)]
        if len(labels) != n_nodes:
            raise GraphError("one label per node is required")
        self._id_map = NodeIdMap(labels)
        self._parent_ids = None if parent_ids is None else np.asarray(parent_ids, dtype=np.int64)

    # -- basic accessors -------------------------------------------------
    @property
    def n_nodes(self) -> int:
        return self._n

    @property
    def n_edges(self) -> int:
        return len(self._edges)

    @property
    def edges(self) -> np.ndarray:
        """Canonical ``(u, v)`` pairs, ``u < v``, ascending; row index is the edge id."""
        return self._edges

    @property
    def indptr(self) -> np.ndarray:
        return self._indptr

    @property
    def indices(self) -> np.ndarray:
        return self._indices

    @property
    def id_map(self) -> NodeIdMap:
        return self._id_map

    @property
    def labels(self) -> tuple[str, ...]:
        return self._id_map.labels

    @property
    def parent_ids(self) -> np.ndarray:
        """Ids of these nodes in the graph this one was cut from (identity for roots)."""
        if self._parent_ids is None:
            return np.arange(self._n)
        return self._parent_ids

    def neighbors(self, u: int) -> np.ndarray:
        self._check(u)
        return self._indices[self._indptr[u]:self._indptr[u + 1]]

    def incident_edge_ids(self, u: int) -> np.ndarray:
        """Edge ids aligned with :meth:`neighbors`."""
        self._check(u)
        return self._edge_ids[self._indptr[u]:self._indptr[u + 1]]

    def degree(self, u: int) -> int:
        self._check(u)
        return int(self._indptr[u + 1] - self._indptr[u])

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self._indptr)

    def edge_id(self, u: int, v: int) -> int:
        nbrs = self.neighbors(u)
        i = int(np.searchsorted(nbrs, v))
        if i == len(nbrs) or nbrs[i] != v:
            raise KeyError(f"no edge ({u}, {v})")
        return int(self._edge_ids[self._indptr[u] + i])

    def has_edge(self, u: int, v: int) -> bool:
        try:
            self.edge_id(u, v)
        except (KeyError, IndexError):
            return False
        return True

    @cached_property
    def neighbor_sets(self) -> tuple[frozenset, ...]:
        return tuple(frozenset(self.neighbors(u).tolist()) for u in range(self._n))

    @cached_property
    def adjacency_matrix(self) -> sp.csr_matrix:
        data = np.ones(len(self._indices), dtype=np.int64)
        return sp.csr_matrix((data, self._indices, self._indptr), shape=(self._n, self._n))

    def node(self, label) -> int:
        return self._id_map.to_id(label)

    def label(self, u: int) -> str:
        return self._id_map.to_label(u)

    def _check(self, u) -> None:
        if not 0 <= u < self._n:
            raise KeyError(f"unknown node id {u}")

    def __repr__(self) -> str:
        return f"Graph(n_nodes={self._n}, n_edges={self.n_edges})"

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple], labels: Sequence[str] | None = None) -> "Graph":
        """Build from labelled pairs; labels are remapped to dense ids."""
        pairs = [(str(a), str(b)) for a, b in pairs]
        if labels is None:
            labels = _sort_labels(x for p in pairs for x in p)
        ids = NodeIdMap(labels)
        edges = [(ids.to_id(a), ids.to_id(b)) for a, b in pairs]
        return cls(len(ids), edges, labels=ids.labels)


def load_edge_list(source: str | TextIO) -> tuple[Graph, NodeIdMap]:
    """Parse whitespace-separated edge-list text; ``#`` lines are comments.

    ``source`` is either the text itself or an open file. Self-loops and
    duplicate edges (in either direction) are dropped.
    """
    lines = source.splitlines() if isinstance(source, str) else source
    pairs = []
    for lineno, line in enumerate(lines, 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        tokens = stripped.split()
        if len(tokens) != 2:
            raise EdgeListParseError(lineno, line)
        pairs.append((tokens[0], tokens[1]))
    g = Graph.from_pairs(pairs)
    return g, g.id_map


def read_edge_list(path) -> tuple[Graph, NodeIdMap]:
    with open(path) as fh:
        return load_edge_list(fh)


def serialize_edge_list(g: Graph) -> str:
    labels = g.labels
    return "".join(f"{labels[u]} {labels[v]}\n" for u, v in g.edges.tolist())


class EdgeValues:
    """Integer per-edge values aligned with a graph's edge ids."""

    def __init__(self, graph: Graph, values):
        values = np.asarray(values, dtype=np.int64)
        if values.shape != (graph.n_edges,):
            raise GraphError("need exactly one value per edge")
        values.flags.writeable = False
        self.graph = graph
        self.values = values

    def __getitem__(self, pair) -> int:
        u, v = pair
        return int(self.values[self.graph.edge_id(u, v)])

    def __len__(self) -> int:
        return len(self.values)

    def __eq__(self, other) -> bool:
        return (type(self) is type(other) and self.graph.n_edges == other.graph.n_edges
                and np.array_equal(self.graph.edges, other.graph.edges)
                and np.array_equal(self.values, other.values))

    def items(self):
        for (u, v), x in zip(self.graph.edges.tolist(), self.values.tolist()):
            yield (u, v), x

    def incident(self, u: int) -> np.ndarray:
        """Values of ``u``'s incident edges, aligned with ``graph.neighbors(u)``."""
        return self.values[self.graph.incident_edge_ids(u)]

    def __repr__(self) -> str:
        return f"{type(self).__name__}({len(self)} edges)"


class SupportMap(EdgeValues):
    """sup(e): triangles through each edge."""

    @property
    def triangle_count(self) -> int:
        return int(self.values.sum()) // 3


# below this size set intersections beat the sparse product's fixed overhead
SMALL_GRAPH_EDGES = 2000


def compute_supports(g: Graph) -> SupportMap:
    # (A @ A)[u, v] counts common neighbours; sample it on the edge set only
    if g.n_edges == 0:
        return SupportMap(g, np.zeros(0, dtype=np.int64))
    if g.n_edges < SMALL_GRAPH_EDGES:
        nbrs = g.neighbor_sets
        sup = np.fromiter((len(nbrs[u] & nbrs[v]) for u, v in g.edges.tolist()),
                          dtype=np.int64, count=g.n_edges)
        return SupportMap(g, sup)
    a = g.adjacency_matrix
    common = sp.triu((a @ a).multiply(a), k=1, format="coo")
    # canonical edges are sorted, so u * n + v is a sorted key into them
    n = g.n_nodes
    keys = g.edges[:, 0] * n + g.edges[:, 1]
    sup = np.zeros(g.n_edges, dtype=np.int64)
    sup[np.searchsorted(keys, common.row.astype(np.int64) * n + common.col)] = common.data
    return SupportMap(g, sup)


def induced_subgraph(g: Graph, nodes: Iterable[int]) -> Graph:
    """Subgraph on ``nodes``; new ids follow ascending original id, labels carry over."""
    keep = np.unique(np.fromiter((int(x) for x in nodes), dtype=np.int64))
    for u in keep:
        g._check(u)
    remap = np.full(g.n_nodes, -1, dtype=np.int64)
    remap[keep] = np.arange(len(keep))
    e = g.edges
    mask = (remap[e[:, 0]] >= 0) & (remap[e[:, 1]] >= 0) if len(e) else np.zeros(0, bool)
    sub_edges = remap[e[mask]] if len(e) else e
    labels = [g.labels[u] for u in keep.tolist()]
    return Graph(len(keep), sub_edges, labels=labels, parent_ids=g.parent_ids[keep])


def _share_neighbor(nbr_sets, u: int, v: int) -> bool:
    a, b = nbr_sets[u], nbr_sets[v]
    if len(a) > len(b):
        a, b = b, a
    return any(w in b for w in a)


def bounded_node_set(g: Graph, seeds: Iterable[int], m: float) -> set[int]:
    """Nodes within ``m`` hops of any seed, expanding only along edges in a triangle."""
    seeds = [int(s) for s in seeds]
    for s in seeds:
        g._check(s)
    if m < 0:
        raise GraphError("hop bound must be non-negative")
    nbr_sets = g.neighbor_sets
    visited: set[int] = set(seeds)
    for s in seeds:
        depth = {s: 0}
        queue = deque([s])
        while queue:
            u = queue.popleft()
            if depth[u] >= m:
                continue
            for v in g.neighbors(u).tolist():
                if v in depth or not _share_neighbor(nbr_sets, u, v):
                    continue
                depth[v] = depth[u] + 1
                queue.append(v)
        visited.update(depth)
    return visited


def m_bounded_subgraph(g: Graph, seeds: Iterable[int], m: float) -> Graph:
    """Union of the seeds' m-bounded subgraphs, as one induced subgraph of ``g``."""
    return induced_subgraph(g, bounded_node_set(g, seeds, m))


def connected_components(g: Graph) -> list[list[int]]:
    _, labels = _components(g.adjacency_matrix, directed=False)
    comps: dict[int, list[int]] = {}
    for u, c in enumerate(labels.tolist()):
        comps.setdefault(c, []).append(u)
    return list(comps.values())
