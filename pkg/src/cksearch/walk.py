"""Cohesiveness-aware random walks for approximate key-member search."""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from .graph import Graph, SupportMap, compute_supports, m_bounded_subgraph

SELF_LOOP_PROB = 0.001

VARIANTS = ("basic", "avg", "skew", "tb")
_ALIASES = {
    "b": "basic", "rw-b": "basic",
    "as": "avg", "avg-support": "avg", "rw-as": "avg",
    "rw-skew": "skew",
    "truss-bound": "tb", "rw-tb": "tb",
}


class UndefinedFeatureError(ValueError):
    """A cohesion feature was requested for a node without incident edges."""


def canonical_variant(name: str) -> str:
    key = name.lower()
    key = _ALIASES.get(key, key)
    if key not in VARIANTS:
        raise ValueError(f"unknown walk variant {name!r}; choose from {', '.join(VARIANTS)}")
    return key


@dataclass(frozen=True)
class WalkParams:
    m: float = 2
    r: int = 150
    alpha: float = 1.0
    n: int | None = None
    variant: str = "tb"
    refine_iters: int = 0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "variant", canonical_variant(self.variant))
        if self.m < 0:
            raise ValueError("m must be >= 0")
        if self.r < 1:
            raise ValueError("r must be >= 1")
        # alpha == 0 switches skew adjustment off; the model's own range is (0, 2]
        if not 0 <= self.alpha <= 2:
            raise ValueError("alpha must lie in [0, 2]")
        if self.n is not None and self.n < 1:
            raise ValueError("n must be >= 1")
        if self.refine_iters < 0:
            raise ValueError("refine_iters must be >= 0")


# ---------------------------------------------------------------------------
# node features
# ---------------------------------------------------------------------------

def _incident_supports(g: Graph, supports: SupportMap, u: int) -> np.ndarray:
    s = supports.incident(u)
    if len(s) == 0:
        raise UndefinedFeatureError(f"node {u} has no incident edges")
    return s.astype(float)


def average_support(g: Graph, supports: SupportMap, u: int) -> float:
    return float(_incident_supports(g, supports, u).mean())


def skewness(values: Sequence[float]) -> float:
    """Population third standardized moment; zero for a constant sample."""
    x = np.asarray(values, dtype=float)
    mu = x.mean()
    sigma = x.std()
    if sigma == 0:
        return 0.0
    return float(np.mean(((x - mu) / sigma) ** 3))


def support_skewness(g: Graph, supports: SupportMap, u: int) -> float:
    return skewness(_incident_supports(g, supports, u))


def adjusted_average_support(A: float, skew: float, alpha: float) -> float:
    """Shrink the average under right skew and inflate it under left skew.

    The factor lies in ``[1 - alpha/2, 1 + alpha/2]``.
    """
    return A * (1.0 + alpha * (expit(-skew) - 0.5))


def truss_bound_from_supports(values: Iterable[int]) -> int:
    s = sorted(values, reverse=True)
    if not s:
        return 1
    # i-th largest support must reach i-1, i.e. k-1 edges with support >= k-2 for k = i+1
    best = 1
    for i, x in enumerate(s, 1):
        if x < i - 1:
            break
        best = i
    return best + 1


def node_truss_upper_bound(g: Graph, supports: SupportMap, u: int) -> int:
    return truss_bound_from_supports(supports.incident(u).tolist())


def edge_truss_upper_bound(bound_u: int, bound_v: int, sup_uv: int) -> int:
    return min(sup_uv + 2, bound_u, bound_v)


@dataclass(frozen=True)
class NodeCohesionFeatures:
    """Per-node features over one graph; isolated nodes carry NaN averages."""
    average: np.ndarray
    skew: np.ndarray
    adjusted: np.ndarray
    bound: np.ndarray
    alpha: float

    def triple(self, u: int) -> tuple[float, float, float]:
        return float(self.average[u]), float(self.skew[u]), float(self.bound[u])


def node_features(g: Graph, supports: SupportMap, alpha: float = 1.0) -> NodeCohesionFeatures:
    n = g.n_nodes
    avg = np.full(n, np.nan)
    skew = np.zeros(n)
    bound = np.ones(n, dtype=np.int64)
    for u in range(n):
        s = supports.incident(u)
        if len(s) == 0:
            continue
        avg[u] = s.mean()
        skew[u] = skewness(s)
        bound[u] = truss_bound_from_supports(s.tolist())
    adjusted = avg * (1.0 + alpha * (expit(-skew) - 0.5))
    return NodeCohesionFeatures(avg, skew, adjusted, bound, alpha)


# ---------------------------------------------------------------------------
# transition matrices and iteration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TransitionMatrix:
    matrix: sp.csr_matrix
    variant: str
    start: int
    self_loop: float
    fallback_rows: tuple[int, ...] = ()

    def prob(self, i: int, j: int) -> float:
        return float(self.matrix[i, j])

    def row_sums(self) -> np.ndarray:
        return np.asarray(self.matrix.sum(axis=1)).ravel()


def edge_weights(g: Graph, supports: SupportMap, variant: str, alpha: float = 1.0,
                 features: NodeCohesionFeatures | None = None) -> np.ndarray:
    """Unnormalised weight of each directed CSR slot ``(u, indices[slot])``.

    The source node's own average appears in every term of its row and cancels
    under normalisation, so only the target's average is applied.
    """
    variant = canonical_variant(variant)
    src = np.repeat(np.arange(g.n_nodes), g.degrees)
    dst = g.indices
    eids = np.empty(len(dst), dtype=np.int64)
    for u in range(g.n_nodes):
        eids[g.indptr[u]:g.indptr[u + 1]] = g.incident_edge_ids(u)
    sup = supports.values[eids].astype(float)
    if variant == "basic":
        return sup
    if features is None:
        features = node_features(g, supports, alpha)
    if variant == "avg":
        return sup * features.average[dst]
    if variant == "skew":
        return sup * features.adjusted[dst]
    bound = np.minimum(sup + 2, np.minimum(features.bound[src], features.bound[dst]))
    return bound * features.adjusted[dst]


def build_transition_matrix(gq: Graph, supports: SupportMap, q: int, variant: str = "tb",
                            alpha: float = 1.0, self_loop: float = SELF_LOOP_PROB) -> TransitionMatrix:
    """Row-stochastic walk matrix over ``gq`` with a small self-loop at ``q``.

    Rows whose weights all vanish fall back to uniform over neighbours; a node
    with no neighbours keeps all its mass.
    """
    gq._check(q)
    variant = canonical_variant(variant)
    w = edge_weights(gq, supports, variant, alpha)
    n = gq.n_nodes
    rows = np.repeat(np.arange(n), gq.degrees)
    totals = np.bincount(rows, weights=w, minlength=n)
    fallback = [u for u in range(n) if totals[u] <= 0 and gq.degree(u) > 0]
    for u in fallback:
        lo, hi = gq.indptr[u], gq.indptr[u + 1]
        w[lo:hi] = 1.0
        totals[u] = hi - lo
    data = w / np.where(totals > 0, totals, 1.0)[rows]
    P = sp.csr_matrix((data, gq.indices.copy(), gq.indptr.copy()), shape=(n, n)).tolil()
    for u in range(n):
        if gq.degree(u) == 0:
            P[u, u] = 1.0
    if gq.degree(q) > 0:
        P[q, :] = P[q, :] * (1.0 - self_loop)
        P[q, q] = self_loop
    return TransitionMatrix(P.tocsr(), variant, q, self_loop, tuple(fallback))


@dataclass(frozen=True)
class StationaryDistribution:
    pi: np.ndarray
    iterations: int
    last_delta_l1: float
    trace: tuple[float, ...] = ()


def power_iterate(P: TransitionMatrix | sp.spmatrix, q: int, r: int,
                  trace: bool = False) -> StationaryDistribution:
    """Run ``r`` steps of ``pi <- pi @ P`` from the indicator of ``q``.

    With ``trace`` the Euclidean step distances are recorded.
    """
    M = P.matrix if isinstance(P, TransitionMatrix) else sp.csr_matrix(P)
    if r < 1:
        raise ValueError("r must be >= 1")
    MT = M.T.tocsr()
    pi = np.zeros(M.shape[0])
    pi[q] = 1.0
    dists = []
    delta = 0.0
    for _ in range(r):
        nxt = MT @ pi
        diff = nxt - pi
        delta = float(np.abs(diff).sum())
        if trace:
            dists.append(float(np.sqrt(diff @ diff)))
        pi = nxt
    return StationaryDistribution(pi, r, delta, tuple(dists))


def top_n(pi: Sequence[float], n: int) -> list[int]:
    """Indices of the ``n`` largest probabilities; ties go to the smaller id."""
    if n < 1:
        raise ValueError("n must be >= 1")
    pi = np.asarray(pi, dtype=float)
    order = np.lexsort((np.arange(len(pi)), -pi))
    return order[:n].tolist()


# ---------------------------------------------------------------------------
# end-to-end
# ---------------------------------------------------------------------------

@dataclass
class WalkResult:
    query: tuple[int, ...]
    start: int
    ranked: list[tuple[int, float]]
    members: list[int]
    variant: str
    subgraph_nodes: int
    subgraph_edges: int
    truncated: bool = False
    last_delta_l1: float = 0.0
    trace: tuple[float, ...] = field(default=())

    def to_labels(self, g: Graph) -> dict:
        return {
            "query": [g.label(q) for q in self.query],
            "start": g.label(self.start),
            "variant": self.variant,
            "members": [g.label(u) for u in self.members],
            "ranked": [{"node": g.label(u), "prob": float(f"{p:.12g}")} for u, p in self.ranked],
            "subgraph": {"nodes": self.subgraph_nodes, "edges": self.subgraph_edges},
            "truncated": self.truncated,
        }


def pick_start(Q: Sequence[int], seed: int) -> int:
    Q = sorted(set(Q))
    if len(Q) == 1:
        return Q[0]
    return random.Random(seed).choice(Q)


def cks_random_walk(g: Graph, Q: Iterable[int], params: WalkParams | None = None,
                    trace: bool = False) -> WalkResult:
    """Approximate key members of the query set ``Q`` by a fixed-length walk."""
    from .refine import refine

    params = params or WalkParams()
    Q = tuple(sorted({int(q) for q in Q}))
    if not Q:
        raise ValueError("query set is empty")
    for q in Q:
        g._check(q)
    start = pick_start(Q, params.seed)
    gq = m_bounded_subgraph(g, Q, params.m)
    local = {int(u): i for i, u in enumerate(gq.parent_ids.tolist())}
    s = local[start]
    n = params.n if params.n is not None else gq.n_nodes

    if gq.degree(s) == 0:
        ranked = [(start, 1.0)]
        members = refine(g, [start], params.refine_iters)
        return WalkResult(Q, start, ranked, members, params.variant, gq.n_nodes,
                          gq.n_edges, truncated=n > 1)

    supports = compute_supports(gq)
    P = build_transition_matrix(gq, supports, s, params.variant, params.alpha)
    dist = power_iterate(P, s, params.r, trace=trace)
    order = top_n(dist.pi, min(n, gq.n_nodes))
    parent = gq.parent_ids
    ranked = [(int(parent[i]), float(dist.pi[i])) for i in order]
    members = refine(g, [u for u, _ in ranked], params.refine_iters)
    return WalkResult(Q, start, ranked, members, params.variant, gq.n_nodes, gq.n_edges,
                      truncated=n > gq.n_nodes, last_delta_l1=dist.last_delta_l1,
                      trace=dist.trace)
