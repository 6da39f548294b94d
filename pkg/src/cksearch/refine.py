"""Expand-and-replace refinement of a top-n candidate list.

Every candidate and every outside neighbour is scored by how many of its
neighbours sit in the current list; the best ``n`` survive. At equal score an
incumbent beats a newcomer, then the smaller node id wins.
"""
from __future__ import annotations

from typing import Sequence

from .graph import Graph


def refine_once(g: Graph, S_old: Sequence[int]) -> list[int]:
    S_old = [int(u) for u in S_old]
    if not S_old:
        raise ValueError("candidate list is empty")
    for u in S_old:
        g._check(u)
    old = set(S_old)
    if len(old) != len(S_old):
        raise ValueError("candidate list contains duplicates")
    nbr_sets = g.neighbor_sets
    new = set()
    for u in S_old:
        new.update(nbr_sets[u])
    new -= old

    def score(u):
        return len(nbr_sets[u] & old)

    ranked = sorted(old | new, key=lambda u: (-score(u), u not in old, u))
    return ranked[:len(S_old)]


def refine(g: Graph, S: Sequence[int], iters: int = 2) -> list[int]:
    if iters < 0:
        raise ValueError("iters must be >= 0")
    current = [int(u) for u in S]
    for _ in range(iters):
        nxt = refine_once(g, current)
        if set(nxt) == set(current):
            return nxt
        current = nxt
    return current
