"""Cohesive key-member search on undirected graphs."""
from .graph import (Graph, NodeIdMap, SupportMap, compute_supports, induced_subgraph,
                    load_edge_list, m_bounded_subgraph, read_edge_list, serialize_edge_list)
from .refine import refine, refine_once
from .truss import (KeyMemberResult, TCPIndex, TrussnessMap, build_tcp_index, key_members_exact,
                    key_members_from_trussness, max_truss_containing, tcp_query, truss_decompose)
from .walk import (TransitionMatrix, WalkParams, WalkResult, build_transition_matrix,
                   cks_random_walk, power_iterate, top_n)

__version__ = "0.1.0"

__all__ = [
    "Graph", "NodeIdMap", "SupportMap", "compute_supports", "induced_subgraph", "load_edge_list",
    "m_bounded_subgraph", "read_edge_list", "serialize_edge_list", "refine", "refine_once",
    "KeyMemberResult", "TCPIndex", "TrussnessMap", "build_tcp_index", "key_members_exact",
    "key_members_from_trussness", "max_truss_containing", "tcp_query", "truss_decompose",
    "TransitionMatrix", "WalkParams", "WalkResult", "build_transition_matrix", "cks_random_walk",
    "power_iterate", "top_n",
]
