import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cksearch import Graph  # noqa: E402

K6_LABELS = ["u1", "u3", "u4", "u5", "u6", "u7"]


def clique_pairs(labels):
    return [(a, b) for i, a in enumerate(labels) for b in labels[i + 1:]]


def fig5_graph():
    """K6 on u1,u3..u7; u1-u2; u1 and u2 both joined to w1..w8."""
    pairs = clique_pairs(K6_LABELS) + [("u1", "u2")]
    pairs += [(u, f"w{i}") for i in range(1, 9) for u in ("u1", "u2")]
    return Graph.from_pairs(pairs)


def complete_graph(h):
    return Graph(h, [(i, j) for i in range(h) for j in range(i + 1, h)])


def k6_pendant():
    """K6 on a..f plus pendant p attached to a."""
    return Graph.from_pairs(clique_pairs(list("abcdef")) + [("a", "p")])


def random_graph(n, p, seed):
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(len(iu)) < p
    return Graph(n, np.column_stack([iu[keep], ju[keep]]))


@pytest.fixture
def fig5():
    return fig5_graph()


@pytest.fixture
def k4():
    return complete_graph(4)
