import numpy as np
import pytest

from cksearch import refine, refine_once
from cksearch.evaluation import generate_planted_truss

from conftest import complete_graph, k6_pendant


def test_pendant_swapped_for_clique_member():
    g = k6_pendant()
    start = [g.node(x) for x in "abcdep"]
    out = refine_once(g, start)
    assert [g.label(u) for u in out] == list("afbcde")
    assert refine_once(g, out) == sorted(out)
    assert set(refine(g, start, 2)) == {g.node(x) for x in "abcdef"}


def test_zero_iterations_is_identity():
    g = k6_pendant()
    start = [6, 2, 0]
    assert refine(g, start, 0) == start


def test_clique_is_fixed_point():
    g = complete_graph(6)
    assert refine(g, [0, 1, 2, 3, 4, 5], 5) == [0, 1, 2, 3, 4, 5]


def test_input_errors():
    g = k6_pendant()
    with pytest.raises(ValueError):
        refine_once(g, [])
    with pytest.raises(ValueError):
        refine_once(g, [0, 0])
    with pytest.raises(ValueError):
        refine(g, [0], -1)


@pytest.mark.parametrize("seed", range(5))
def test_planted_two_wrong_members_repaired(seed):
    g, planted = generate_planted_truss(200, 0.02, 10, 20, seed)
    rng = np.random.default_rng(seed)
    keep = sorted(planted)[2:]
    outside = sorted(set(range(g.n_nodes)) - planted)
    noisy = keep + rng.choice(outside, size=2, replace=False).tolist()
    assert set(refine(g, noisy, 2)) == set(planted)
