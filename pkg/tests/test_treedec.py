import math
import random

import pytest

from helpers import seven_graph, seven_tree, small_instance
from ifds.treedec import (LcaIndex, TreeDecomposition, balance_binarize, decompose, decompose_graph,
                          height_bound, lca, validate, verify_cut_property)


def test_seven_vertex_graph_width_two():
    vs, es = seven_graph()
    td = decompose_graph(vs, es)
    assert td.width <= 2
    assert validate(td, vs, es) == []


def test_seven_vertex_tree_root_bags_and_lca():
    td = seven_tree()
    vs, es = seven_graph()
    assert validate(td, vs, es) == []
    # v5 -> b1, v3 -> b2, v4 -> b3, v7 -> b4 (bag ids 0..3)
    assert td.root_bag[4] == 0 and td.root_bag[2] == 1 and td.root_bag[3] == 2 and td.root_bag[6] == 3
    idx = LcaIndex(td)
    assert lca(idx, 2, 3) == 1
    assert all(lca(idx, b, b) == b for b in range(4))


def test_seven_vertex_cut_property():
    td = seven_tree()
    vs, es = seven_graph()
    assert verify_cut_property(td, vs, es, tree_edges=[(3, 1)]) == []
    assert set(td.bags[3]) & set(td.bags[1]) == {1}  # separator {v2}


def test_cut_property_detects_broken_decomposition():
    vs, es = seven_graph()
    broken = TreeDecomposition([(0, 1, 4), (1, 2, 4), (2, 3, 4), (5, 6)], [-1, 0, 1, 1])
    assert validate(broken, vs, es)  # edges v2-v7 and v6-v2 are uncovered
    assert verify_cut_property(broken, vs, es, tree_edges=[(3, 1)])


def test_seven_vertex_tree_survives_balancing():
    td = seven_tree()
    vs, es = seven_graph()
    bal = balance_binarize(td)
    assert validate(bal, vs, es) == []
    assert bal.width <= 4 * td.width + 3
    assert all(len(c) <= 2 for c in bal.children)


def test_single_vertex():
    td = decompose_graph([9], [])
    assert td.bags == [(9,)] and td.width == 0
    bal = balance_binarize(td)
    assert bal.bags == [(9,)]


def test_cycle_width_two():
    vs = list(range(10))
    es = [(i, (i + 1) % 10) for i in range(10)]
    td = decompose_graph(vs, es)
    assert td.width <= 2
    assert max(len(b) for b in td.bags) <= 3
    assert validate(td, vs, es) == []


def test_long_path_decomposition_balances():
    bags = [(i, i + 1, i + 2) for i in range(1024)]
    td = TreeDecomposition(bags, [-1] + list(range(1023)))
    vs = list(range(1026))
    es = [(i, i + 1) for i in range(1025)] + [(i, i + 2) for i in range(1024)]
    assert validate(td, vs, es) == []
    bal = balance_binarize(td)
    assert validate(bal, vs, es) == []
    assert bal.height <= 4 * math.log2(len(bal))
    assert bal.width <= 11
    assert all(len(c) <= 2 for c in bal.children)


def test_root_bag_is_shallowest():
    inst = small_instance(4, nmax=40)
    for p in inst.sg.procedures:
        td = balance_binarize(decompose(p))
        for v in p.vertices:
            holders = [b for b, bag in enumerate(td.bags) if v in bag]
            assert td.root_bag[v] == min(holders, key=lambda b: td.depth[b])
            assert sum(1 for b in holders if td.depth[b] == td.depth[td.root_bag[v]]) == 1


def _naive_lca(td, a, b):
    seen = set()
    while a >= 0:
        seen.add(a)
        a = td.parent[a]
    while b not in seen:
        b = td.parent[b]
    return b


def test_lca_against_ancestor_walk():
    rng = random.Random(3)
    parent = [-1] + [rng.randrange(i) for i in range(1, 500)]
    td = TreeDecomposition([(i,) for i in range(500)], parent)
    idx = LcaIndex(td)
    for _ in range(1000):
        a, b = rng.randrange(500), rng.randrange(500)
        assert idx.lca(a, b) == _naive_lca(td, a, b)


@pytest.mark.parametrize("seed", range(50))
def test_random_graphs_balanced_and_cut(seed):
    inst = small_instance(1000 + seed, nmax=200, dmax=0)
    for p in inst.sg.procedures:
        raw = decompose(p)
        assert validate(raw, p.vertices, p.edges) == []
        bal = balance_binarize(raw)
        assert validate(bal, p.vertices, p.edges) == []
        assert bal.height <= height_bound(bal)
        assert bal.width <= 4 * raw.width + 3
        assert verify_cut_property(bal, p.vertices, p.edges, samples=50, seed=seed) == []


def test_dump_format():
    td = seven_tree()
    names = [f"v{i + 1}" for i in range(7)]
    lines = td.dump(names).splitlines()
    assert lines[0] == "bag 0 parent=-1 depth=0 {v1 v2 v5}"
    assert "bag 3 parent=1 depth=2 {v2 v6 v7}" in lines
