from collections import deque

import pytest

from helpers import seven_ghat, seven_tree, small_instance
from ifds.query import preprocess
from ifds.reach import (compute_ancestors, compute_descendants, compute_local, local_edges,
                        preorder_layout)
from ifds.summarize import reachable_in_ghat
from oracles import same_level_closure
from reference import (ancestor_sets, decode_ancestor_string, decode_descendant_string,
                       descendant_sets)

V1, V2, V3, V4, V5, V6, V7 = range(7)


@pytest.fixture(scope="module")
def seven():
    td = seven_tree()
    gh = seven_ghat()
    closures = compute_local(gh, td)
    return td, gh, closures


def test_local_closure_adds_shortcut_edges(seven):
    _, gh, _ = seven
    for u, v in [(V3, V5), (V2, V5), (V5, V3), (V3, V2), (V5, V4)]:
        assert gh.has_edge(u, v)


def test_local_closure_is_cobagged_reachability(seven):
    td, gh, closures = seven
    got = local_edges(td, closures, 1)
    want = set()
    for bag in td.bags:
        for u in bag:
            reach = reachable_in_ghat(seven_ghat(), u)
            want |= {(u, v) for v in bag if v in reach}
    assert got == want


def test_single_bag_closure():
    from ifds.summarize import GHat
    from ifds.treedec import TreeDecomposition
    gh = GHat(3, 1)
    gh.add_edge(0, 1)
    gh.add_edge(1, 2)
    td = TreeDecomposition([(0, 1, 2)], [-1])
    closures = compute_local(gh, td)
    assert local_edges(td, closures, 1) == {(0, 0), (1, 1), (2, 2), (0, 1), (1, 2), (0, 2)}


def test_ancestor_strings_on_seven_vertex_graph(seven):
    td, _, closures = seven
    anc = compute_ancestors(closures, td, 1, keep_all=True)
    b4, b2, b1 = 3, 1, 0
    f, _ = anc.per_bag[(b4, td.bags[b4].index(V7))]
    assert (V2, 0) in decode_ancestor_string(f, td, b4, 1)[td.depth[b2]]
    _, fp = anc.per_bag[(b1, td.bags[b1].index(V5))]
    assert decode_ancestor_string(fp, td, b1, 1)[td.depth[b1]] == {(V1, 0), (V2, 0), (V5, 0)}
    for v in range(7):
        own = decode_ancestor_string(anc.F[v], td, td.root_bag[v], 1)[td.depth[td.root_bag[v]]]
        assert (v, 0) in own


def test_descendant_strings_on_seven_vertex_graph(seven):
    td, _, closures = seven
    layout = preorder_layout(td, 1)
    desc = compute_descendants(closures, td, layout, 1)
    assert td.root_bag[V2] == 0
    got = decode_descendant_string(desc[V2], layout, td, V2, 1)
    assert {(V3, 0), (V4, 0), (V6, 0), (V7, 0)} <= got


def test_isolated_leaf_vertex_descendants_are_itself():
    from ifds.summarize import GHat
    from ifds.treedec import TreeDecomposition
    gh = GHat(3, 1)
    gh.add_edge(0, 1)
    td = TreeDecomposition([(0, 1), (1, 2)], [-1, 0])
    closures = compute_local(gh, td)
    layout = preorder_layout(td, 1)
    desc = compute_descendants(closures, td, layout, 1)
    assert decode_descendant_string(desc[2], layout, td, 2, 1) == {(2, 0)}


def _local_from_oracle(td, reach, m):
    loc = set()
    for bag in td.bags:
        for u in bag:
            for d1 in range(m):
                r = reach[u * m + d1]
                for v in bag:
                    for d2 in range(m):
                        if v * m + d2 in r:
                            loc.add(((u, d1), (v, d2)))
    return loc


def _subtree_bags(td, b):
    out, stack = set(), [b]
    while stack:
        x = stack.pop()
        out.add(x)
        stack.extend(td.children[x])
    return out


@pytest.mark.parametrize("seed", range(40))
def test_packed_strings_match_reference_and_oracle(seed):
    inst = small_instance(2000 + seed, nmax=60)
    m = inst.m
    reach = same_level_closure(inst)
    ix = preprocess(inst, keep_all=True, keep_ghat=True)
    for pi, P in enumerate(ix.procs):
        td = P.td
        loc = _local_from_oracle(td, reach, m)
        got_local = {((x // m, x % m), (y // m, y % m))
                     for x, y in local_edges(td, ix.extra["closures"][pi], m)}
        assert got_local == loc
        F, Fp = ancestor_sets(td, loc, m)
        anc = ix.extra["ancestors"][pi]
        for b, bag in enumerate(td.bags):
            for i, u in enumerate(bag):
                for d in range(m):
                    f, fp = anc.per_bag[(b, i * m + d)]
                    df = decode_ancestor_string(f, td, b, m)
                    dfp = decode_ancestor_string(fp, td, b, m)
                    for j in range(td.depth[b] + 1):
                        assert df[j] == F[(u, d, b, j)]
                        assert dfp[j] == Fp[(u, d, b, j)]
                        # closure-oracle contract restricted to the ancestor at depth j
                        a_bag = set(td.bags[decode_anc(td, b, j)])
                        assert df[j] == {(v, d2) for v in a_bag for d2 in range(m) if v * m + d2 in reach[u * m + d]}
        verts = inst.sg.procedures[pi].vertices
        D = descendant_sets(td, loc, verts, m)
        for u in verts:
            allowed = {v for v in verts if td.root_bag[v] in _subtree_bags(td, td.root_bag[u])}
            for d in range(m):
                got = decode_descendant_string(ix.desc_F[u * m + d], P.layout, td, u, m)
                assert got == D[(u, d)]
                assert got == _filtered_bfs(ix.ghat, u * m + d, allowed, m)


def decode_anc(td, b, j):
    while td.depth[b] > j:
        b = td.parent[b]
    return b


def _filtered_bfs(gh, source, allowed, m):
    seen = {source}
    q = deque([source])
    while q:
        x = q.popleft()
        for y in gh.successors(x):
            if y // m in allowed and y not in seen:
                seen.add(y)
                q.append(y)
    return {(y // m, y % m) for y in seen}
