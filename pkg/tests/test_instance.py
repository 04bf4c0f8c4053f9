import copy
import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import DATA, callsite_instance, small_instance
from ifds.instance import (CALL, INTRA, RETURN, InstanceError, dump_instance, is_interprocedurally_valid,
                           is_same_context_valid, parse_instance, parse_queries, validate_bandwidth)

DOC = json.loads((DATA / "callsite_example.json").read_text())


def _doc():
    return copy.deepcopy(DOC)


def path(inst, *names):
    return [inst.sg.vertex(n) for n in names]


def test_callsite_example_shape():
    inst = callsite_instance()
    sg = inst.sg
    assert len(sg.procedures) == 2 and sg.n == 10
    inter = {(sg.vertex_names[u], sg.vertex_names[v], k) for u, v, k in sg.interprocedural_edges()}
    assert inter == {("c7", "v1", CALL), ("v4", "r7", RETURN)}
    assert sg.edge_kind(sg.vertex("c7"), sg.vertex("r7")) == INTRA


def test_singleton_procedure():
    inst = parse_instance({"domain": [], "calls": [], "flow": [],
                           "procedures": [{"name": "p", "start": "a", "exit": "a", "vertices": ["a"], "edges": []}]})
    assert inst.sg.n == 1 and inst.m == 1


def test_dump_parse_roundtrip():
    inst = callsite_instance()
    again = parse_instance(dump_instance(inst))
    assert dump_instance(again) == dump_instance(inst)
    assert again.sg == inst.sg and again.relations == inst.relations


@pytest.mark.parametrize("mutate, message", [
    (lambda d: d["procedures"][0].pop("exit"), "exit"),
    (lambda d: d["procedures"][0].pop("start"), "start"),
    (lambda d: d["procedures"][0].update(start=["v1", "v2"]), "more than one"),
    (lambda d: d["procedures"][1]["vertices"].append("v1"), "declared twice"),
    (lambda d: d["procedures"][0]["edges"].append({"from": "v1", "to": "v2"}), "duplicate edge"),
    (lambda d: d["procedures"][0]["edges"].append({"from": "v1", "to": "zz"}), "dangling"),
    (lambda d: d["calls"][0].update(callee="g"), "dangling callee"),
    (lambda d: d["flow"].append({"from": "v1", "to": "v3", "rel": []}), "not a supergraph edge"),
    (lambda d: d["flow"].append(dict(d["flow"][0])), "duplicate flow"),
    (lambda d: d["flow"].pop(0), "missing relation"),
    (lambda d: d["flow"][0].update(rel=[["x", "0"]]), "zero fact"),
    (lambda d: d["flow"][0].update(rel=[["q", "x"]]), "unknown fact"),
    (lambda d: d["procedures"].append({"name": "f", "start": "q", "exit": "q", "vertices": ["q"], "edges": []}),
     "procedure f declared twice"),
    (lambda d: d["procedures"][0].update(start="v5"), "dangling start"),
])
def test_malformed_instances(mutate, message):
    doc = _doc()
    mutate(doc)
    with pytest.raises(InstanceError, match=message):
        parse_instance(doc)


def test_return_site_needs_call_edge():
    doc = _doc()
    main = doc["procedures"][1]
    main["edges"] = [e for e in main["edges"] if (e["from"], e["to"]) != ("c7", "r7")]
    main["edges"].append({"from": "v6", "to": "r7"})
    with pytest.raises(InstanceError):
        parse_instance(doc)


def test_bandwidth_clean_on_callsite_example():
    assert validate_bandwidth(callsite_instance(), 3) == []


def test_bandwidth_identity_degree_one():
    inst = small_instance(3)
    assert validate_bandwidth(inst, 1) == []


def test_bandwidth_violation_reported_once():
    doc = _doc()
    doc["domain"] = ["x", "y", "z", "w"]
    for fd in doc["flow"]:
        if (fd["from"], fd["to"]) == ("c7", "v1"):
            fd["rel"] = [["0", f] for f in ["0", "x", "y", "z", "w"]]
    report = validate_bandwidth(parse_instance(doc), 3)
    assert len(report) == 1
    assert report[0]["fact"] == "0" and report[0]["degree"] == 5 and report[0]["side"] == "src"


def test_same_context_examples():
    inst = callsite_instance()
    sg = inst.sg
    full = path(inst, "v5", "v6", "c7", "v1", "v2", "v3", "v4", "r7", "v8")
    assert is_same_context_valid(sg, full)
    assert is_same_context_valid(sg, [])
    assert is_same_context_valid(sg, path(inst, "v2"))
    open_call = path(inst, "c7", "v1", "v2")
    assert not is_same_context_valid(sg, open_call)
    assert is_interprocedurally_valid(sg, open_call)
    assert not is_interprocedurally_valid(sg, path(inst, "v4", "r7", "v8"))


def test_path_with_non_edge_rejected():
    inst = callsite_instance()
    with pytest.raises(InstanceError):
        is_same_context_valid(inst.sg, path(inst, "v5", "v8"))


def test_parse_queries():
    inst = callsite_instance()
    qs = parse_queries("# comment\npair v5 0 v8 x\n\nsource v1 y\n", inst)
    assert [q.kind for q in qs] == ["pair", "source"]
    assert qs[0].v == inst.sg.vertex("v8") and qs[0].d2 == 1
    with pytest.raises(InstanceError, match="line 1"):
        parse_queries("pair v5 0 nope x", inst)
    with pytest.raises(InstanceError):
        parse_queries("triple v5 0", inst)


def _stack_verdicts(sg, p):
    """(same-context, interprocedurally valid) by simulating a call stack."""
    stack = []
    ok = True
    for u, v in zip(p, p[1:]):
        kind = sg.edge_kind(u, v)
        if kind == CALL:
            stack.append(sg.call_at[u])
        elif kind == RETURN:
            site = sg.return_at[v]
            if not stack or stack[-1] != site:
                ok = False
                break
            stack.pop()
    return ok and not stack, ok


def _random_walk(sg, rng, length):
    out = {}
    for u, v, _ in sg.edges():
        out.setdefault(u, []).append(v)
    x = rng.randrange(sg.n)
    walk = [x]
    for _ in range(length):
        if x not in out:
            break
        x = rng.choice(out[x])
        walk.append(x)
    return walk


@settings(max_examples=1000, deadline=None)
@given(st.integers(0, 40), st.integers(0, 2**32 - 1), st.integers(0, 60))
def test_grammar_matches_stack_simulation(inst_seed, walk_seed, length):
    inst = small_instance(inst_seed)
    p = _random_walk(inst.sg, random.Random(walk_seed), length)
    same, inter = _stack_verdicts(inst.sg, p)
    assert is_same_context_valid(inst.sg, p) == same
    assert is_interprocedurally_valid(inst.sg, p) == inter
