"""Supergraph and IFDS instance model, JSON I/O and valid-path checks."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .relations import FactDomain, FlowRelation

log = logging.getLogger(__name__)

INTRA = 0
CALL = 1  # call vertex -> callee start
RETURN = 2  # callee exit -> return site

EDGE_KINDS = {INTRA: "intra", CALL: "call-to-start", RETURN: "exit-to-return"}


class InstanceError(ValueError):
    pass


@dataclass(frozen=True)
class Procedure:
    name: str
    vertices: tuple[int, ...]
    start: int
    exit: int
    edges: tuple[tuple[int, int], ...]
    domain: tuple[str, ...] | None = None


@dataclass(frozen=True)
class CallSite:
    call: int
    return_site: int
    callee: int


@dataclass(frozen=True)
class QuerySpec:
    kind: str
    u: int
    d1: int
    v: int | None = None
    d2: int | None = None


class Supergraph:
    """Immutable supergraph over dense integer vertex ids."""

    def __init__(self, procedures: Sequence[Procedure], call_sites: Sequence[CallSite],
                 vertex_names: Sequence[str]):
        self.procedures = tuple(procedures)
        self.call_sites = tuple(call_sites)
        self.vertex_names = tuple(vertex_names)
        n = len(self.vertex_names)
        self.proc_of = [-1] * n
        for pi, p in enumerate(self.procedures):
            for v in p.vertices:
                self.proc_of[v] = pi
        self.vertex_index = {name: i for i, name in enumerate(self.vertex_names)}
        self.proc_index = {p.name: i for i, p in enumerate(self.procedures)}
        self.call_at = {cs.call: i for i, cs in enumerate(self.call_sites)}
        self.return_at = {cs.return_site: i for i, cs in enumerate(self.call_sites)}
        self.callers = [[] for _ in self.procedures]
        for i, cs in enumerate(self.call_sites):
            self.callers[cs.callee].append(i)
        self._intra = {e for p in self.procedures for e in p.edges}
        self._kind = {e: INTRA for e in self._intra}
        for cs in self.call_sites:
            callee = self.procedures[cs.callee]
            self._kind[(cs.call, callee.start)] = CALL
            self._kind[(callee.exit, cs.return_site)] = RETURN

    @property
    def n(self) -> int:
        return len(self.vertex_names)

    def interprocedural_edges(self) -> list[tuple[int, int, int]]:
        out = []
        for cs in self.call_sites:
            callee = self.procedures[cs.callee]
            out.append((cs.call, callee.start, CALL))
            out.append((callee.exit, cs.return_site, RETURN))
        return out

    def edges(self) -> list[tuple[int, int, int]]:
        out = [(u, v, INTRA) for p in self.procedures for (u, v) in p.edges]
        return out + self.interprocedural_edges()

    def edge_kind(self, u: int, v: int) -> int | None:
        return self._kind.get((u, v))

    def vertex(self, name: str) -> int:
        try:
            return self.vertex_index[name]
        except KeyError:
            raise KeyError(f"unknown vertex {name!r}") from None

    def __eq__(self, other):
        return (isinstance(other, Supergraph) and self.procedures == other.procedures
                and self.call_sites == other.call_sites and self.vertex_names == other.vertex_names)


@dataclass
class Instance:
    sg: Supergraph
    domain: FactDomain
    relations: dict[tuple[int, int], FlowRelation] = field(default_factory=dict)

    @property
    def m(self) -> int:
        return self.domain.extended_size

    def relation(self, u: int, v: int) -> FlowRelation:
        return self.relations[(u, v)]


def _require(cond: bool, msg: str):
    if not cond:
        raise InstanceError(msg)


def _check_structure(sg: Supergraph):
    for p in sg.procedures:
        members = set(p.vertices)
        _require(p.start in members and p.exit in members,
                 f"procedure {p.name}: start/exit must be among its vertices")
        for u, v in p.edges:
            _require(u in members and v in members,
                     f"procedure {p.name}: edge {sg.vertex_names[u]}->{sg.vertex_names[v]} leaves the procedure")
    seen_calls, seen_returns = set(), set()
    for cs in sg.call_sites:
        _require(cs.call not in seen_calls, f"vertex {sg.vertex_names[cs.call]} is the call of two call sites")
        _require(cs.return_site not in seen_returns,
                 f"vertex {sg.vertex_names[cs.return_site]} is the return site of two call sites")
        seen_calls.add(cs.call)
        seen_returns.add(cs.return_site)
        _require(sg.proc_of[cs.call] == sg.proc_of[cs.return_site],
                 f"call {sg.vertex_names[cs.call]} and its return site lie in different procedures")
    _require(not (seen_calls & seen_returns), "a vertex cannot be both a call and a return site")

    succ = {}
    pred = {}
    for p in sg.procedures:
        for u, v in p.edges:
            succ.setdefault(u, []).append(v)
            pred.setdefault(v, []).append(u)
    for cs in sg.call_sites:
        c, r = sg.vertex_names[cs.call], sg.vertex_names[cs.return_site]
        _require(succ.get(cs.call) == [cs.return_site],
                 f"call vertex {c} must have exactly one intraprocedural successor, its return site {r}")
        _require(pred.get(cs.return_site) == [cs.call],
                 f"return site {r} must have exactly one intraprocedural predecessor, its call {c}")
    intra = {e for p in sg.procedures for e in p.edges}
    for u, v, _ in sg.interprocedural_edges():
        _require((u, v) not in intra,
                 f"edge {sg.vertex_names[u]}->{sg.vertex_names[v]} is both intra- and interprocedural")
    inter = sg.interprocedural_edges()
    _require(len({(u, v) for u, v, _ in inter}) == len(inter), "two call sites induce the same interprocedural edge")


def parse_instance(data: bytes | str | dict) -> Instance:
    """Parse and validate an instance from JSON text (or an already decoded dict)."""
    if isinstance(data, (bytes, str)):
        try:
            doc = json.loads(data)
        except json.JSONDecodeError as exc:
            raise InstanceError(f"invalid JSON: {exc}") from None
    else:
        doc = data
    _require(isinstance(doc, dict), "instance must be a JSON object")
    for key in ("domain", "procedures", "calls", "flow"):
        _require(key in doc, f"missing top-level key {key!r}")
    try:
        domain = FactDomain([str(f) for f in doc["domain"]])
    except ValueError as exc:
        raise InstanceError(str(exc)) from None

    names: list[str] = []
    index: dict[str, int] = {}
    procs: list[Procedure] = []
    for pd in doc["procedures"]:
        _require(isinstance(pd, dict), "procedure entries must be objects")
        for key in ("name", "vertices", "edges"):
            _require(key in pd, f"procedure missing {key!r}")
        pname = pd["name"]
        _require("start" in pd and pd["start"] is not None, f"procedure {pname} lacks a start vertex")
        _require("exit" in pd and pd["exit"] is not None, f"procedure {pname} lacks an exit vertex")
        _require(not isinstance(pd["start"], list) and not isinstance(pd["exit"], list),
                 f"procedure {pname} has more than one start or exit")
        vs = []
        for name in pd["vertices"]:
            name = str(name)
            _require(name not in index, f"vertex {name} declared twice")
            index[name] = len(names)
            names.append(name)
            vs.append(index[name])

        def vid(name, what):
            _require(str(name) in index and index[str(name)] in vs,
                     f"procedure {pname}: dangling {what} {name}")
            return index[str(name)]

        edges = []
        for e in pd["edges"]:
            _require(isinstance(e, dict) and "from" in e and "to" in e, "edge entries need 'from' and 'to'")
            edges.append((vid(e["from"], "edge endpoint"), vid(e["to"], "edge endpoint")))
        _require(len(set(edges)) == len(edges), f"procedure {pname}: duplicate edge")
        pdom = None
        if "domain" in pd:
            pdom = tuple(str(f) for f in pd["domain"])
            for f in pdom:
                _require(f in domain.facts, f"procedure {pname}: domain fact {f} not in the global domain")
        procs.append(Procedure(pname, tuple(vs), vid(pd["start"], "start"), vid(pd["exit"], "exit"),
                               tuple(edges), pdom))
    pindex = {}
    for i, p in enumerate(procs):
        _require(p.name not in pindex, f"procedure {p.name} declared twice")
        pindex[p.name] = i

    calls = []
    for cd in doc["calls"]:
        for key in ("call", "returnSite", "callee"):
            _require(key in cd, f"call entry missing {key!r}")
        _require(str(cd["call"]) in index, f"dangling call vertex {cd['call']}")
        _require(str(cd["returnSite"]) in index, f"dangling return site {cd['returnSite']}")
        _require(cd["callee"] in pindex, f"dangling callee {cd['callee']}")
        calls.append(CallSite(index[str(cd["call"])], index[str(cd["returnSite"])], pindex[cd["callee"]]))

    sg = Supergraph(procs, calls, names)
    _check_structure(sg)

    m = domain.extended_size
    all_edges = {(u, v) for u, v, _ in sg.edges()}
    relations: dict[tuple[int, int], FlowRelation] = {}
    for fd in doc["flow"]:
        _require(str(fd.get("from")) in index and str(fd.get("to")) in index,
                 f"flow entry references unknown vertex {fd.get('from')}->{fd.get('to')}")
        key = (index[str(fd["from"])], index[str(fd["to"])])
        _require(key in all_edges, f"flow entry {fd['from']}->{fd['to']} is not a supergraph edge")
        _require(key not in relations, f"duplicate flow entry {fd['from']}->{fd['to']}")
        try:
            pairs = [(domain.index(str(a)), domain.index(str(b))) for a, b in fd["rel"]]
            relations[key] = FlowRelation.from_pairs(pairs, m)
        except (KeyError, ValueError, TypeError) as exc:
            raise InstanceError(f"flow entry {fd['from']}->{fd['to']}: {exc}") from None
    for u, v in all_edges:
        _require((u, v) in relations, f"missing relation for edge {names[u]}->{names[v]}")
    return Instance(sg, domain, relations)


def dump_instance(inst: Instance) -> str:
    """Serialize to the JSON instance format; parse_instance inverts this."""
    sg, dom = inst.sg, inst.domain
    nm = sg.vertex_names
    procs = []
    for p in sg.procedures:
        pd = {"name": p.name, "start": nm[p.start], "exit": nm[p.exit],
              "vertices": [nm[v] for v in p.vertices],
              "edges": [{"from": nm[u], "to": nm[v]} for u, v in p.edges]}
        if p.domain is not None:
            pd["domain"] = list(p.domain)
        procs.append(pd)
    calls = [{"call": nm[c.call], "returnSite": nm[c.return_site], "callee": sg.procedures[c.callee].name}
             for c in sg.call_sites]
    flow = []
    for u, v, _ in sg.edges():
        rel = inst.relations[(u, v)]
        flow.append({"from": nm[u], "to": nm[v],
                     "rel": [[dom.name(a), dom.name(b)] for a, b in rel.pairs()]})
    doc = {"domain": list(dom.facts), "procedures": procs, "calls": calls, "flow": flow}
    return json.dumps(doc, separators=(",", ":"))


def load_instance(path) -> Instance:
    with open(path, "rb") as fh:
        return parse_instance(fh.read())


def validate_bandwidth(inst: Instance, bound: int) -> list[dict]:
    """List call-to-start / exit-to-return relations with a node of degree above ``bound``."""
    report = []
    nm = inst.sg.vertex_names
    for u, v, kind in inst.sg.interprocedural_edges():
        for side, fact, deg in inst.relations[(u, v)].degree_report():
            if deg > bound:
                report.append({"edge": (nm[u], nm[v]), "kind": EDGE_KINDS[kind], "side": side,
                               "fact": inst.domain.name(fact), "degree": deg})
    if report:
        log.warning("bandwidth bound %d exceeded on %d relation nodes", bound, len(report))
    return report


def parse_queries(text: str, inst: Instance) -> list[QuerySpec]:
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        try:
            if parts[0] == "pair" and len(parts) == 5:
                out.append(QuerySpec("pair", inst.sg.vertex(parts[1]), inst.domain.index(parts[2]),
                                     inst.sg.vertex(parts[3]), inst.domain.index(parts[4])))
            elif parts[0] == "source" and len(parts) == 3:
                out.append(QuerySpec("source", inst.sg.vertex(parts[1]), inst.domain.index(parts[2])))
            else:
                raise InstanceError(f"line {lineno}: malformed query {line!r}")
        except KeyError as exc:
            raise InstanceError(f"line {lineno}: {exc.args[0]}") from None
    return out


# -- valid paths ------------------------------------------------------------

def _project(sg: Supergraph, path: Sequence[int]) -> list[tuple[str, int]]:
    """Call/return symbols along a path, read off the interprocedural edges it takes."""
    symbols = []
    for u, v in zip(path, path[1:]):
        kind = sg.edge_kind(u, v)
        if kind is None:
            raise InstanceError(f"{sg.vertex_names[u]}->{sg.vertex_names[v]} is not a supergraph edge")
        if kind == CALL:
            symbols.append(("c", sg.call_at[u]))
        elif kind == RETURN:
            symbols.append(("r", sg.return_at[v]))
    return symbols


def _parse_balanced(symbols, pos: int) -> int:
    """Longest prefix from ``pos`` derivable from S -> c_i S r_i S | eps; returns end position."""
    while pos < len(symbols) and symbols[pos][0] == "c":
        site = symbols[pos][1]
        inner = _parse_balanced(symbols, pos + 1)
        if inner < len(symbols) and symbols[inner] == ("r", site):
            pos = inner + 1
        else:
            return pos
    return pos


def is_same_context_valid(sg: Supergraph, path: Sequence[int]) -> bool:
    symbols = _project(sg, list(path))
    return _parse_balanced(symbols, 0) == len(symbols)


def is_interprocedurally_valid(sg: Supergraph, path: Sequence[int]) -> bool:
    """S' -> S' c_i S | S: balanced blocks separated by calls that never return."""
    symbols = _project(sg, list(path))
    pos = _parse_balanced(symbols, 0)
    while pos < len(symbols):
        if symbols[pos][0] != "c":
            return False
        pos = _parse_balanced(symbols, pos + 1)
    return True


def vertex_names(sg: Supergraph, vs: Iterable[int]) -> list[str]:
    return [sg.vertex_names[v] for v in vs]
