"""A tiny structured IR and its encodings as IFDS instances.

Every simple statement becomes one vertex; the flow function on an edge is
the transfer function of the statement at the edge's source. Procedures get a
dedicated entry and exit vertex; a call becomes a call vertex and a return-site
vertex. Fact semantics per analysis:

reach        no facts; only the zero plane, i.e. plain reachability.
poss-uninit  fact ``x``: variable x may be uninitialized. ``decl`` makes its
             variables uninitialized, ``assign(x, uses)`` makes x uninitialized
             exactly when one of the used variables may be.
simp-uninit  as poss-uninit, but every assignment initializes its target.
live         fact ``x``: x is live. Encoded on the reversed flow graphs, so the
             exit becomes the start and return sites become calls.
reach-defs   fact ``x@v``: the definition of x at vertex v may reach. Formals
             are defined at the callee entry; a by-reference actual gets a
             definition at its call vertex when the call returns.

Calls bind actual variables to formals (by value or by reference). By-value
actuals keep their caller-side facts across the call, by-reference actuals
take the callee's facts back through the exit.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Union

from ..instance import CallSite, Instance, Procedure, Supergraph
from ..relations import FactDomain, FlowRelation

KINDS = ("reach", "poss-uninit", "simp-uninit", "live", "reach-defs")


@dataclass
class Decl:
    vars: list[str]


@dataclass
class Assign:
    target: str
    uses: list[str] = field(default_factory=list)


@dataclass
class Use:
    vars: list[str]


@dataclass
class Call:
    callee: str
    args: list[tuple[str | None, bool]]  # (actual variable or None, by reference)


@dataclass
class If:
    then: list
    orelse: list = field(default_factory=list)


@dataclass
class While:
    body: list


Stmt = Union[Decl, Assign, Use, Call, If, While]


@dataclass
class Proc:
    name: str
    params: list[str]
    body: list


@dataclass
class MiniProgram:
    procs: list[Proc]

    def proc(self, name: str) -> Proc:
        for p in self.procs:
            if p.name == name:
                return p
        raise KeyError(name)


def _variables(proc: Proc) -> list[str]:
    seen = dict.fromkeys(proc.params)

    def walk(stmts):
        for s in stmts:
            if isinstance(s, Decl):
                seen.update(dict.fromkeys(s.vars))
            elif isinstance(s, Assign):
                seen.update(dict.fromkeys([s.target] + s.uses))
            elif isinstance(s, Use):
                seen.update(dict.fromkeys(s.vars))
            elif isinstance(s, Call):
                seen.update(dict.fromkeys(a for a, _ in s.args if a))
            elif isinstance(s, If):
                walk(s.then)
                walk(s.orelse)
            elif isinstance(s, While):
                walk(s.body)

    walk(proc.body)
    return list(seen)


@dataclass
class _Cfg:
    names: list[str]
    stmt: dict[int, object]  # vertex -> statement evaluated when leaving it (None = no-op)
    procs: list[tuple[str, list[int], int, int, list[tuple[int, int]]]]
    calls: list[tuple[int, int, str, Call]]  # (call vertex, return site, callee, statement)


def _build_cfg(prog: MiniProgram) -> _Cfg:
    names, stmt, procs, calls = [], {}, [], []
    for proc in prog.procs:
        vs, edges = [], []

        def vertex(s=None):
            v = len(names)
            names.append(f"{proc.name}.{len(vs)}")
            vs.append(v)
            stmt[v] = s
            return v

        def block(stmts, prev):
            for s in stmts:
                if isinstance(s, Call):
                    c, r = vertex(s), vertex()
                    edges.extend([(prev, c), (c, r)])
                    calls.append((c, r, s.callee, s))
                    prev = r
                elif isinstance(s, If):
                    cond = vertex()
                    edges.append((prev, cond))
                    a = block(s.then, cond)
                    b = block(s.orelse, cond)
                    join = vertex()
                    edges.append((a, join))
                    if b != a:
                        edges.append((b, join))
                    prev = join
                elif isinstance(s, While):
                    head = vertex()
                    edges.append((prev, head))
                    tail = block(s.body, head)
                    if tail != head:
                        edges.append((tail, head))
                    prev = head
                else:
                    v = vertex(s)
                    edges.append((prev, v))
                    prev = v
            return prev

        start = vertex()
        last = block(proc.body, start)
        exit_ = vertex()
        edges.append((last, exit_))
        procs.append((proc.name, vs, start, exit_, edges))
    return _Cfg(names, stmt, procs, calls)


def _rel(m: int, rows: dict[int, set[int]]) -> FlowRelation:
    arr = [0] * m
    for a, bs in rows.items():
        for b in bs:
            arr[a] |= 1 << b
    return FlowRelation.from_rows(arr)


def gen_analysis(prog: MiniProgram, kind: str) -> Instance:
    """Encode ``prog`` as an IFDS instance for one of the five analyses."""
    if kind not in KINDS:
        raise ValueError(f"unknown analysis kind {kind!r}; expected one of {', '.join(KINDS)}")
    cfg = _build_cfg(prog)
    pvars = {p.name: _variables(p) for p in prog.procs}
    params = {p.name: p.params for p in prog.procs}
    proc_of_vertex = {}
    for pname, vs, *_ in cfg.procs:
        for v in vs:
            proc_of_vertex[v] = pname
    starts = {name: s for name, _, s, _, _ in cfg.procs}
    exits = {name: e for name, _, _, e, _ in cfg.procs}

    if kind == "reach":
        facts = []
    elif kind == "reach-defs":
        facts = []
        for pname, vs, start, _, _ in cfg.procs:
            facts += [f"{x}@{cfg.names[start]}" for x in params[pname]]
            for v in vs:
                s = cfg.stmt[v]
                if isinstance(s, Decl):
                    facts += [f"{x}@{cfg.names[v]}" for x in s.vars]
                elif isinstance(s, Assign):
                    facts.append(f"{s.target}@{cfg.names[v]}")
                elif isinstance(s, Call):
                    facts += [f"{a}@{cfg.names[v]}" for a, ref in s.args if a and ref]
        facts = list(dict.fromkeys(facts))
    else:
        facts = sorted({x for vs in pvars.values() for x in vs})
    dom = FactDomain(facts)
    m = dom.extended_size
    fi = dom.index

    def ident(vs, drop=()):
        return {fi(x): {fi(x)} for x in vs if x not in drop}

    by_name = {name: v for v, name in enumerate(cfg.names)}
    defs_of: dict[tuple[str, str], set[int]] = {}
    facts_of: dict[str, list[str]] = {}
    for f in facts if kind == "reach-defs" else ():
        x, site = f.split("@", 1)
        pname = proc_of_vertex[by_name[site]]
        defs_of.setdefault((pname, x), set()).add(fi(f))
        facts_of.setdefault(pname, []).append(f)

    def own_facts(pname):
        if kind == "reach-defs":
            return facts_of.get(pname, [])
        if kind == "reach":
            return []
        return pvars[pname]

    def stmt_rel(pname, v, s) -> FlowRelation:
        vs = pvars[pname]
        rows: dict[int, set[int]] = {0: {0}}
        if kind == "reach":
            return _rel(m, rows)
        if kind == "reach-defs":
            mine = own_facts(pname)
            killed = set()
            gens = []
            if isinstance(s, Decl):
                for x in s.vars:
                    killed |= defs_of.get((pname, x), set())
                    gens.append(fi(f"{x}@{cfg.names[v]}"))
            elif isinstance(s, Assign):
                killed |= defs_of.get((pname, s.target), set())
                gens.append(fi(f"{s.target}@{cfg.names[v]}"))
            for f in mine:
                if fi(f) not in killed:
                    rows[fi(f)] = {fi(f)}
            rows[0] |= set(gens)
            return _rel(m, rows)
        if isinstance(s, Decl):
            rows.update(ident(vs))
            rows[0] |= {fi(x) for x in s.vars}
        elif isinstance(s, Assign):
            rows.update(ident(vs, drop={s.target}))
            if kind == "poss-uninit":
                for a in s.uses:
                    rows.setdefault(fi(a), set()).add(fi(s.target))
        else:
            rows.update(ident(vs))
        return _rel(m, rows)

    def live_rel(pname, s) -> FlowRelation:
        vs = pvars[pname]
        rows: dict[int, set[int]] = {0: {0}}
        if isinstance(s, Decl):
            rows.update(ident(vs, drop=set(s.vars)))
        elif isinstance(s, Assign):
            rows.update(ident(vs, drop={s.target}))
            rows[0] |= {fi(a) for a in s.uses}
        elif isinstance(s, Use):
            rows.update(ident(vs))
            rows[0] |= {fi(a) for a in s.vars}
        else:
            rows.update(ident(vs))
        return _rel(m, rows)

    backward = kind == "live"
    names = list(cfg.names)
    procs, rels = [], {}
    call_info = {c: (r, callee, s) for c, r, callee, s in cfg.calls}
    for pname, vs, start, exit_, edges in cfg.procs:
        out_edges = []
        for u, v in edges:
            if backward:
                out_edges.append((v, u))
                if u in call_info:
                    s = call_info[u][2]
                    rel = _rel(m, {0: {0}, **ident(pvars[pname], drop={a for a, ref in s.args if a and ref})})
                else:
                    rel = live_rel(pname, cfg.stmt[u])
                rels[(v, u)] = rel
            else:
                out_edges.append((u, v))
                if u in call_info:
                    s = call_info[u][2]
                    byref = {a for a, ref in s.args if a and ref}
                    if kind == "reach":
                        rel = _rel(m, {0: {0}})
                    elif kind == "reach-defs":
                        keep = {fi(f) for f in own_facts(pname)}
                        rel = _rel(m, {0: {0}, **{f: {f} for f in keep}})
                    else:
                        rel = _rel(m, {0: {0}, **ident(pvars[pname], drop=byref)})
                else:
                    rel = stmt_rel(pname, u, cfg.stmt[u])
                rels[(u, v)] = rel
        if backward:
            procs.append(Procedure(pname, tuple(vs), exit_, start, tuple(out_edges)))
        else:
            procs.append(Procedure(pname, tuple(vs), start, exit_, tuple(out_edges)))

    pindex = {p.name: i for i, p in enumerate(prog.procs)}
    call_sites = []
    for c, r, callee, s in cfg.calls:
        formals = params[callee]
        if len(formals) != len(s.args):
            raise ValueError(f"call to {callee} passes {len(s.args)} arguments, expected {len(formals)}")
        bind = [(a, f, ref) for (a, ref), f in zip(s.args, formals) if a]
        s_callee, e_callee = starts[callee], exits[callee]
        if kind == "reach":
            into = out = _rel(m, {0: {0}})
        elif kind == "reach-defs":
            into = _rel(m, {0: {0} | {fi(f"{f}@{cfg.names[s_callee]}") for f in formals}})
            out = _rel(m, {0: {0} | {fi(f"{a}@{cfg.names[c]}") for a, _, ref in bind if ref}})
        elif backward:
            # reversed: return site calls into the callee's exit; the callee's entry returns to c
            into = _rel(m, {0: {0}, **{fi(a): {fi(f)} for a, f, ref in bind if ref}})
            out = _rel(m, {0: {0}, **{fi(f): {fi(a)} for a, f, _ in bind}})
        else:
            into = _rel(m, {0: {0}, **{fi(a): {fi(f)} for a, f, _ in bind}})
            out = _rel(m, {0: {0}, **{fi(f): {fi(a)} for a, f, ref in bind if ref}})
        if backward:
            call_sites.append(CallSite(r, c, pindex[callee]))
            rels[(r, e_callee)] = into
            rels[(s_callee, c)] = out
        else:
            call_sites.append(CallSite(c, r, pindex[callee]))
            rels[(c, s_callee)] = into
            rels[(e_callee, r)] = out
    return Instance(Supergraph(procs, call_sites, names), dom, rels)


def callsite_example() -> MiniProgram:
    """``f(int *&x, int *y)`` assigns y twice; ``main`` declares x, y, calls f(x, y), uses both."""
    f = Proc("f", ["x", "y"], [Assign("y"), Assign("y")])
    main = Proc("main", [], [Decl(["x", "y"]), Call("f", [("x", True), ("y", False)]), Use(["x", "y"])])
    return MiniProgram([f, main])


def random_program(seed: int, n: int, nvars: int, proc_size: int = 60, call_density: float = 0.08) -> MiniProgram:
    """Random structured program with roughly ``n`` CFG vertices over ``nvars`` variable names."""
    rng = random.Random(seed)
    nprocs = max(1, n // proc_size)
    variables = [f"v{i}" for i in range(max(1, nvars))]
    pnames = [f"f{i}" for i in range(nprocs)]
    nparams = {p: rng.randint(0, min(2, len(variables))) for p in pnames}

    def stmts(budget, depth):
        out = []
        while budget > 0:
            r = rng.random()
            if r < call_density and budget >= 2:
                callee = rng.choice(pnames)
                args = [(rng.choice(variables + [None]), rng.random() < 0.5) for _ in range(nparams[callee])]
                out.append(Call(callee, args))
                budget -= 2
            elif r < call_density + 0.1 and budget >= 4 and depth < 4:
                k = rng.randint(2, min(budget - 2, 16))
                a = rng.randint(1, k - 1)
                out.append(If(stmts(a, depth + 1), stmts(k - a, depth + 1) if rng.random() < 0.7 else []))
                budget -= k + 2
            elif r < call_density + 0.18 and budget >= 2 and depth < 4:
                k = rng.randint(1, min(budget - 1, 12))
                out.append(While(stmts(k, depth + 1)))
                budget -= k + 1
            else:
                kind = rng.random()
                if kind < 0.15:
                    out.append(Decl([rng.choice(variables)]))
                elif kind < 0.75:
                    out.append(Assign(rng.choice(variables), rng.sample(variables, rng.randint(0, min(2, len(variables))))))
                else:
                    out.append(Use(rng.sample(variables, rng.randint(1, min(2, len(variables))))))
                budget -= 1
        return out

    procs = []
    for p in pnames:
        params = rng.sample(variables, nparams[p])
        procs.append(Proc(p, params, stmts(max(0, proc_size - 2), 0)))
    return MiniProgram(procs)
