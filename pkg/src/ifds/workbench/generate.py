"""Seeded generators for random structured IFDS instances and query sets."""

from __future__ import annotations

import os
import random

from ..instance import CallSite, Instance, Procedure, Supergraph
from ..relations import FactDomain, FlowRelation


def resolve_seed(seed: int) -> int:
    env = os.environ.get("IFDS_SEED")
    return int(env) if env not in (None, "") else seed


class _CfgBuilder:
    def __init__(self, rng: random.Random, prefix: str, names: list[str], call_density: float):
        self.rng = rng
        self.prefix = prefix
        self.names = names
        self.call_density = call_density
        self.vertices: list[int] = []
        self.edges: list[tuple[int, int]] = []
        self.calls: list[tuple[int, int]] = []  # (call, return site)

    def vertex(self) -> int:
        v = len(self.names)
        self.names.append(f"{self.prefix}_{len(self.vertices)}")
        self.vertices.append(v)
        return v

    def block(self, budget: int, prev: int) -> int:
        """Append ``budget`` vertices after ``prev``; returns the last vertex."""
        rng = self.rng
        while budget > 0:
            r = rng.random()
            if budget >= 2 and r < self.call_density:
                c, ret = self.vertex(), self.vertex()
                self.edges += [(prev, c), (c, ret)]
                self.calls.append((c, ret))
                prev, budget = ret, budget - 2
            elif budget >= 4 and r < self.call_density + 0.12:
                inner = rng.randint(2, min(budget - 2, 24))
                cond = self.vertex()
                self.edges.append((prev, cond))
                left = rng.randint(1, inner - 1)
                a = self.block(left, cond)
                b = self.block(inner - left, cond) if rng.random() < 0.8 else cond
                join = self.vertex()
                self.edges += [(a, join)] + ([(b, join)] if b != a else [])
                prev, budget = join, budget - inner - 2
            elif budget >= 3 and r < self.call_density + 0.2:
                inner = rng.randint(1, min(budget - 1, 20))
                head = self.vertex()
                self.edges.append((prev, head))
                tail = self.block(inner, head)
                self.edges.append((tail, head))
                prev, budget = head, budget - inner - 1
            else:
                v = self.vertex()
                self.edges.append((prev, v))
                prev, budget = v, budget - 1
        return prev


def _intra_relation(rng: random.Random, m: int) -> FlowRelation:
    rows = [1] + [0] * (m - 1)
    for a in range(1, m):
        r = rng.random()
        if r < 0.15:
            continue  # killed
        rows[a] |= 1 << a
        if r > 0.9 and m > 2:
            rows[a] |= 1 << rng.randrange(1, m)
    for b in range(1, m):
        if rng.random() < 0.08:
            rows[0] |= 1 << b
    return FlowRelation.from_rows(rows)


def _binding(rng: random.Random, m: int) -> FlowRelation:
    """Partial injective map on facts: every node has degree at most 1 (besides the zero fact)."""
    targets = list(range(1, m))
    rng.shuffle(targets)
    rows = [1] + [0] * (m - 1)
    for a in range(1, m):
        if rng.random() < 0.85:
            rows[a] = 1 << targets[a - 1]
    return FlowRelation.from_rows(rows)


def gen_random(seed: int, n: int, domain: int, width_bound: int = 4, call_density: float = 0.05,
               proc_size: int = 120, recursion: bool = True) -> Instance:
    """Random structured instance with about ``n`` vertices and ``domain`` facts.

    Flow graphs are built from sequences, branches and loops only, so their
    treewidth stays at most 2 regardless of ``width_bound``; the bound is kept
    for interface symmetry and checked by callers after decomposition.
    """
    if n < 1 or domain < 0 or proc_size < 1:
        raise ValueError("parameters must be positive")
    rng = random.Random(seed)
    m = domain + 1
    nprocs = max(1, round(n / proc_size))
    sizes = [n // nprocs] * nprocs
    for i in range(n - sum(sizes)):
        sizes[i] += 1
    names: list[str] = []
    procs, builders = [], []
    for pi, size in enumerate(sizes):
        b = _CfgBuilder(rng, f"p{pi}", names, call_density)
        s = b.vertex()
        if size == 1:
            e = s
        else:
            last = b.block(size - 2, s)
            e = b.vertex()
            b.edges.append((last, e))
        builders.append((b, s, e))
    call_sites = []
    for pi, (b, s, e) in enumerate(builders):
        for c, r in b.calls:
            if recursion:
                callee = rng.randrange(nprocs)
            else:
                callee = rng.randrange(pi + 1, nprocs) if pi + 1 < nprocs else None
            if callee is None:
                continue
            call_sites.append(CallSite(c, r, callee))
        procs.append(Procedure(f"p{pi}", tuple(b.vertices), s, e, tuple(b.edges)))
    sg = Supergraph(procs, call_sites, names)
    dom = FactDomain([f"d{i}" for i in range(1, domain + 1)])
    rels = {}
    for u, v, kind in sg.edges():
        if kind == 0:
            rels[(u, v)] = _intra_relation(rng, m)
        else:
            rels[(u, v)] = _binding(rng, m)
    _ = width_bound
    return Instance(sg, dom, rels)


def gen_queries(inst: Instance, pairs: int, sources: int, seed: int = 0):
    """Pair queries with the target drawn uniformly from the source's procedure, and source queries."""
    rng = random.Random(seed)
    sg, m = inst.sg, inst.m
    out_pairs = []
    for _ in range(pairs):
        u = rng.randrange(sg.n)
        p = sg.procedures[sg.proc_of[u]]
        v = rng.choice(p.vertices)
        out_pairs.append((u, rng.randrange(m), v, rng.randrange(m)))
    out_sources = [(rng.randrange(sg.n), rng.randrange(m)) for _ in range(sources)]
    return out_pairs, out_sources
