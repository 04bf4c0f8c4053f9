"""Summary and shortcut edges, and the same-context reachability graph."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .exploded import ExplodedGraph
from .instance import INTRA
from .relations import iter_bits


class GHat:
    """Exploded graph with summaries added and interprocedural edges dropped.

    Stored at vertex level: ``rel[offset[u] + v]`` is a list of ``m`` row masks,
    ``succ[u]`` lists the ``v`` that have an entry. Rows are mutable so that
    local reachability edges can be added later without a second structure.
    Both endpoints of an entry share a procedure, so offsets are taken relative
    to the procedure's lowest vertex id; this keeps a procedure's keys close
    together in the table.
    """

    def __init__(self, n: int, m: int, proc_base: list[int] | None = None):
        self.n = n
        self.m = m
        self.succ: list[list[int]] = [[] for _ in range(n)]
        self.rel: dict[int, list[int]] = {}
        if proc_base is None:
            self.span = n
            self.offset = [u * n for u in range(n)]
        else:
            spans = {}
            for u, lo in enumerate(proc_base):
                spans[lo] = max(spans.get(lo, 0), u - lo + 1)
            self.span = max(spans.values(), default=1)
            self.offset = [u * self.span - lo for u, lo in enumerate(proc_base)]

    def key(self, u: int, v: int) -> int:
        return self.offset[u] + v

    def split_key(self, key: int) -> tuple[int, int]:
        u = key // self.span
        return u, key - self.offset[u]

    def rows(self, u: int, v: int) -> list[int] | None:
        return self.rel.get(self.offset[u] + v)

    def add_rows(self, u: int, v: int, rows) -> None:
        key = self.offset[u] + v
        cur = self.rel.get(key)
        if cur is None:
            self.rel[key] = list(rows)
            self.succ[u].append(v)
        else:
            for d, r in enumerate(rows):
                cur[d] |= r

    def add_edge(self, x: int, y: int) -> None:
        u, d1 = divmod(x, self.m)
        v, d2 = divmod(y, self.m)
        key = self.offset[u] + v
        cur = self.rel.get(key)
        if cur is None:
            cur = self.rel[key] = [0] * self.m
            self.succ[u].append(v)
        cur[d1] |= 1 << d2

    def has_edge(self, x: int, y: int) -> bool:
        u, d1 = divmod(x, self.m)
        v, d2 = divmod(y, self.m)
        cur = self.rel.get(self.offset[u] + v)
        return cur is not None and (cur[d1] >> d2) & 1 == 1

    def successors(self, x: int) -> list[int]:
        u, d = divmod(x, self.m)
        m, rel = self.m, self.rel
        base = self.offset[u]
        return [v * m + d2 for v in self.succ[u] for d2 in iter_bits(rel[base + v][d])]

    def edges(self):
        m = self.m
        for key, rows in self.rel.items():
            u, v = self.split_key(key)
            for d1, r in enumerate(rows):
                for d2 in iter_bits(r):
                    yield u * m + d1, v * m + d2

    def copy(self) -> "GHat":
        g = GHat(self.n, self.m)
        g.span, g.offset = self.span, self.offset
        g.succ = [list(s) for s in self.succ]
        g.rel = {k: list(r) for k, r in self.rel.items()}
        return g


@dataclass
class SummarySet:
    summaries: set[tuple[int, int]] = field(default_factory=set)
    shortcuts: set[tuple[int, int]] = field(default_factory=set)
    # worklist statistics: iterations, max pairing-loop trips per summary trigger
    iterations: int = 0
    max_pairing_trips: int = 0


def compute_summaries(eg: ExplodedGraph, keep_shortcuts: bool = True) -> tuple[SummarySet, GHat]:
    """Worklist fixpoint over summary and shortcut edges, then assemble GHat."""
    sg, m, n = eg.sg, eg.m, eg.n
    nm = n * m
    start_of = [sg.procedures[sg.proc_of[u]].start for u in range(n)]
    exit_of = [sg.procedures[sg.proc_of[u]].exit for u in range(n)]
    is_start = bytearray(n)
    for p in sg.procedures:
        is_start[p.start] = 1

    # per procedure: (call vertex, return site, column masks of the call relation, return rows)
    pairing = [[] for _ in sg.procedures]
    for cs in sg.call_sites:
        callee = sg.procedures[cs.callee]
        call_rows = eg.inst.relations[(cs.call, callee.start)].rows
        ret_rows = eg.inst.relations[(callee.exit, cs.return_site)].rows
        cols = [0] * m
        for d3, r in enumerate(call_rows):
            for d1 in iter_bits(r):
                cols[d1] |= 1 << d3
        pairing[cs.callee].append((cs.call, cs.return_site, cols, ret_rows))

    queue: deque[tuple[int, int]] = deque()
    sc_into = [0] * nm  # bit d3 of sc_into[y]: ((s_p, d3), y) is in E'
    sc_seen = [0] * nm  # same, for E' plus the queue
    pair_seen: set[int] = set()  # call-to-return edges from non-start calls, in E' plus the queue
    succ: list[list[int]] = [[] for _ in range(nm)]
    is_call = bytearray(n)
    for cs in sg.call_sites:
        is_call[cs.call] = 1

    for u in range(n):
        for v, rows, kind in eg.out[u]:
            if kind != INTRA:
                continue
            for d1, row in enumerate(rows):
                x = u * m + d1
                for d2 in iter_bits(row):
                    y = v * m + d2
                    queue.append((x, y))
                    if is_start[u]:
                        sc_seen[y] |= 1 << d1
                    elif is_call[u]:
                        pair_seen.add(x * nm + y)

    result = SummarySet()
    summaries = result.summaries
    iterations = 0
    max_trips = 0
    while queue:
        x, y = queue.popleft()
        iterations += 1
        u, d1 = divmod(x, m)
        succ[x].append(y)
        s = start_of[u]
        at_start = u == s
        if at_start:
            sc_into[y] |= 1 << d1
        ds = sc_into[x]
        if at_start:
            ds |= 1 << d1
        new = ds & ~sc_seen[y]
        if new:
            sc_seen[y] |= new
            base = s * m
            for d3 in iter_bits(new):
                queue.append((base + d3, y))
        if not at_start:
            continue
        bit = 1 << d1
        for w in succ[y]:
            if not sc_seen[w] & bit:
                sc_seen[w] |= bit
                queue.append((x, w))
        v, d2 = divmod(y, m)
        if v != exit_of[u]:
            continue
        for c, r, cols, ret_rows in pairing[sg.proc_of[u]]:
            trips = 0
            for d3 in iter_bits(cols[d1]):
                xs = c * m + d3
                for d4 in iter_bits(ret_rows[d2]):
                    trips += 1
                    ys = r * m + d4
                    summaries.add((xs, ys))
                    if is_start[c]:
                        if not (sc_seen[ys] >> d3) & 1:
                            sc_seen[ys] |= 1 << d3
                            queue.append((xs, ys))
                    else:
                        key = xs * nm + ys
                        if key not in pair_seen:
                            pair_seen.add(key)
                            queue.append((xs, ys))
            if trips > max_trips:
                max_trips = trips
    result.iterations = iterations
    result.max_pairing_trips = max_trips

    if keep_shortcuts:
        for p in sg.procedures:
            s = p.start
            for v in p.vertices:
                for d2 in range(m):
                    y = v * m + d2
                    for d1 in iter_bits(sc_into[y]):
                        result.shortcuts.add((s * m + d1, y))

    lows = [min(p.vertices) for p in sg.procedures]
    gh = GHat(n, m, [lows[sg.proc_of[u]] for u in range(n)])
    for u in range(n):
        for v, rows, kind in eg.out[u]:
            if kind == INTRA:
                gh.add_rows(u, v, rows)
    for xs, ys in summaries:
        gh.add_edge(xs, ys)
    return result, gh


def reachable_in_ghat(gh: GHat, source: int) -> set[int]:
    """Exploded vertices reachable from ``source`` in GHat (breadth-first)."""
    seen = {source}
    frontier = [source]
    m, rel, succ, offset = gh.m, gh.rel, gh.succ, gh.offset
    while frontier:
        nxt = []
        for x in frontier:
            u, d = divmod(x, m)
            base = offset[u]
            for v in succ[u]:
                row = rel[base + v][d]
                while row:
                    low = row & -row
                    y = v * m + low.bit_length() - 1
                    row ^= low
                    if y not in seen:
                        seen.add(y)
                        nxt.append(y)
        frontier = nxt
    return seen


def dump_summaries(summaries: SummarySet, eg: ExplodedGraph) -> str:
    nm = eg.sg.vertex_names
    dom = eg.inst.domain
    lines = []
    for xs, ys in sorted(summaries.summaries):
        c, d3 = divmod(xs, eg.m)
        r, d4 = divmod(ys, eg.m)
        lines.append(f"summary {nm[c]} {dom.name(d3)} {nm[r]} {dom.name(d4)}")
    return "\n".join(lines) + ("\n" if lines else "")
