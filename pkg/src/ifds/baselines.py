"""Comparison algorithms: no preprocessing, complete preprocessing, and on-demand memoization."""

from __future__ import annotations

import time
from dataclasses import dataclass

from .exploded import build_exploded
from .instance import Instance
from .summarize import GHat, compute_summaries, reachable_in_ghat


class BudgetExceeded(RuntimeError):
    def __init__(self, what: str, spent: float):
        super().__init__(f"{what} budget exceeded after {spent:.3g}")
        self.what = what
        self.spent = spent


def _ghat(inst: Instance) -> GHat:
    return compute_summaries(build_exploded(inst), keep_shortcuts=False)[1]


def _bfs_until(gh: GHat, source: int, target: int) -> bool:
    if source == target:
        return True
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
                    if y == target:
                        return True
                    if y not in seen:
                        seen.add(y)
                        nxt.append(y)
        frontier = nxt
    return False


# -- no preprocessing ----------------------------------------------------------------

def nopp_pair(inst: Instance, u: int, d1: int, v: int, d2: int) -> bool:
    """Full summary computation plus a search, from scratch, for this one query."""
    sg, m = inst.sg, inst.m
    if sg.proc_of[u] != sg.proc_of[v]:
        return False
    return _bfs_until(_ghat(inst), u * m + d1, v * m + d2)


def nopp_source(inst: Instance, u: int, d1: int) -> set[int]:
    return reachable_in_ghat(_ghat(inst), u * inst.m + d1)


# -- complete preprocessing ------------------------------------------------------------

@dataclass
class CppTable:
    """Per procedure, one closure row per exploded vertex over the procedure's exploded vertices."""
    m: int
    proc_of: list[int]
    local: list[int]  # vertex -> index within its procedure
    orders: list[list[int]]  # per procedure, vertices by local index
    rows: list[list[int]]  # per procedure, per local exploded index
    build_s: float = 0.0

    def table_bytes(self) -> int:
        return sum(len(rows) * len(rows) // 8 for rows in self.rows)


def cpp_table_bytes(inst: Instance) -> int:
    m = inst.m
    return sum((len(p.vertices) * m) ** 2 // 8 for p in inst.sg.procedures)


def cpp_build(inst: Instance, time_budget: float | None = None, memory_budget: int | None = None) -> CppTable:
    """Summaries plus a full per-procedure closure. Raises BudgetExceeded past either budget."""
    t0 = time.perf_counter()
    need = cpp_table_bytes(inst)
    if memory_budget is not None and need > memory_budget:
        raise BudgetExceeded("memory", need)
    sg, m = inst.sg, inst.m
    gh = _ghat(inst)
    local = [0] * sg.n
    orders = []
    for p in sg.procedures:
        for i, v in enumerate(p.vertices):
            local[v] = i
        orders.append(list(p.vertices))
    all_rows = []
    for p in sg.procedures:
        rows = []
        for v in p.vertices:
            for d in range(m):
                if time_budget is not None and time.perf_counter() - t0 > time_budget:
                    raise BudgetExceeded("time", time.perf_counter() - t0)
                row = 0
                for y in reachable_in_ghat(gh, v * m + d):
                    w, d2 = divmod(y, m)
                    row |= 1 << (local[w] * m + d2)
                rows.append(row)
        all_rows.append(rows)
    return CppTable(m, list(sg.proc_of), local, orders, all_rows, time.perf_counter() - t0)


def cpp_pair(table: CppTable, u: int, d1: int, v: int, d2: int) -> bool:
    p = table.proc_of[u]
    if p != table.proc_of[v]:
        return False
    m = table.m
    return (table.rows[p][table.local[u] * m + d1] >> (table.local[v] * m + d2)) & 1 == 1


def cpp_source(table: CppTable, u: int, d1: int) -> set[int]:
    p = table.proc_of[u]
    m = table.m
    row = table.rows[p][table.local[u] * m + d1]
    order = table.orders[p]
    out = set()
    while row:
        low = row & -row
        i = low.bit_length() - 1
        row ^= low
        out.add(order[i // m] * m + i % m)
    return out


# -- on demand -------------------------------------------------------------------------

class OdCache:
    """Summaries on first use, then one memoized reachable set per queried source."""

    def __init__(self, inst: Instance):
        self.inst = inst
        self._gh: GHat | None = None
        self.reach: dict[int, frozenset[int]] = {}
        self.searches = 0

    def _source(self, x: int) -> frozenset[int]:
        hit = self.reach.get(x)
        if hit is not None:
            return hit
        if self._gh is None:
            self._gh = _ghat(self.inst)
        self.searches += 1
        res = frozenset(reachable_in_ghat(self._gh, x))
        self.reach[x] = res
        return res


def od_pair(state: OdCache, u: int, d1: int, v: int, d2: int) -> bool:
    sg, m = state.inst.sg, state.inst.m
    if sg.proc_of[u] != sg.proc_of[v]:
        return False
    return v * m + d2 in state._source(u * m + d1)


def od_source(state: OdCache, u: int, d1: int) -> set[int]:
    return set(state._source(u * state.inst.m + d1))
