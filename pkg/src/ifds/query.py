"""Preprocessing pipeline and pair / single-source queries."""

from __future__ import annotations

import gc
import logging
import os
import threading
import time
from concurrent.futures import Executor, ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Sequence

from .exploded import build_exploded
from .instance import Instance
from .reach import Layout, compute_ancestors, compute_descendants, compute_local, preorder_layout
from .summarize import compute_summaries
from .treedec import DEFAULT_WIDTH_CAP, LcaIndex, TreeDecomposition, balance_binarize, decompose

log = logging.getLogger(__name__)


@dataclass
class ProcIndex:
    td: TreeDecomposition
    lca: LcaIndex
    layout: Layout


@dataclass
class QueryIndex:
    inst: Instance
    procs: list[ProcIndex]
    root_bag: list[int]
    anc_F: list[int]
    anc_Fp: list[int]
    desc_F: list[int]
    stats: dict = field(default_factory=dict)

    @property
    def m(self) -> int:
        return self.inst.m

    @property
    def proc_of(self) -> list[int]:
        return self.inst.sg.proc_of


@dataclass
class SourceAnswer:
    """Reachable exploded vertices of one procedure as a bit string.

    Bit ``pos * m + d`` stands for ``(order[pos], d)``.
    """
    bits: int
    order: list[int]
    m: int

    def contains(self, v: int, d: int) -> bool:
        try:
            i = self.order.index(v)
        except ValueError:
            return False
        return (self.bits >> (i * self.m + d)) & 1 == 1

    def reachable(self) -> set[int]:
        out = set()
        r, m = self.bits, self.m
        while r:
            low = r & -r
            i = low.bit_length() - 1
            r ^= low
            out.add(self.order[i // m] * m + i % m)
        return out

    def to_hex(self) -> str:
        nbits = len(self.order) * self.m
        return format(self.bits, f"0{max(1, (nbits + 3) // 4)}x")


@contextmanager
def _no_gc():
    was = gc.isenabled()
    gc.disable()
    try:
        yield
    finally:
        if was:
            gc.enable()


def preprocess(inst: Instance, width_cap: int = DEFAULT_WIDTH_CAP, keep_all: bool = False,
               keep_ghat: bool = False) -> QueryIndex:
    """Summaries, per-procedure decompositions, local closure, ancestor and descendant strings."""
    stats: dict = {}
    sg, m = inst.sg, inst.m
    n = sg.n
    with _no_gc():
        t0 = time.perf_counter()
        eg = build_exploded(inst)
        summaries, gh = compute_summaries(eg, keep_shortcuts=keep_all)
        t1 = time.perf_counter()
        stats["summaries"] = len(summaries.summaries)
        stats["summary_s"] = t1 - t0

        procs: list[ProcIndex] = []
        root_bag = [0] * n
        anc_F = [0] * (n * m)
        anc_Fp = [0] * (n * m)
        desc_F = [0] * (n * m)
        width = 0
        t_dec = t_loc = t_anc = t_desc = 0.0
        extra = {"closures": [], "ancestors": []} if keep_all else None
        for p in sg.procedures:
            ta = time.perf_counter()
            td = balance_binarize(decompose(p, width_cap))
            lca_ix = LcaIndex(td)
            layout = preorder_layout(td, m)
            width = max(width, td.width)
            tb = time.perf_counter()
            closures = compute_local(gh, td)
            tc = time.perf_counter()
            anc = compute_ancestors(closures, td, m, keep_all=keep_all)
            td_ = time.perf_counter()
            desc = compute_descendants(closures, td, layout, m)
            te = time.perf_counter()
            t_dec += tb - ta
            t_loc += tc - tb
            t_anc += td_ - tc
            t_desc += te - td_
            for v, b in td.root_bag.items():
                root_bag[v] = b
            for x, s in anc.F.items():
                anc_F[x] = s
            for x, s in anc.Fp.items():
                anc_Fp[x] = s
            for x, s in desc.items():
                desc_F[x] = s
            procs.append(ProcIndex(td, lca_ix, layout))
            if extra is not None:
                extra["closures"].append(closures)
                extra["ancestors"].append(anc)
        stats.update(decompose_s=t_dec, local_s=t_loc, ancestors_s=t_anc, descendants_s=t_desc,
                     width=width, bags=sum(len(pi.td) for pi in procs),
                     total_s=time.perf_counter() - t0)
    ix = QueryIndex(inst, procs, root_bag, anc_F, anc_Fp, desc_F, stats)
    if keep_ghat:
        ix.ghat = gh
        ix.summaries = summaries
    if extra is not None:
        ix.extra = extra
    return ix


def _check_ids(ix: QueryIndex, u: int, d: int):
    if not (0 <= u < ix.inst.sg.n):
        raise KeyError(f"unknown vertex id {u}")
    if not (0 <= d < ix.m):
        raise KeyError(f"unknown fact index {d}")


def _pair_words(ix: QueryIndex, u: int, d1: int, v: int, d2: int) -> tuple[int, int]:
    """The separator-bag segments to intersect, and their bit length."""
    m = ix.m
    P = ix.procs[ix.proc_of[u]]
    bu, bv = ix.root_bag[u], ix.root_bag[v]
    b = P.lca.lca(bu, bv)
    delta = P.td.delta
    seg = len(P.td.bags[b]) * m
    a = ix.anc_F[u * m + d1] >> ((delta[bu] - delta[b]) * m)
    c = ix.anc_Fp[v * m + d2] >> ((delta[bv] - delta[b]) * m)
    return a & c & ((1 << seg) - 1), seg


def pair_query(ix: QueryIndex, u: int, d1: int, v: int, d2: int) -> bool:
    _check_ids(ix, u, d1)
    _check_ids(ix, v, d2)
    if ix.proc_of[u] != ix.proc_of[v]:
        return False
    return _pair_words(ix, u, d1, v, d2)[0] != 0


def _source_tasks(ix: QueryIndex, u: int, d1: int):
    """(ancestor bag, opposite child or -1, child towards u, reachable separator bits), root first."""
    m = ix.m
    P = ix.procs[ix.proc_of[u]]
    td = P.td
    bu = ix.root_bag[u]
    Fu = ix.anc_F[u * m + d1]
    tasks = []
    child, b = bu, td.parent[bu]
    while b >= 0:
        seg = (Fu >> ((td.delta[bu] - td.delta[b]) * m)) & ((1 << (len(td.bags[b]) * m)) - 1)
        opp = -1
        for c in td.children[b]:
            if c != child:
                opp = c
        tasks.append((b, opp, child, seg))
        child, b = b, td.parent[b]
    tasks.reverse()
    return tasks


def _slice(Fw: int, base: int, lo: int, hi: int) -> int:
    """Bits [lo, hi) of a descendant string that starts at ``base``, in answer position."""
    return ((Fw >> (lo - base)) & ((1 << (hi - lo)) - 1)) << lo


def _run_tasks(ix: QueryIndex, P: ProcIndex, tasks) -> int:
    m = ix.m
    td, layout = P.td, P.layout
    pos, begin, end = layout.pos, layout.begin, layout.end
    root_bag, desc_F = ix.root_bag, ix.desc_F
    A = 0
    for b, opp, own, seg in tasks:
        bag = td.bags[b]
        while seg:
            low = seg & -seg
            y = low.bit_length() - 1
            seg ^= low
            w = bag[y // m]
            d2 = y % m
            A |= 1 << (pos[w] * m + d2)
            rw = root_bag[w]
            if opp >= 0:
                A |= _slice(desc_F[w * m + d2], begin[rw], begin[opp], end[opp])
            if rw == b:
                # a path may climb to w above u's root bag and come back down on u's side
                A |= _slice(desc_F[w * m + d2], begin[rw], begin[own], end[own])
    return A


def source_query(ix: QueryIndex, u: int, d1: int) -> SourceAnswer:
    _check_ids(ix, u, d1)
    P = ix.procs[ix.proc_of[u]]
    m = ix.m
    A = ix.desc_F[u * m + d1] << P.layout.begin[ix.root_bag[u]]
    A |= _run_tasks(ix, P, _source_tasks(ix, u, d1))
    return SourceAnswer(A, P.layout.order, m)


# -- parallel variants ----------------------------------------------------------------

def default_workers() -> int:
    return os.cpu_count() or 1


def _split(items: Sequence, k: int) -> list:
    k = max(1, min(k, len(items)))
    return [items[i::k] for i in range(k)]


def pair_query_parallel(ix: QueryIndex, u: int, d1: int, v: int, d2: int, k: int,
                        executor: Executor | None = None) -> bool:
    """Same answer as :func:`pair_query`; the AND is checked in 64-bit blocks across ``k`` workers."""
    if k < 1:
        raise ValueError("need at least one worker")
    _check_ids(ix, u, d1)
    _check_ids(ix, v, d2)
    if ix.proc_of[u] != ix.proc_of[v]:
        return False
    words, seg = _pair_words(ix, u, d1, v, d2)
    if k == 1:
        return words != 0
    nblocks = (seg + 63) // 64
    found = threading.Event()

    def scan(blocks):
        for i in blocks:
            if found.is_set():
                return
            if (words >> (64 * i)) & 0xFFFFFFFFFFFFFFFF:
                found.set()
                return

    parts = _split(range(nblocks), k)
    own = executor is None
    ex = executor or ThreadPoolExecutor(max_workers=len(parts))
    try:
        for f in [ex.submit(scan, part) for part in parts]:
            f.result()
    finally:
        if own:
            ex.shutdown()
    return found.is_set()


def source_query_parallel(ix: QueryIndex, u: int, d1: int, k: int,
                          executor: Executor | None = None) -> SourceAnswer:
    """Same answer as :func:`source_query`; separator tasks are split by (bag, w, d) across workers."""
    if k < 1:
        raise ValueError("need at least one worker")
    _check_ids(ix, u, d1)
    if k == 1:
        return source_query(ix, u, d1)
    P = ix.procs[ix.proc_of[u]]
    m = ix.m
    fine = []
    for b, opp, own, seg in _source_tasks(ix, u, d1):
        while seg:
            low = seg & -seg
            fine.append((b, opp, own, low))
            seg ^= low
    parts = _split(fine, k)
    own = executor is None
    ex = executor or ThreadPoolExecutor(max_workers=max(1, len(parts)))
    try:
        futures = [ex.submit(_run_tasks, ix, P, part) for part in parts]
        A = ix.desc_F[u * m + d1] << P.layout.begin[ix.root_bag[u]]
        for f in futures:
            A |= f.result()
    finally:
        if own:
            ex.shutdown()
    return SourceAnswer(A, P.layout.order, m)


def source_batch(ix: QueryIndex, queries: Sequence[tuple[int, int]], k: int,
                 executor: Executor | None = None) -> list[SourceAnswer]:
    """Answer many single-source queries with ``k`` worker threads."""
    if k <= 1:
        return [source_query(ix, u, d) for u, d in queries]
    own = executor is None
    ex = executor or ThreadPoolExecutor(max_workers=k)
    try:
        return list(ex.map(lambda q: source_query(ix, q[0], q[1]), queries))
    finally:
        if own:
            ex.shutdown()

