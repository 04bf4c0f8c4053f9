"""Bag-local closure plus bit-packed ancestor and descendant reachability.

Bit layouts (``m`` = number of extended facts):

* bag-local exploded index of ``(bag[i], d)`` is ``i * m + d``;
* an ancestor string of a vertex in bag ``b`` has ``delta[b] * m`` bits, the
  segment of ``b`` itself first (low bits), then its parent's, up to the root;
* descendant strings use the pre-order layout: vertices are numbered as their
  root bag is reached in a pre-order walk, ``(v, d)`` sits at ``pos[v] * m + d``,
  and the string of ``(u, d)`` starts at the first index of ``u``'s root bag.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .summarize import GHat
from .treedec import TreeDecomposition


def _bag_rows(gh: GHat, bag) -> list[int]:
    m, rel, offset = gh.m, gh.rel, gh.offset
    q = len(bag)
    rows = [1 << x for x in range(q * m)]
    for i, u in enumerate(bag):
        base = offset[u]
        im = i * m
        for j, v in enumerate(bag):
            r = rel.get(base + v)
            if r is None:
                continue
            shift = j * m
            for d in range(m):
                if r[d]:
                    rows[im + d] |= r[d] << shift
    return rows


def _close(rows: list[int]) -> list[int]:
    for j in range(len(rows)):
        rj = rows[j]
        bj = 1 << j
        if rj == bj:
            continue
        rows = [r | rj if r & bj else r for r in rows]
    return rows


def _write_back(gh: GHat, bag, rows: list[int]) -> None:
    m, rel, succ, offset = gh.m, gh.rel, gh.succ, gh.offset
    full = (1 << m) - 1
    for i, u in enumerate(bag):
        base = offset[u]
        urows = rows[i * m:(i + 1) * m]
        for j, v in enumerate(bag):
            shift = j * m
            vals = [(r >> shift) & full for r in urows]
            if i == j:
                vals = [x & ~(1 << d) for d, x in enumerate(vals)]
            if not any(vals):
                continue
            cur = rel.get(base + v)
            if cur is None:
                rel[base + v] = vals
                succ[u].append(v)
            else:
                for d in range(m):
                    cur[d] |= vals[d]


def compute_local(gh: GHat, td: TreeDecomposition) -> list[list[int]]:
    """Leaf-peeling closure: every bag bottom-up, then top-down again.

    Found edges are added to ``gh``. Returns, per bag, the closure rows over the
    bag-local exploded index; together they are the co-bagged reachability edges.
    """
    closures: list[list[int]] = [[] for _ in range(len(td))]
    post = td.postorder()
    for b in post:
        rows = _close(_bag_rows(gh, td.bags[b]))
        _write_back(gh, td.bags[b], rows)
        closures[b] = rows
    for b in td.order[1:]:
        rows = _close(_bag_rows(gh, td.bags[b]))
        _write_back(gh, td.bags[b], rows)
        closures[b] = rows
    return closures


def local_edges(td: TreeDecomposition, closures, m: int) -> set[tuple[int, int]]:
    """Decode the closures into global exploded edge pairs (reflexive pairs included)."""
    out = set()
    for b, rows in enumerate(closures):
        bag = td.bags[b]
        for x, r in enumerate(rows):
            u = bag[x // m]
            src = u * m + x % m
            while r:
                low = r & -r
                y = low.bit_length() - 1
                r ^= low
                out.add((src, bag[y // m] * m + y % m))
    return out


def _transpose(rows: list[int]) -> list[int]:
    out = [0] * len(rows)
    for x, r in enumerate(rows):
        bx = 1 << x
        while r:
            low = r & -r
            out[low.bit_length() - 1] |= bx
            r ^= low
    return out


@dataclass
class AncestorSets:
    """Ancestor strings at each vertex's root bag (``F`` forward, ``Fp`` backward).

    Keys are global exploded ids. ``per_bag`` keeps every bag's strings when requested,
    keyed by ``(bag, bag-local index)``.
    """
    F: dict[int, int] = field(default_factory=dict)
    Fp: dict[int, int] = field(default_factory=dict)
    per_bag: dict[tuple[int, int], tuple[int, int]] | None = None


def compute_ancestors(closures, td: TreeDecomposition, m: int, keep_all: bool = False) -> AncestorSets:
    out = AncestorSets(per_bag={} if keep_all else None)
    live: dict[int, tuple[list[int], list[int], dict[int, int]]] = {}
    pending = [len(c) for c in td.children]
    root_bag = td.root_bag
    for b in td.order:
        bag = td.bags[b]
        k = len(bag) * m
        p = td.parent[b]
        init = [1 << x for x in range(k)]
        init_p = list(init)
        if p >= 0:
            pF, pFp, ppos = live[p]
            for i, v in enumerate(bag):
                j = ppos.get(v)
                if j is None:
                    continue
                for d in range(m):
                    init[i * m + d] |= pF[j * m + d] << k
                    init_p[i * m + d] |= pFp[j * m + d] << k
            pending[p] -= 1
            if pending[p] == 0:
                del live[p]
        rows = closures[b]
        F = []
        for r in rows:
            acc = 0
            while r:
                low = r & -r
                acc |= init[low.bit_length() - 1]
                r ^= low
            F.append(acc)
        Fp = []
        for r in _transpose(rows):
            acc = 0
            while r:
                low = r & -r
                acc |= init_p[low.bit_length() - 1]
                r ^= low
            Fp.append(acc)
        if pending[b]:
            live[b] = (F, Fp, {v: i for i, v in enumerate(bag)})
        for i, v in enumerate(bag):
            if root_bag[v] == b:
                for d in range(m):
                    out.F[v * m + d] = F[i * m + d]
                    out.Fp[v * m + d] = Fp[i * m + d]
        if keep_all:
            for x in range(k):
                out.per_bag[(b, x)] = (F[x], Fp[x])
    return out


@dataclass
class Layout:
    """Pre-order vertex numbering of one procedure."""
    order: list[int]
    pos: dict[int, int]
    begin: list[int]  # per bag, first exploded index of its subtree
    end: list[int]  # per bag, one past the last


def preorder_layout(td: TreeDecomposition, m: int) -> Layout:
    order: list[int] = []
    begin = [0] * len(td)
    end = [0] * len(td)
    for b in td.order:
        begin[b] = len(order) * m
        for v in td.bags[b]:
            if td.root_bag[v] == b:
                order.append(v)
    for b in td.postorder():
        e = begin[b] + sum(1 for v in td.bags[b] if td.root_bag[v] == b) * m
        for c in td.children[b]:
            e = max(e, end[c])
        end[b] = e
    return Layout(order, {v: i for i, v in enumerate(order)}, begin, end)


def compute_descendants(closures, td: TreeDecomposition, layout: Layout, m: int) -> dict[int, int]:
    """Bottom-up union of descendant strings, relative to each root bag's start."""
    root_bag = td.root_bag
    begin = layout.begin
    F: dict[int, int] = {}
    for v in layout.order:
        off = layout.pos[v] * m - begin[root_bag[v]]
        for d in range(m):
            F[v * m + d] = 1 << (off + d)
    for b in td.postorder():
        bag = td.bags[b]
        rooted = 0
        for i, v in enumerate(bag):
            if root_bag[v] == b:
                rooted |= ((1 << m) - 1) << (i * m)
        if not rooted:
            continue
        snap = {}
        for i, v in enumerate(bag):
            if root_bag[v] == b:
                for d in range(m):
                    snap[i * m + d] = F[v * m + d]
        rows = closures[b]
        for i, u in enumerate(bag):
            shift_base = begin[b] - begin[root_bag[u]]
            for d in range(m):
                r = rows[i * m + d] & rooted
                if not r:
                    continue
                x = u * m + d
                acc = F[x]
                while r:
                    low = r & -r
                    acc |= snap[low.bit_length() - 1] << shift_base
                    r ^= low
                F[x] = acc
    return F
