"""Tree decompositions of flow graphs: build, rebalance, and LCA queries."""

from __future__ import annotations

import heapq
import logging
import math
import random
from typing import Iterable, Sequence

log = logging.getLogger(__name__)

DEFAULT_WIDTH_CAP = 10


class TreeDecomposition:
    """Rooted tree of bags. Bag ids are dense ints, ``parent[root] == -1``."""

    def __init__(self, bags: Sequence[Sequence[int]], parent: Sequence[int]):
        self.bags = [tuple(b) for b in bags]
        self.parent = list(parent)
        roots = [b for b, p in enumerate(self.parent) if p < 0]
        if len(roots) != 1:
            raise ValueError(f"expected exactly one root bag, found {len(roots)}")
        self.root = roots[0]
        self.children: list[list[int]] = [[] for _ in self.bags]
        for b, p in enumerate(self.parent):
            if p >= 0:
                self.children[p].append(b)
        self.order = self._preorder()
        if len(self.order) != len(self.bags):
            raise ValueError("parent array does not describe a tree")
        self.depth = [0] * len(self.bags)
        self.delta = [0] * len(self.bags)
        for b in self.order:
            p = self.parent[b]
            self.depth[b] = self.depth[p] + 1 if p >= 0 else 0
            self.delta[b] = len(self.bags[b]) + (self.delta[p] if p >= 0 else 0)
        self.root_bag: dict[int, int] = {}
        for b in self.order:
            for v in self.bags[b]:
                if v not in self.root_bag:
                    self.root_bag[v] = b

    def _preorder(self) -> list[int]:
        out = []
        stack = [self.root]
        while stack:
            b = stack.pop()
            out.append(b)
            stack.extend(reversed(self.children[b]))
        return out

    @property
    def width(self) -> int:
        return max((len(b) for b in self.bags), default=0) - 1

    @property
    def height(self) -> int:
        return max(self.depth, default=0)

    def __len__(self) -> int:
        return len(self.bags)

    def postorder(self) -> list[int]:
        return self.order[::-1]

    def dump(self, names: Sequence[str] | None = None) -> str:
        lines = []
        for b in self.order:
            vs = " ".join(names[v] if names else str(v) for v in self.bags[b])
            lines.append(f"bag {b} parent={self.parent[b]} depth={self.depth[b]} {{{vs}}}")
        return "\n".join(lines) + "\n"


def _undirected(vertices: Iterable[int], edges: Iterable[tuple[int, int]]) -> dict[int, set[int]]:
    adj = {v: set() for v in vertices}
    for u, v in edges:
        if u != v:
            adj[u].add(v)
            adj[v].add(u)
    return adj


def _fill(adj, v) -> int:
    nb = adj[v]
    k = len(nb)
    missing = k * (k - 1) // 2
    for a in nb:
        missing -= len(adj[a] & nb) / 2
    return int(missing)


def elimination_order(vertices: Sequence[int], edges: Iterable[tuple[int, int]]) -> tuple[list[int], dict]:
    """Greedy min-fill elimination (ties: smaller degree, then vertex id).

    Returns the order and, per vertex, its higher neighbourhood at elimination time.
    """
    adj = _undirected(vertices, edges)
    heap = [(_fill(adj, v), len(adj[v]), v) for v in vertices]
    heapq.heapify(heap)
    current = {v: (f, d) for f, d, v in heap}
    order, higher = [], {}
    done = set()
    while heap:
        f, d, v = heapq.heappop(heap)
        if v in done or current[v] != (f, d):
            continue
        nb = adj[v]
        order.append(v)
        higher[v] = set(nb)
        done.add(v)
        nbl = list(nb)
        for i, a in enumerate(nbl):
            adj[a].discard(v)
            for b in nbl[i + 1:]:
                if b not in adj[a]:
                    adj[a].add(b)
                    adj[b].add(a)
        del adj[v]
        touched = set(nb)
        for a in nb:
            touched |= adj[a]
        for w in touched:
            key = (_fill(adj, w), len(adj[w]))
            if current[w] != key:
                current[w] = key
                heapq.heappush(heap, (key[0], key[1], w))
    return order, higher


def decompose_graph(vertices: Sequence[int], edges: Iterable[tuple[int, int]],
                    width_cap: int = DEFAULT_WIDTH_CAP) -> TreeDecomposition:
    vertices = list(vertices)
    if not vertices:
        raise ValueError("cannot decompose an empty graph")
    edges = list(edges)
    order, higher = elimination_order(vertices, edges)
    pos = {v: i for i, v in enumerate(order)}
    bag = {v: frozenset(higher[v] | {v}) for v in order}
    # tree over elimination nodes, undirected
    tadj: dict[int, set[int]] = {v: set() for v in order}
    roots = []
    for v in order:
        if higher[v]:
            p = min(higher[v], key=pos.__getitem__)
            tadj[v].add(p)
            tadj[p].add(v)
        else:
            roots.append(v)
    for r in roots[1:]:
        tadj[r].add(roots[0])
        tadj[roots[0]].add(r)

    # contract bags contained in a neighbour
    alive = set(order)
    work = list(order)
    while work:
        a = work.pop()
        if a not in alive:
            continue
        for b in tadj[a]:
            if bag[a] <= bag[b]:
                for c in tadj[a]:
                    if c != b:
                        tadj[c].discard(a)
                        tadj[c].add(b)
                        tadj[b].add(c)
                        work.append(c)
                tadj[b].discard(a)
                alive.discard(a)
                del tadj[a]
                work.append(b)
                break

    nodes = sorted(alive, key=pos.__getitem__)
    local = {v: i for i, v in enumerate(nodes)}
    root = nodes[-1]
    parent = [-1] * len(nodes)
    seen = {root}
    stack = [root]
    while stack:
        a = stack.pop()
        for b in tadj[a]:
            if b not in seen:
                seen.add(b)
                parent[local[b]] = local[a]
                stack.append(b)
    td = TreeDecomposition([sorted(bag[v]) for v in nodes], parent)
    if td.width > width_cap:
        log.warning("decomposition width %d exceeds cap %d", td.width, width_cap)
    return td


def decompose(proc, width_cap: int = DEFAULT_WIDTH_CAP) -> TreeDecomposition:
    return decompose_graph(proc.vertices, proc.edges, width_cap)


# -- rebalancing --------------------------------------------------------------

def _centroid(nodes, adj, weight) -> int:
    """Node whose removal leaves components of weight at most half the total."""
    root = nodes[0]
    parent = {root: None}
    order = [root]
    for a in order:
        for b in adj[a]:
            if b not in parent and b in weight:
                parent[b] = a
                order.append(b)
    sub = {}
    for a in reversed(order):
        sub[a] = weight[a] + sum(sub[b] for b in adj[a] if b in weight and parent.get(b) == a)
    total = sub[root]
    best, best_val = root, None
    for a in order:
        worst = total - sub[a]
        for b in adj[a]:
            if b in weight and parent.get(b) == a:
                worst = max(worst, sub[b])
        if best_val is None or worst < best_val:
            best, best_val = a, worst
    return best


def balance_binarize(td: TreeDecomposition) -> TreeDecomposition:
    """Rebuild ``td`` as a binary decomposition of logarithmic height.

    Each component of the old tree is split at a centroid (by bag count, or by
    boundary edges once three of them touch the component); the new bag is the
    centroid bag plus the separators on the component's boundary. Nodes with more
    than two subtrees are binarized through copy bags, smallest subtrees deepest.
    """
    if len(td) == 1:
        return TreeDecomposition([td.bags[0]], [-1])
    adj = [set(td.children[b]) for b in range(len(td))]
    for b, p in enumerate(td.parent):
        if p >= 0:
            adj[b].add(p)
    sets = [frozenset(b) for b in td.bags]

    new_bags: list[tuple[int, ...]] = []
    new_parent: list[int] = []

    def add_bag(vs, parent):
        new_bags.append(vs)
        new_parent.append(parent)
        return len(new_bags) - 1

    # explicit stack of (component nodes, boundary [(inner node, separator)], parent slot)
    # a parent slot is (new bag id) or -1 for the root
    stack = [(list(range(len(td))), [], -1)]
    while stack:
        nodes, boundary, parent = stack.pop()
        member = set(nodes)
        if len(boundary) >= 3:
            weight = {a: 0 for a in nodes}
            for a, _ in boundary:
                weight[a] += 1
        else:
            weight = {a: 1 for a in nodes}
        c = _centroid(nodes, adj, weight)
        vs = set(sets[c])
        for _, sep in boundary:
            vs |= sep
        bag_vs = tuple(sorted(vs))
        me = add_bag(bag_vs, parent)

        member.discard(c)
        comps = []
        label = {}
        for start in adj[c]:
            if start not in member or start in label:
                continue
            comp = [start]
            label[start] = len(comps)
            for a in comp:
                for b in adj[a]:
                    if b in member and b not in label:
                        label[b] = len(comps)
                        comp.append(b)
            comps.append(comp)
        bounds = [[] for _ in comps]
        for a, sep in boundary:
            if a != c:
                bounds[label[a]].append((a, sep))
        for b in adj[c]:
            if b in label:
                bounds[label[b]].append((b, sets[b] & sets[c]))

        if len(comps) <= 2:
            for comp, bd in zip(comps, bounds):
                stack.append((comp, bd, me))
            continue
        # Huffman-style pairing under copy bags; deferred children are attached at pop time
        heap = [(len(comp), i, ("comp", comp, bd)) for i, (comp, bd) in enumerate(zip(comps, bounds))]
        heapq.heapify(heap)
        tick = len(heap)
        while len(heap) > 2:
            s1, _, a = heapq.heappop(heap)
            s2, _, b = heapq.heappop(heap)
            heapq.heappush(heap, (s1 + s2, tick, ("copy", a, b)))
            tick += 1
        pending = [(item, me) for _, _, item in heap]
        while pending:
            item, par = pending.pop()
            if item[0] == "comp":
                stack.append((item[1], item[2], par))
            else:
                cp = add_bag(bag_vs, par)
                pending.append((item[1], cp))
                pending.append((item[2], cp))
    return TreeDecomposition(new_bags, new_parent)


# -- lowest common ancestors ------------------------------------------------------

class LcaIndex:
    """Euler tour plus sparse table over depths: constant-time queries."""

    def __init__(self, td: TreeDecomposition):
        self.first = [0] * len(td)
        euler = []
        depth = td.depth
        stack = [(td.root, 0)]
        while stack:
            b, i = stack.pop()
            if i == 0:
                self.first[b] = len(euler)
            euler.append(b)
            kids = td.children[b]
            if i < len(kids):
                stack.append((b, i + 1))
                stack.append((kids[i], 0))
        self.euler = euler
        level = euler
        table = [level]
        span = 1
        while 2 * span <= len(euler):
            prev = table[-1]
            level = [a if depth[a] <= depth[b] else b
                     for a, b in zip(prev, prev[span:])]
            table.append(level)
            span *= 2
        self.table = table
        self.depth = depth

    def lca(self, a: int, b: int) -> int:
        i, j = self.first[a], self.first[b]
        if i > j:
            i, j = j, i
        k = (j - i + 1).bit_length() - 1
        row = self.table[k]
        x, y = row[i], row[j - (1 << k) + 1]
        return x if self.depth[x] <= self.depth[y] else y


def lca(idx: LcaIndex, a: int, b: int) -> int:
    return idx.lca(a, b)


# -- checks -------------------------------------------------------------------------

def validate(td: TreeDecomposition, vertices: Iterable[int], edges: Iterable[tuple[int, int]]) -> list[str]:
    """Problems with coverage, edge containment or connectivity; empty when valid."""
    problems = []
    holders: dict[int, list[int]] = {}
    for b, vs in enumerate(td.bags):
        for v in vs:
            holders.setdefault(v, []).append(b)
    for v in vertices:
        if v not in holders:
            problems.append(f"vertex {v} in no bag")
    sets = [set(b) for b in td.bags]
    for u, v in edges:
        if not any(v in sets[b] for b in holders.get(u, ())):
            problems.append(f"edge {u}-{v} in no bag")
    for v, bs in holders.items():
        # bags holding v are connected iff exactly one of them has a parent without v
        tops = [b for b in bs if td.parent[b] < 0 or v not in sets[td.parent[b]]]
        if len(tops) != 1:
            problems.append(f"bags of vertex {v} are not connected")
    return problems


def verify_cut_property(td: TreeDecomposition, vertices: Iterable[int], edges: Iterable[tuple[int, int]],
                        samples: int = 50, seed: int = 0, tree_edges=None) -> list[str]:
    """For sampled tree edges, check the shared vertices separate the two sides."""
    adj = _undirected(vertices, edges)
    candidates = [(b, td.parent[b]) for b in range(len(td)) if td.parent[b] >= 0]
    if tree_edges is None:
        rng = random.Random(seed)
        tree_edges = candidates if len(candidates) <= samples else rng.sample(candidates, samples)
    problems = []
    for child, par in tree_edges:
        below = set()
        stack = [child]
        sub = []
        while stack:
            b = stack.pop()
            sub.append(b)
            stack.extend(td.children[b])
        sub_set = set(sub)
        for b in sub:
            below.update(td.bags[b])
        above = set()
        for b in range(len(td)):
            if b not in sub_set:
                above.update(td.bags[b])
        sep = set(td.bags[child]) & set(td.bags[par])
        if below & above != sep:
            problems.append(f"tree edge {child}-{par}: sides overlap outside the separator")
        # flood from the lower side avoiding the separator
        start = below - sep
        seen = set(start)
        frontier = list(start)
        while frontier:
            x = frontier.pop()
            for y in adj[x]:
                if y not in seen and y not in sep:
                    seen.add(y)
                    frontier.append(y)
        if seen & (above - sep):
            problems.append(f"tree edge {child}-{par}: separator does not disconnect the sides")
    return problems


def height_bound(td: TreeDecomposition, factor: float = 4.0) -> float:
    return factor * math.log2(max(2, len(td)))
