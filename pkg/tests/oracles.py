"""Independent reachability oracles used by the tests.

Nothing here touches the summary worklist, the tree decompositions or the bit strings.
"""

from __future__ import annotations

from collections import deque

from ifds.instance import CALL, INTRA, RETURN, Instance
from ifds.relations import iter_bits


def _exploded_edges(inst: Instance):
    m = inst.m
    for u, v, kind in inst.sg.edges():
        for d1, row in enumerate(inst.relations[(u, v)].rows):
            for d2 in iter_bits(row):
                yield u * m + d1, v * m + d2, kind


def same_level_closure(inst: Instance) -> list[set[int]]:
    """Least fixpoint of  SL(x,x);  SL(x,y), y->z intra => SL(x,z);
    SL(x,(c,d)), (c,d)->(s,d') call, SL((s,d'),(e,d'')), (e,d'')->(r,d4) return to c's
    return site => SL(x,(r,d4)).  Plain chaotic iteration, no worklist tricks."""
    sg, m = inst.sg, inst.m
    N = sg.n * m
    intra = [[] for _ in range(N)]
    calls = [[] for _ in range(N)]
    rets = [[] for _ in range(N)]
    for x, y, kind in _exploded_edges(inst):
        if kind == INTRA:
            intra[x].append(y)
        elif kind == CALL:
            calls[x].append(y)
        else:
            rets[x].append(y)
    ret_site = {cs.call: cs.return_site for cs in sg.call_sites}
    SL = [{x} for x in range(N)]
    changed = True
    while changed:
        changed = False
        for x in range(N):
            S = SL[x]
            before = len(S)
            for y in list(S):
                S.update(intra[y])
                c = y // m
                for s in calls[y]:
                    for z in list(SL[s]):
                        for w in rets[z]:
                            if w // m == ret_site[c]:
                                S.add(w)
            if len(S) != before:
                changed = True
    return SL


def stack_search(inst: Instance, source: int, max_depth: int) -> set[int]:
    """Explicit-stack exploration of balanced paths from ``source``.

    Configurations are (exploded vertex, stack of pending return sites). A call
    pushes the call's return site, a return edge pops only a matching top. Returns
    the exploded vertices reached with an empty stack. Exact once ``max_depth``
    exceeds the deepest call chain needed; an under-approximation otherwise.
    """
    sg, m = inst.sg, inst.m
    ret_site = {cs.call: cs.return_site for cs in sg.call_sites}
    out = [[] for _ in range(sg.n * m)]
    for x, y, kind in _exploded_edges(inst):
        out[x].append((y, kind))
    start = (source, ())
    seen = {start}
    q = deque([start])
    found = set()
    while q:
        x, stack = q.popleft()
        if not stack:
            found.add(x)
        for y, kind in out[x]:
            if kind == INTRA:
                nxt = (y, stack)
            elif kind == CALL:
                if len(stack) >= max_depth:
                    continue
                nxt = (y, stack + (ret_site[x // m],))
            else:
                assert kind == RETURN
                if not stack or stack[-1] != y // m:
                    continue
                nxt = (y, stack[:-1])
            if nxt not in seen:
                seen.add(nxt)
                q.append(nxt)
    return found


def bfs_closure(succ, source: int) -> set[int]:
    """Reachable set under a successor function, source included."""
    seen = {source}
    q = deque([source])
    while q:
        x = q.popleft()
        for y in succ(x):
            if y not in seen:
                seen.add(y)
                q.append(y)
    return seen


def same_procedure_pairs(inst: Instance):
    sg, m = inst.sg, inst.m
    for p in sg.procedures:
        for u in p.vertices:
            for d1 in range(m):
                for v in p.vertices:
                    for d2 in range(m):
                        yield u, d1, v, d2


def stack_witness(inst: Instance, source: int, target: int, max_depth: int) -> list[int] | None:
    """A shortest balanced exploded path from ``source`` to ``target``, or None within the bound."""
    sg, m = inst.sg, inst.m
    ret_site = {cs.call: cs.return_site for cs in sg.call_sites}
    out = [[] for _ in range(sg.n * m)]
    for x, y, kind in _exploded_edges(inst):
        out[x].append((y, kind))
    start = (source, ())
    parent = {start: None}
    q = deque([start])
    while q:
        conf = q.popleft()
        x, stack = conf
        if x == target and not stack:
            walk = []
            while conf is not None:
                walk.append(conf[0])
                conf = parent[conf]
            return walk[::-1]
        for y, kind in out[x]:
            if kind == INTRA:
                nxt = (y, stack)
            elif kind == CALL:
                if len(stack) >= max_depth:
                    continue
                nxt = (y, stack + (ret_site[x // m],))
            else:
                if not stack or stack[-1] != y // m:
                    continue
                nxt = (y, stack[:-1])
            if nxt not in parent:
                parent[nxt] = conf
                q.append(nxt)
    return None
