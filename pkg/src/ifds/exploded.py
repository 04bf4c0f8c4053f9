"""Exploded supergraph: one copy of every vertex per extended fact."""

from __future__ import annotations

from typing import Iterator

from .instance import Instance
from .relations import iter_bits


class ExplodedGraph:
    """Exploded vertex ``(u, d)`` has id ``u * m + d``.

    Successors are expanded on demand from the per-vertex out-edge lists,
    each entry carrying the relation rows and the supergraph edge kind.
    """

    def __init__(self, inst: Instance):
        self.inst = inst
        self.sg = inst.sg
        self.m = inst.m
        self.n = inst.sg.n
        self.out: list[list[tuple[int, tuple[int, ...], int]]] = [[] for _ in range(self.n)]
        for u, v, kind in self.sg.edges():
            self.out[u].append((v, inst.relations[(u, v)].rows, kind))

    @property
    def vertex_count(self) -> int:
        return self.n * self.m

    def vid(self, u: int, d: int) -> int:
        return u * self.m + d

    def split(self, x: int) -> tuple[int, int]:
        return divmod(x, self.m)

    def successors(self, x: int) -> list[int]:
        u, d = divmod(x, self.m)
        m = self.m
        return [v * m + d2 for v, rows, _ in self.out[u] for d2 in iter_bits(rows[d])]

    def edges(self) -> Iterator[tuple[int, int, int]]:
        m = self.m
        for u in range(self.n):
            for v, rows, kind in self.out[u]:
                for d1, row in enumerate(rows):
                    for d2 in iter_bits(row):
                        yield u * m + d1, v * m + d2, kind

    @property
    def edge_count(self) -> int:
        return sum(r.bit_count() for u in range(self.n) for _, rows, _ in self.out[u] for r in rows)


def build_exploded(inst: Instance) -> ExplodedGraph:
    return ExplodedGraph(inst)
