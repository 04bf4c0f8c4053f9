"""Distributive flow functions as succinct bipartite relations.

A relation over ``m`` extended facts (fact 0 is the tautological fact) is
stored as ``m`` row bitmasks: bit ``b`` of ``rows[a]`` is set when the pair
``(a, b)`` belongs to the relation. Rows are kept normalized so that two
relations are equal exactly when they describe the same function.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence


def iter_bits(mask: int) -> Iterator[int]:
    """Yield the indices of the set bits of ``mask`` in increasing order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def bits_to_mask(indices: Iterable[int]) -> int:
    mask = 0
    for i in indices:
        mask |= 1 << i
    return mask


class FactDomain:
    """Ordered fact names with the zero fact reserved at index 0."""

    ZERO = "0"

    def __init__(self, facts: Sequence[str]):
        facts = tuple(facts)
        if self.ZERO in facts:
            raise ValueError("fact name '0' is reserved for the zero fact")
        if len(set(facts)) != len(facts):
            raise ValueError("duplicate fact names in domain")
        self.facts = facts
        self._index = {name: i + 1 for i, name in enumerate(facts)}
        self._index[self.ZERO] = 0

    @property
    def size(self) -> int:
        return len(self.facts)

    @property
    def extended_size(self) -> int:
        return len(self.facts) + 1

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"unknown fact {name!r}") from None

    def name(self, index: int) -> str:
        return self.ZERO if index == 0 else self.facts[index - 1]

    def __eq__(self, other):
        return isinstance(other, FactDomain) and other.facts == self.facts

    def __hash__(self):
        return hash(self.facts)

    def __repr__(self):
        return f"FactDomain({list(self.facts)!r})"


def _normalize(rows: Sequence[int]) -> tuple[int, ...]:
    full = (1 << len(rows)) - 1
    base = (rows[0] | 1) & full
    out = [base]
    # rows of real facts never hit 0 and never repeat what f(empty) already gives
    drop = base | 1
    for r in rows[1:]:
        out.append(r & full & ~drop)
    return tuple(out)


@dataclass(frozen=True)
class FlowRelation:
    rows: tuple[int, ...]

    @classmethod
    def from_rows(cls, rows: Sequence[int]) -> "FlowRelation":
        return cls(_normalize(rows))

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, int]], size: int) -> "FlowRelation":
        rows = [0] * size
        for a, b in pairs:
            if not (0 <= a < size and 0 <= b < size):
                raise ValueError(f"fact index out of range in pair {(a, b)}")
            if b == 0 and a != 0:
                raise ValueError(f"pair {(a, b)} maps a fact onto the zero fact")
            rows[a] |= 1 << b
        return cls.from_rows(rows)

    @classmethod
    def identity(cls, size: int) -> "FlowRelation":
        return cls(tuple(1 << a for a in range(size)))

    @classmethod
    def gen_kill(cls, size: int, gen: Iterable[int] = (), kill: Iterable[int] = ()) -> "FlowRelation":
        """Relation of ``lambda x: (x - kill) | gen``."""
        gen_mask = bits_to_mask(gen)
        kill_mask = bits_to_mask(kill)
        rows = [1 | gen_mask]
        for a in range(1, size):
            rows.append(0 if (kill_mask >> a) & 1 else 1 << a)
        return cls.from_rows(rows)

    @property
    def size(self) -> int:
        return len(self.rows)

    def pairs(self) -> list[tuple[int, int]]:
        return [(a, b) for a, r in enumerate(self.rows) for b in iter_bits(r)]

    def __len__(self) -> int:
        return sum(r.bit_count() for r in self.rows)

    def degree_report(self) -> list[tuple[str, int, int]]:
        """(side, fact, degree) for every node of the bipartite graph."""
        out = [("src", a, r.bit_count()) for a, r in enumerate(self.rows)]
        for b in range(self.size):
            deg = sum((r >> b) & 1 for r in self.rows)
            out.append(("dst", b, deg))
        return out


def apply_mask(rel: FlowRelation, facts: int) -> int:
    """Bitmask form of :func:`apply`; bit 0 of ``facts`` is ignored."""
    out = rel.rows[0]
    facts &= ~1
    for a in iter_bits(facts):
        out |= rel.rows[a]
    return out & ~1


def apply(rel: FlowRelation, facts: Iterable[int]) -> set[int]:
    """Apply the flow function to a set of fact indices (each in 1..m-1)."""
    mask = 0
    for a in facts:
        if not 0 < a < rel.size:
            raise ValueError(f"fact index {a} out of range")
        mask |= 1 << a
    return set(iter_bits(apply_mask(rel, mask)))


def compose(f: FlowRelation, g: FlowRelation) -> FlowRelation:
    """Relation of ``g after f``: pairs (a, b) with (a, c) in f and (c, b) in g."""
    if f.size != g.size:
        raise ValueError("relations over different domains")
    rows = []
    for r in f.rows:
        acc = 0
        for c in iter_bits(r):
            acc |= g.rows[c]
        rows.append(acc)
    return FlowRelation.from_rows(rows)
