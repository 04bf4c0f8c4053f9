from __future__ import annotations

import random
from pathlib import Path

from ifds.instance import load_instance
from ifds.summarize import GHat
from ifds.treedec import TreeDecomposition
from ifds.workbench.generate import gen_random

DATA = Path(__file__).parent / "data"


def callsite_instance():
    return load_instance(DATA / "callsite_example.json")


def ev(inst, vertex: str, fact: str) -> tuple[int, int]:
    """(vertex id, fact index) from names; fact "0" is the zero fact."""
    return inst.sg.vertex(vertex), inst.domain.index(fact)


def small_instance(seed: int, nmax: int = 40, dmax: int = 3, recursion: bool = True):
    """Seeded small instance with several procedures and dense calls."""
    r = random.Random(seed)
    return gen_random(seed, r.randint(1, nmax), r.randint(0, dmax), proc_size=r.choice([4, 6, 8, 12]),
                      call_density=r.choice([0.1, 0.2, 0.3]), recursion=recursion)


# seven-vertex graph with a width-2 decomposition; vertices v1..v7 are ids 0..6
SEVEN_EDGES = [(5, 1), (1, 2), (4, 5), (4, 3), (3, 4), (2, 3), (2, 7), (7, 6), (6, 2)]


def seven_graph():
    return list(range(7)), [(a - 1, b - 1) for a, b in SEVEN_EDGES]


def seven_tree() -> TreeDecomposition:
    """b1={v1,v2,v5} root, b2={v2,v3,v5}, b3={v3,v4,v5} and b4={v2,v6,v7} under b2."""
    bags = [(0, 1, 4), (1, 2, 4), (2, 3, 4), (1, 5, 6)]
    return TreeDecomposition(bags, [-1, 0, 1, 1])


def seven_ghat() -> GHat:
    gh = GHat(7, 1)
    for u, v in seven_graph()[1]:
        gh.add_edge(u, v)
    return gh
