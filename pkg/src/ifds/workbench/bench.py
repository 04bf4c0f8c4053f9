"""Benchmark runner: per-algorithm preprocessing and query timings with answer checksums."""

from __future__ import annotations

import csv
import logging
import statistics
import time
import zlib
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .. import baselines
from ..exploded import build_exploded
from ..instance import Instance
from ..query import preprocess, pair_query, pair_query_parallel, source_query, source_query_parallel

log = logging.getLogger(__name__)

ALGORITHMS = ("tw", "cpp", "od", "nopp")


@dataclass
class BenchRecord:
    instance: str
    n: int
    domain: int
    width: int
    exploded_size: int
    algorithm: str
    threads: int
    preprocess_ms: float
    pair_mean_us: float
    pair_median_us: float
    source_mean_us: float
    source_median_us: float
    pairs_done: int
    sources_done: int
    status: str
    checksum: str


def _digest_pair(ans: bool) -> int:
    return 1 if ans else 0


def _digest_source(reached) -> int:
    return zlib.crc32(",".join(map(str, sorted(reached))).encode())


def _checksum(digests: list[int]) -> str:
    return format(zlib.crc32(",".join(map(str, digests)).encode()), "08x")


class _Clock:
    def __init__(self, budget: float | None):
        self.t0 = time.perf_counter()
        self.budget = budget

    def over(self) -> bool:
        return self.budget is not None and time.perf_counter() - self.t0 > self.budget


def _run_queries(pair_fn, source_fn, pairs, sources, clock):
    pair_t, source_t, digests = [], [], []
    timeout = False
    for q in pairs:
        if clock.over():
            timeout = True
            break
        t = time.perf_counter()
        a = pair_fn(*q)
        pair_t.append(time.perf_counter() - t)
        digests.append(_digest_pair(a))
    for q in sources:
        if timeout or clock.over():
            timeout = True
            break
        t = time.perf_counter()
        a = source_fn(*q)
        source_t.append(time.perf_counter() - t)
        digests.append(_digest_source(a))
    return pair_t, source_t, digests, timeout


def _us(ts, how):
    return how(ts) * 1e6 if ts else float("nan")


def bench_run(inst: Instance, pairs, sources, algorithms=ALGORITHMS, threads: int = 1,
              budget: float | None = 300.0, instance_id: str = "instance") -> list[BenchRecord]:
    """Time each algorithm on the same queries; raises if completed answers disagree."""
    eg = build_exploded(inst)
    size = eg.vertex_count + eg.edge_count
    width = -1
    results = {}
    for algo in algorithms:
        clock = _Clock(budget)
        prep = 0.0
        status = "ok"
        pair_t, source_t, digests = [], [], []
        if algo == "tw":
            t = time.perf_counter()
            ix = preprocess(inst)
            prep = time.perf_counter() - t
            width = ix.stats["width"]
            if threads > 1:
                pf = lambda u, d1, v, d2: pair_query_parallel(ix, u, d1, v, d2, threads)  # noqa: E731
                sf = lambda u, d: source_query_parallel(ix, u, d, threads).reachable()  # noqa: E731
            else:
                pf = lambda u, d1, v, d2: pair_query(ix, u, d1, v, d2)  # noqa: E731
                sf = lambda u, d: source_query(ix, u, d).reachable()  # noqa: E731
        elif algo == "cpp":
            t = time.perf_counter()
            try:
                table = baselines.cpp_build(inst, time_budget=budget)
            except baselines.BudgetExceeded:
                table = None
                status = "timeout"
            prep = time.perf_counter() - t
            pf = lambda u, d1, v, d2: baselines.cpp_pair(table, u, d1, v, d2)  # noqa: E731
            sf = lambda u, d: baselines.cpp_source(table, u, d)  # noqa: E731
        elif algo == "od":
            state = baselines.OdCache(inst)
            pf = lambda u, d1, v, d2: baselines.od_pair(state, u, d1, v, d2)  # noqa: E731
            sf = lambda u, d: baselines.od_source(state, u, d)  # noqa: E731
        elif algo == "nopp":
            pf = lambda u, d1, v, d2: baselines.nopp_pair(inst, u, d1, v, d2)  # noqa: E731
            sf = lambda u, d: baselines.nopp_source(inst, u, d)  # noqa: E731
        else:
            raise ValueError(f"unknown algorithm {algo!r}")
        if status == "ok":
            pair_t, source_t, digests, timed_out = _run_queries(pf, sf, pairs, sources, clock)
            if timed_out:
                status = "timeout"
        results[algo] = (prep, pair_t, source_t, digests, status)

    # answers must agree on every query that more than one algorithm completed
    reference = max((r[3] for r in results.values()), key=len, default=[])
    for algo, (_, _, _, digests, _) in results.items():
        if digests != reference[:len(digests)] and not _prefix_ok(digests, reference, len(pairs)):
            raise AssertionError(f"answers of {algo} disagree with the other algorithms")

    records = []
    for algo, (prep, pair_t, source_t, digests, status) in results.items():
        complete = len(pair_t) == len(pairs) and len(source_t) == len(sources)
        records.append(BenchRecord(
            instance_id, inst.sg.n, inst.domain.size, width, size, algo, threads, prep * 1e3,
            _us(pair_t, statistics.fmean), _us(pair_t, statistics.median),
            _us(source_t, statistics.fmean), _us(source_t, statistics.median),
            len(pair_t), len(source_t), status, _checksum(digests) if complete else ""))
    return records


def _prefix_ok(digests, reference, npairs) -> bool:
    """A run cut short during pair queries compares pair prefixes only."""
    k = min(len(digests), npairs)
    return digests[:k] == reference[:k] and len(digests) <= npairs


def write_csv(records: list[BenchRecord], path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=[f.name for f in fields(BenchRecord)])
        w.writeheader()
        for r in records:
            w.writerow(asdict(r))
    return path
