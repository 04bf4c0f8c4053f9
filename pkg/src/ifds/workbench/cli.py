"""Command line entry point: ``ifds preprocess|query|gen|bench|dump``."""

from __future__ import annotations

import argparse
import logging
import re
import sys
import time
from pathlib import Path

from .. import baselines
from ..exploded import build_exploded
from ..instance import dump_instance, load_instance, parse_queries
from ..query import (SourceAnswer, pair_query, pair_query_parallel, preprocess,
                     source_query, source_query_parallel)
from ..serialize import read_index, write_index
from ..summarize import compute_summaries, dump_summaries
from ..treedec import DEFAULT_WIDTH_CAP, balance_binarize, decompose
from .generate import gen_queries, gen_random, resolve_seed
from .miniir import KINDS, gen_analysis, random_program

log = logging.getLogger("ifds")

BASELINES = ("tw", "nopp", "cpp", "od")


def parse_budget(text: str) -> float:
    """Seconds from ``300``, ``300s``, ``5m`` or ``1h``."""
    m = re.fullmatch(r"\s*([0-9]*\.?[0-9]+)\s*([smh]?)\s*", text)
    if not m:
        raise argparse.ArgumentTypeError(f"bad duration {text!r}")
    return float(m.group(1)) * {"": 1, "s": 1, "m": 60, "h": 3600}[m.group(2)]


def _cmd_preprocess(args) -> int:
    inst = load_instance(args.instance)
    t = time.perf_counter()
    ix = preprocess(inst, width_cap=args.width_cap)
    write_index(ix, args.out)
    log.info("preprocessed n=%d in %.3fs, width %d", inst.sg.n, time.perf_counter() - t, ix.stats["width"])
    return 0


def _answerers(ix, baseline: str, par: int):
    inst = ix.inst
    if baseline == "tw":
        if par > 1:
            return (lambda u, d1, v, d2: pair_query_parallel(ix, u, d1, v, d2, par),
                    lambda u, d: source_query_parallel(ix, u, d, par))
        return (lambda u, d1, v, d2: pair_query(ix, u, d1, v, d2),
                lambda u, d: source_query(ix, u, d))

    def as_answer(u, reached):
        # baseline answers are sets; lay them out like the index does
        P = ix.procs[inst.sg.proc_of[u]]
        m, pos = inst.m, P.layout.pos
        bits = 0
        for y in reached:
            w, d = divmod(y, m)
            bits |= 1 << (pos[w] * m + d)
        return SourceAnswer(bits, P.layout.order, m)

    if baseline == "nopp":
        return (lambda u, d1, v, d2: baselines.nopp_pair(inst, u, d1, v, d2),
                lambda u, d: as_answer(u, baselines.nopp_source(inst, u, d)))
    if baseline == "cpp":
        table = baselines.cpp_build(inst)
        return (lambda u, d1, v, d2: baselines.cpp_pair(table, u, d1, v, d2),
                lambda u, d: as_answer(u, baselines.cpp_source(table, u, d)))
    state = baselines.OdCache(inst)
    return (lambda u, d1, v, d2: baselines.od_pair(state, u, d1, v, d2),
            lambda u, d: as_answer(u, baselines.od_source(state, u, d)))


def _cmd_query(args) -> int:
    ix = read_index(args.index)
    if args.instance:
        other = load_instance(args.instance)
        if dump_instance(other) != dump_instance(ix.inst):
            print("error: --instance differs from the instance stored in the index", file=sys.stderr)
            return 2
    inst = ix.inst
    queries = parse_queries(Path(args.queries).read_text(), inst)
    pair_fn, source_fn = _answerers(ix, args.baseline, args.par)
    names, dom = inst.sg.vertex_names, inst.domain
    facts = ",".join(dom.name(d) for d in range(inst.m))
    out = sys.stdout
    for q in queries:
        if q.kind == "pair":
            out.write("1\n" if pair_fn(q.u, q.d1, q.v, q.d2) else "0\n")
        else:
            ans = source_fn(q.u, q.d1)
            out.write(f"# vertexOrder={','.join(names[v] for v in ans.order)} factOrder={facts}\n")
            out.write(ans.to_hex() + "\n")
    return 0


def _cmd_gen(args) -> int:
    seed = resolve_seed(args.seed)
    if args.kind == "random":
        inst = gen_random(seed, args.n, args.domain, width_bound=args.width_bound,
                          call_density=args.call_density)
    else:
        prog = random_program(seed, args.n, max(1, args.domain))
        inst = gen_analysis(prog, args.kind)
    Path(args.out).write_text(dump_instance(inst))
    if args.queries_out:
        pairs, sources = gen_queries(inst, args.pairs, args.sources, seed)
        nm, dom = inst.sg.vertex_names, inst.domain
        lines = [f"pair {nm[u]} {dom.name(a)} {nm[v]} {dom.name(b)}" for u, a, v, b in pairs]
        lines += [f"source {nm[u]} {dom.name(a)}" for u, a in sources]
        Path(args.queries_out).write_text("\n".join(lines) + "\n")
    return 0


def _cmd_bench(args) -> int:
    from .bench import bench_run, write_csv
    from .plotting import plot_bench

    inst = load_instance(args.instance)
    algos = [a.strip() for a in args.algos.split(",") if a.strip()]
    for a in algos:
        if a not in BASELINES:
            print(f"error: unknown algorithm {a!r}", file=sys.stderr)
            return 2
    pairs, sources = gen_queries(inst, args.pairs, args.sources, resolve_seed(args.seed))
    records = bench_run(inst, pairs, sources, algos, threads=args.threads, budget=args.budget,
                        instance_id=Path(args.instance).stem)
    csv_path = write_csv(records, args.csv)
    if not args.no_plot:
        plot_bench(records, csv_path.with_suffix(".png"))
    for r in records:
        print(f"{r.algorithm:5s} status={r.status} preprocess_ms={r.preprocess_ms:.1f} "
              f"pair_mean_us={r.pair_mean_us:.1f} source_mean_us={r.source_mean_us:.1f} checksum={r.checksum}")
    return 0


def _cmd_dump(args) -> int:
    inst = load_instance(args.instance)
    if args.what == "summaries":
        eg = build_exploded(inst)
        summaries, _ = compute_summaries(eg, keep_shortcuts=False)
        sys.stdout.write(dump_summaries(summaries, eg))
    else:
        names = inst.sg.vertex_names
        for p in inst.sg.procedures:
            td = decompose(p, args.width_cap)
            if args.balanced:
                td = balance_binarize(td)
            # bag vertices are global ids; the dump names them
            print(f"# procedure {p.name} width={td.width} bags={len(td)}")
            sys.stdout.write(td.dump(names))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ifds", description="Same-context IFDS reachability queries.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="build a query index from an instance file")
    p.add_argument("--instance", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--width-cap", type=int, default=DEFAULT_WIDTH_CAP)
    p.set_defaults(func=_cmd_preprocess)

    p = sub.add_parser("query", help="answer a query file against an index")
    p.add_argument("--index", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--par", type=int, default=1, help="worker threads per query")
    p.add_argument("--baseline", choices=BASELINES, default="tw")
    p.add_argument("--instance", help="optional instance file, checked against the index")
    p.set_defaults(func=_cmd_query)

    p = sub.add_parser("gen", help="generate an instance")
    p.add_argument("--kind", choices=("random",) + KINDS, default="random")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--domain", type=int, default=4, help="facts (random) or variables (analyses)")
    p.add_argument("--width-bound", type=int, default=4)
    p.add_argument("--call-density", type=float, default=0.05)
    p.add_argument("--out", required=True)
    p.add_argument("--queries-out", help="also write a query file")
    p.add_argument("--pairs", type=int, default=100)
    p.add_argument("--sources", type=int, default=10)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("bench", help="time tw and the baselines on one instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--pairs", type=int, default=10000)
    p.add_argument("--sources", type=int, default=100)
    p.add_argument("--algos", default="tw,cpp,od,nopp")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--budget", type=parse_budget, default=300.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv", required=True)
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("dump", help="print summaries or tree decompositions")
    p.add_argument("what", choices=("summaries", "decomposition"))
    p.add_argument("--instance", required=True)
    p.add_argument("--width-cap", type=int, default=DEFAULT_WIDTH_CAP)
    p.add_argument("--balanced", action="store_true")
    p.set_defaults(func=_cmd_dump)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "par", 1) < 1 or getattr(args, "threads", 1) < 1:
        print("error: thread counts must be positive", file=sys.stderr)
        return 2
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
