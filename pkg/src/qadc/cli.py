"""Command-line front end.

Subcommands cover the full artifact lifecycle: synth (make a corpus),
train (fit a quantizer), build (encode an index), query (search it),
bench (recall + phase timings), sweep (code-layout comparison table)
and kernelbench (compiled vs pure-python scan kernels). The scan
kernel can be pinned with --kernel or the QADC_KERNEL variable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import adc, bench as benchmod, ivf, kernels, kmeans, synth, vecio
from . import pq as pqmod
from .bench import BenchConfig, BenchData
from .heap import NeighborHeap

_CONFIG_FIELDS = ("base", "learn", "query", "groundtruth", "m", "b", "opq",
                  "K", "ma", "R", "init", "method", "seed", "repeats",
                  "train_iters", "opq_iters", "query_limit", "variant")


def _kernel_flag(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kernel", choices=("auto",) + kernels.VARIANTS,
                   default=None,
                   help="pin the scan kernel (default: QADC_KERNEL or auto)")


def _apply_kernel(args) -> None:
    if getattr(args, "kernel", None):
        os.environ[kernels.ENV_VAR] = args.kernel


def _load_vectors(path: str) -> vecio.Dataset:
    if path.endswith(".bvecs"):
        return vecio.read_bvecs(path)
    return vecio.read_fvecs(path)


def _cmd_synth(args) -> int:
    corpus = synth.make_corpus(d=args.d, n_learn=args.n_learn,
                               n_base=args.n_base, n_query=args.n_query,
                               seed=args.seed, clusters=args.clusters,
                               spread=args.spread)
    os.makedirs(args.out_dir, exist_ok=True)
    vecio.write_fvecs(os.path.join(args.out_dir, "learn.fvecs"), corpus.learn)
    vecio.write_fvecs(os.path.join(args.out_dir, "base.fvecs"), corpus.base)
    vecio.write_fvecs(os.path.join(args.out_dir, "query.fvecs"), corpus.queries)
    gt = synth.ground_truth(corpus.base, corpus.queries, depth=args.gt_depth)
    vecio.write_ivecs(os.path.join(args.out_dir, "groundtruth.ivecs"), gt.ids)
    print(f"wrote {args.out_dir}: learn {corpus.learn.count}, "
          f"base {corpus.base.count}, query {corpus.queries.count}, "
          f"gt depth {gt.depth}")
    return 0


def _cmd_train(args) -> int:
    learn = _load_vectors(args.learn).data
    if args.ivf_k:
        coarse = kmeans.train(learn, args.ivf_k, iters=args.iters,
                              seed=args.seed)
        labels, _ = kmeans.assign_batch(coarse.centroids, learn)
        learn = learn - coarse.centroids[labels]
        print(f"training on residuals of {args.ivf_k} coarse cells")
    if args.opq:
        pq = pqmod.train_opq(learn, args.m, args.b, iters=args.iters,
                             opq_iters=args.opq_iters, seed=args.seed)
    else:
        pq = pqmod.train_pq(learn, args.m, args.b, iters=args.iters,
                            seed=args.seed)
    pqmod.save_model(pq, args.out)
    err = (pq.train_errors[-1] if pq.train_errors
           else pqmod.reconstruction_mse(pq, learn))
    print(f"saved {args.out}: m={pq.m} b={pq.b} d={pq.d} "
          f"rotation={'yes' if pq.rotation is not None else 'no'} "
          f"final train error {err:.6g}")
    return 0


def _cmd_build(args) -> int:
    pq = pqmod.load_model(args.model)
    base = _load_vectors(args.base)
    if args.k:
        learn = _load_vectors(args.learn).data if args.learn else None
        index = ivf.build(pq, args.k, base, iters=args.iters, seed=args.seed,
                          layout=args.layout, learn=learn)
    else:
        index = ivf.build_flat(pq, base, layout=args.layout)
    ivf.save_index(index, args.out)
    print(f"saved {args.out}: {index.count} codes in "
          f"{index.nlists} list(s), layout {index.layout}")
    return 0


def _cmd_query(args) -> int:
    _apply_kernel(args)
    pq = pqmod.load_model(args.model)
    index = ivf.load_index(args.index)
    queries = _load_vectors(args.queries)
    n = queries.count if args.limit is None else min(args.limit, queries.count)
    rows = []
    sums = dict.fromkeys(benchmod.PHASES, 0.0)
    for qi in range(n):
        res = adc.search(index, pq, queries.data[qi], R=args.r, ma=args.ma,
                         method=args.method, init=args.init)
        rows.append(res.ids)
        sums["index"] += res.timings.index_ms
        sums["tables"] += res.timings.tables_ms
        sums["scan"] += res.timings.scan_ms
        sums["total"] += res.timings.total_ms
    print(f"{n} queries, method {args.method}: " + "  ".join(
        f"{p} {sums[p] / n:.3f} ms" for p in benchmod.PHASES))
    if args.gt:
        gt = vecio.read_ivecs(args.gt)
        if gt.count > n:
            gt = vecio.GroundTruth(depth=gt.depth, count=n, ids=gt.ids[:n])
        for rp in benchmod.RECALL_POINTS:
            if rp <= min(args.r, min(r.shape[0] for r in rows)):
                print(f"R@{rp}: {benchmod.recall_at(rows, gt, rp):.4f}")
    if args.out:
        depth = min(r.shape[0] for r in rows)
        vecio.write_ivecs(args.out,
                          np.stack([r[:depth] for r in rows]).astype(np.int32))
        print(f"wrote ids to {args.out}")
    return 0


def _bench_config(args) -> BenchConfig:
    cfg = BenchConfig()
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as f:
            loaded = json.load(f)
        unknown = set(loaded) - set(_CONFIG_FIELDS)
        if unknown:
            raise SystemExit(f"unknown config keys: {sorted(unknown)}")
        for k, v in loaded.items():
            setattr(cfg, k, v)
    for name in _CONFIG_FIELDS:
        val = getattr(args, name.lower(), None)
        if val is not None:
            setattr(cfg, name, val)
    if getattr(args, "kernel", None):
        cfg.variant = None if args.kernel == "auto" else args.kernel
    return cfg


def _add_bench_data_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--base", help="base vectors (.fvecs/.bvecs)")
    p.add_argument("--learn", help="learning vectors")
    p.add_argument("--query", help="query vectors")
    p.add_argument("--groundtruth", help="ground truth (.ivecs)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--repeats", type=int, default=None)
    p.add_argument("--train-iters", type=int, default=None, dest="train_iters")
    p.add_argument("--query-limit", type=int, default=None, dest="query_limit")
    p.add_argument("--config", help="JSON file with BenchConfig fields")


def _cmd_bench(args) -> int:
    _apply_kernel(args)
    cfg = _bench_config(args)
    # sys.stdout resolved per call so output capture in tests sees it
    benchmod.run_bench(cfg, report_path=args.report, header=True,
                       out=sys.stdout)
    if args.report:
        print(f"report written to {args.report}")
    return 0


def _cmd_sweep(args) -> int:
    _apply_kernel(args)
    cfg = _bench_config(args)
    pairs = []
    for tok in args.pairs.split(","):
        tok = tok.strip().lower()
        if not tok:
            continue
        m, _, b = tok.partition("x")
        pairs.append((int(m), int(b)))
    benchmod.sweep_configs(cfg, pairs, out=sys.stdout)
    return 0


def _cmd_kernelbench(args) -> int:
    rng = np.random.default_rng(args.seed)
    m, n = args.m, args.n
    nblocks = (n + 15) // 16
    blocks = rng.integers(0, 256, size=(nblocks, m // 2, 16), dtype=np.uint8)
    qt = rng.integers(0, 16, size=(m, 16), dtype=np.uint8)
    ids = np.arange(nblocks * 16, dtype=np.int64)
    print(f"quantized scan of {nblocks * 16} codes, m={m}, R=100, "
          f"best of {args.repeats}")
    for variant in kernels.available_variants():
        best = float("inf")
        for _ in range(args.repeats):
            heap = NeighborHeap(100)
            t0 = time.perf_counter()
            kernels.scan_blocks(blocks, ids, qt, 0.0, 0.5, heap, variant)
            best = min(best, time.perf_counter() - t0)
        print(f"  {variant:<8} {best * 1e3:9.3f} ms")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="qadc",
        description="Product-quantization search with byte-quantized "
                    "in-register scan kernels")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--d", type=int, default=128)
    p.add_argument("--n-learn", type=int, default=25000)
    p.add_argument("--n-base", type=int, default=100000)
    p.add_argument("--n-query", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--clusters", type=int, default=64)
    p.add_argument("--spread", type=float, default=0.35)
    p.add_argument("--gt-depth", type=int, default=100)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("train", help="train a product quantizer")
    p.add_argument("--learn", required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--b", type=int, required=True)
    p.add_argument("--opq", action="store_true")
    p.add_argument("--opq-iters", type=int, default=10, dest="opq_iters")
    p.add_argument("--iters", type=int, default=25)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ivf-k", type=int, default=0, dest="ivf_k",
                   help="train on residuals of this many coarse cells")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("build", help="build an index from a model")
    p.add_argument("--model", required=True)
    p.add_argument("--base", required=True)
    p.add_argument("--k", type=int, default=0,
                   help="coarse cells; 0 builds a flat index")
    p.add_argument("--layout", choices=(ivf.LAYOUT_STANDARD,
                                        ivf.LAYOUT_TRANSPOSED),
                   default=ivf.LAYOUT_STANDARD)
    p.add_argument("--learn", help="coarse training vectors (default: base)")
    p.add_argument("--iters", type=int, default=25)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_build)

    p = sub.add_parser("query", help="search an index")
    p.add_argument("--model", required=True)
    p.add_argument("--index", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--r", type=int, default=100)
    p.add_argument("--ma", type=int, default=1)
    p.add_argument("--method", choices=("adc", "qadc"), default="adc")
    p.add_argument("--init", type=int, default=1000)
    p.add_argument("--limit", type=int, default=None)
    p.add_argument("--gt", help="ground truth for recall reporting")
    p.add_argument("--out", help="write result ids as .ivecs")
    _kernel_flag(p)
    p.set_defaults(func=_cmd_query)

    p = sub.add_parser("bench", help="recall and phase-timing benchmark")
    _add_bench_data_flags(p)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--b", type=int, default=None)
    p.add_argument("--opq", action=argparse.BooleanOptionalAction,
                   default=None)
    p.add_argument("--k", type=int, default=None, dest="k")
    p.add_argument("--ma", type=int, default=None)
    p.add_argument("--r", type=int, default=None)
    p.add_argument("--init", type=int, default=None)
    p.add_argument("--method", choices=("adc", "qadc"), default=None)
    p.add_argument("--opq-iters", type=int, default=None, dest="opq_iters")
    p.add_argument("--report", help="write line-delimited JSON report here")
    _kernel_flag(p)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("sweep", help="compare code layouts exhaustively")
    _add_bench_data_flags(p)
    p.add_argument("--pairs", default="16x4,8x8,4x16",
                   help="comma-separated m-x-b pairs")
    _kernel_flag(p)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("kernelbench",
                       help="compare compiled and pure-python kernels")
    p.add_argument("--m", type=int, default=16)
    p.add_argument("--n", type=int, default=200000)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_kernelbench)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
