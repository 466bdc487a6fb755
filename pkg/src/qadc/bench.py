"""Evaluation harness: recall and per-phase timing over a query set.

Recall@R' here is the fraction of queries whose true first nearest
neighbor appears in the top R' returned ids (not a precision over the
full ground-truth list). Queries run sequentially on one thread; each
phase is timed per query, summed, then averaged over queries and
repeats. The machine-readable report is line-delimited JSON that
round-trips through parse_report.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import adc, ivf, kmeans
from . import pq as pqmod
from .vecio import Dataset, GroundTruth, read_bvecs, read_fvecs, read_ivecs

PHASES = ("index", "tables", "scan", "total")
RECALL_POINTS = (1, 10, 100)
DEFAULT_QUERY_LIMIT = 1000  # evaluation uses the first 1000 queries


@dataclass
class BenchConfig:
    base: str | None = None
    learn: str | None = None
    query: str | None = None
    groundtruth: str | None = None
    m: int = 8
    b: int = 8
    opq: bool = False
    K: int = 0  # 0 = flat index, exhaustive scan
    ma: int = 1
    R: int = 100
    init: int = 1000
    method: str = "adc"
    seed: int = 0
    repeats: int = 1
    train_iters: int = 25
    opq_iters: int = 10
    query_limit: int | None = DEFAULT_QUERY_LIMIT
    variant: str | None = None  # kernel pin; None defers to QADC_KERNEL

    def validate(self) -> None:
        for name in ("m", "b", "R", "init", "repeats", "train_iters"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.b not in pqmod.SUPPORTED_BITS:
            raise ValueError(f"b must be one of {pqmod.SUPPORTED_BITS}")
        if self.method not in ("adc", "qadc"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.method == "qadc" and self.b != 4:
            raise ValueError("qadc requires b=4")
        if self.K < 0:
            raise ValueError("K must be non-negative (0 = exhaustive)")
        if self.K and not 1 <= self.ma <= self.K:
            raise ValueError("ma must be in 1..K")
        if self.opq_iters < 0:
            raise ValueError("opq_iters must be non-negative")


@dataclass(frozen=True)
class PhaseStat:
    mean_ms: float
    std_ms: float


@dataclass(frozen=True)
class BenchReport:
    label: str
    recalls: dict  # R' -> recall over queries
    phase_ms: dict  # phase name -> PhaseStat

    def recall(self, rprime: int) -> float:
        return self.recalls[rprime]


@dataclass(frozen=True)
class BenchData:
    learn: Dataset
    base: Dataset
    queries: Dataset
    gt: GroundTruth | None


def _load_vectors(path: str) -> Dataset:
    p = Path(path)
    if p.suffix == ".bvecs":
        return read_bvecs(p)
    return read_fvecs(p)


def load_data(cfg: BenchConfig) -> BenchData:
    if not (cfg.base and cfg.learn and cfg.query):
        raise ValueError("config must name base, learn and query files")
    return BenchData(
        learn=_load_vectors(cfg.learn),
        base=_load_vectors(cfg.base),
        queries=_load_vectors(cfg.query),
        gt=read_ivecs(cfg.groundtruth) if cfg.groundtruth else None,
    )


def recall_at(results, gt: GroundTruth, rprime: int) -> float:
    """Fraction of queries whose true 1-NN is among the top rprime ids."""
    if gt is None:
        raise ValueError("ground truth is required to compute recall")
    rows = [np.asarray(r) for r in results]
    if len(rows) != gt.count:
        raise ValueError("result count does not match the ground truth")
    if rprime < 1:
        raise ValueError("rprime must be positive")
    if min(r.shape[0] for r in rows) < rprime:
        raise ValueError("results are shallower than rprime")
    hits = sum(int(gt.ids[i, 0]) in rows[i][:rprime] for i in range(len(rows)))
    return hits / len(rows)


def _limit_queries(queries: Dataset, limit: int | None) -> Dataset:
    if limit is None or queries.count <= limit:
        return queries
    return Dataset.from_array(queries.data[:limit])


def train_model(cfg: BenchConfig, data: BenchData) -> pqmod.ProductQuantizer:
    """Train the quantizer per config, on residuals when K > 0."""
    train_set = np.asarray(data.learn.data, dtype=np.float32)
    if cfg.K:
        # the index rebuilds this codebook bitwise (same data/seed/iters)
        coarse = kmeans.train(train_set, cfg.K, iters=cfg.train_iters,
                              seed=cfg.seed)
        labels, _ = kmeans.assign_batch(coarse.centroids, train_set)
        train_set = train_set - coarse.centroids[labels]
    if cfg.opq:
        return pqmod.train_opq(train_set, cfg.m, cfg.b, iters=cfg.train_iters,
                               opq_iters=cfg.opq_iters, seed=cfg.seed)
    return pqmod.train_pq(train_set, cfg.m, cfg.b, iters=cfg.train_iters,
                          seed=cfg.seed)


def build_index(cfg: BenchConfig, data: BenchData,
                pq: pqmod.ProductQuantizer) -> ivf.IvfIndex:
    layout = ivf.LAYOUT_TRANSPOSED if cfg.method == "qadc" else ivf.LAYOUT_STANDARD
    if cfg.K:
        return ivf.build(pq, cfg.K, data.base, iters=cfg.train_iters,
                         seed=cfg.seed, layout=layout, learn=data.learn.data)
    return ivf.build_flat(pq, data.base, layout=layout)


def config_label(cfg: BenchConfig) -> str:
    kind = "OPQ" if cfg.opq else "PQ"
    scope = f"ivf{cfg.K}/ma{cfg.ma}" if cfg.K else "exh"
    return f"{kind} {cfg.m}x{cfg.b} {cfg.method} {scope}"


def table_header() -> str:
    return (f"{'config':<28} {'R@100':>7} {'Index':>9} {'Tables':>9} "
            f"{'Scan':>9} {'Total':>9}   (ms per query)")


def table_row(report: BenchReport) -> str:
    r100 = report.recalls.get(100)
    r100s = f"{r100:.3f}" if r100 is not None else "-"
    p = report.phase_ms
    return (f"{report.label:<28} {r100s:>7} {p['index'].mean_ms:>9.3f} "
            f"{p['tables'].mean_ms:>9.3f} {p['scan'].mean_ms:>9.3f} "
            f"{p['total'].mean_ms:>9.3f}")


def run_queries(cfg: BenchConfig, index: ivf.IvfIndex,
                pq: pqmod.ProductQuantizer, queries: Dataset):
    """One sequential pass; returns (ranked id rows, per-phase ms sums)."""
    sums = dict.fromkeys(PHASES, 0.0)
    rows = []
    ma = cfg.ma if cfg.K else 1
    for qi in range(queries.count):
        res = adc.search(index, pq, queries.data[qi], R=cfg.R, ma=ma,
                         method=cfg.method, init=cfg.init,
                         variant=cfg.variant)
        rows.append(res.ids)
        t = res.timings
        sums["index"] += t.index_ms
        sums["tables"] += t.tables_ms
        sums["scan"] += t.scan_ms
        sums["total"] += t.total_ms
    return rows, sums


def run_bench(cfg: BenchConfig, data: BenchData | None = None,
              report_path=None, out=sys.stdout,
              header: bool = False) -> BenchReport:
    """Train, build, query, aggregate; print one table row per call."""
    cfg.validate()
    if data is None:
        data = load_data(cfg)
    queries = _limit_queries(data.queries, cfg.query_limit)
    pq = train_model(cfg, data)
    index = build_index(cfg, data, pq)

    per_repeat = {p: [] for p in PHASES}
    rows = None
    for _ in range(cfg.repeats):
        rows, sums = run_queries(cfg, index, pq, queries)
        for p in PHASES:
            per_repeat[p].append(sums[p] / queries.count)

    recalls = {}
    if data.gt is not None:
        gt = data.gt
        if gt.count > queries.count:
            gt = GroundTruth(depth=gt.depth, count=queries.count,
                             ids=gt.ids[:queries.count])
        for rp in RECALL_POINTS:
            if rp <= min(cfg.R, min(r.shape[0] for r in rows)):
                recalls[rp] = recall_at(rows, gt, rp)

    phase_ms = {}
    for p in PHASES:
        v = np.asarray(per_repeat[p])
        std = float(v.std(ddof=0)) if cfg.repeats > 1 else 0.0
        phase_ms[p] = PhaseStat(mean_ms=float(v.mean()), std_ms=std)

    report = BenchReport(label=config_label(cfg), recalls=recalls,
                         phase_ms=phase_ms)
    if out is not None:
        if header:
            print(table_header(), file=out)
        print(table_row(report), file=out)
    if report_path is not None:
        write_report(report, cfg, report_path)
    return report


def write_report(report: BenchReport, cfg: BenchConfig, path) -> None:
    """Line-delimited JSON: one config record, then recall/phase records."""
    with open(path, "w", encoding="utf-8") as f:
        cfgrec = {"record": "config", "label": report.label}
        for k, v in vars(cfg).items():
            cfgrec[k] = v
        f.write(json.dumps(cfgrec) + "\n")
        for rp in sorted(report.recalls):
            f.write(json.dumps({"record": "recall", "r": rp,
                                "value": report.recalls[rp]}) + "\n")
        for p in PHASES:
            s = report.phase_ms[p]
            f.write(json.dumps({"record": "phase", "name": p,
                                "mean_ms": s.mean_ms,
                                "std_ms": s.std_ms}) + "\n")


def parse_report(path) -> tuple[dict, BenchReport]:
    """Inverse of write_report; returns (config fields, report)."""
    cfgrec = None
    recalls = {}
    phase_ms = {}
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            kind = rec.get("record")
            if kind == "config":
                cfgrec = rec
            elif kind == "recall":
                recalls[int(rec["r"])] = rec["value"]
            elif kind == "phase":
                phase_ms[rec["name"]] = PhaseStat(mean_ms=rec["mean_ms"],
                                                  std_ms=rec["std_ms"])
            else:
                raise ValueError(f"unknown report record {kind!r}")
    if cfgrec is None:
        raise ValueError("report has no config record")
    return cfgrec, BenchReport(label=cfgrec.get("label", ""),
                               recalls=recalls, phase_ms=phase_ms)


def sweep_configs(base_cfg: BenchConfig, pairs, data: BenchData | None = None,
                  out=sys.stdout) -> list:
    """Exhaustive-scan rows for (m, b) pairs; returns the table rows."""
    rows = []
    if data is None and pairs:
        data = load_data(base_cfg)
    first = True
    for m, b in pairs:
        cfg = replace(base_cfg, m=m, b=b, K=0, ma=1, method="adc")
        report = run_bench(cfg, data=data, out=out, header=first)
        first = False
        rows.append({
            "m": m,
            "b": b,
            "recall_100": report.recalls.get(100),
            "tables_ms": report.phase_ms["tables"].mean_ms,
            "scan_ms": report.phase_ms["scan"].mean_ms,
        })
    return rows
