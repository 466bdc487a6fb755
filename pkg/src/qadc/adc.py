"""Reference search path: float lookup tables and the table-sum scan.

A query is answered in three phases. Index picks the cells to visit
and their residual queries; Tables turns each residual into per-table
squared distances (and, for the quantized method, byte tables); Scan
accumulates table entries over the stored codes into a bounded heap.
Each phase is timed separately.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import ivf as ivfmod
from . import kernels, qadc
from . import pq as pqmod
from .heap import NeighborHeap

__all__ = [
    "LookupTables", "PhaseTimings", "SearchResult", "NeighborHeap",
    "compute_tables", "adc_distance", "scan_list", "search",
]

DEFAULT_INIT = 1000  # candidates float-scanned to fix the quantizer's qmax


@dataclass(frozen=True)
class LookupTables:
    """Per-query squared distances: m tables of 2**b float32 entries."""

    tables: np.ndarray  # (m, k) float32, non-negative
    query_ref: int | None = None  # probe cell these belong to; None = exhaustive

    @property
    def m(self) -> int:
        return self.tables.shape[0]

    @property
    def k(self) -> int:
        return self.tables.shape[1]


@dataclass(frozen=True)
class PhaseTimings:
    index_ms: float
    tables_ms: float
    scan_ms: float
    total_ms: float


@dataclass(frozen=True)
class SearchResult:
    ids: np.ndarray  # ascending by (distance, id)
    distances: np.ndarray
    timings: PhaseTimings


def compute_tables(pq: pqmod.ProductQuantizer, residual_query,
                   query_ref: int | None = None) -> LookupTables:
    """Squared distances from each sub-vector to every centroid.

    The residual query must already be rotated when the quantizer
    carries a rotation; search applies it once, before sub-splitting.
    """
    r = np.asarray(residual_query, dtype=np.float32).ravel()
    if r.shape[0] != pq.d:
        raise ValueError(f"query dim {r.shape[0]} != quantizer dim {pq.d}")
    sub = r.reshape(pq.m, pq.dsub)
    diff = pq.codebooks - sub[:, None, :]
    tables = np.einsum("mkd,mkd->mk", diff, diff)
    return LookupTables(tables=np.ascontiguousarray(tables, dtype=np.float32),
                        query_ref=query_ref)


def _tables_array(tables) -> np.ndarray:
    if isinstance(tables, LookupTables):
        return tables.tables
    return np.ascontiguousarray(tables, dtype=np.float32)


def adc_distance(code, tables) -> float:
    """Sum of one table entry per sub-quantizer, left-to-right in float32."""
    t = _tables_array(tables)
    idx = code.codes if isinstance(code, pqmod.PqCode) else np.asarray(code)
    if idx.shape[0] != t.shape[0]:
        raise ValueError("code length does not match the table count")
    acc = np.float32(0.0)
    for j in range(t.shape[0]):
        acc = np.float32(acc + t[j, int(idx[j])])
    return float(acc)


def scan_list(lst, tables, heap: NeighborHeap,
              variant: str | None = None) -> NeighborHeap:
    """Merge a standard-layout list's best candidates into `heap`."""
    t = _tables_array(tables)
    k = t.shape[1]
    b = int(k).bit_length() - 1
    if (1 << b) != k:
        raise ValueError("table length must be a power of two")
    kernels.scan_codes(lst.codes, lst.ids, t, b, heap, variant)
    return heap


def _rotate(pq: pqmod.ProductQuantizer, v: np.ndarray) -> np.ndarray:
    if pq.rotation is None:
        return v
    return (v @ pq.rotation.T).astype(np.float32)


def search(index: ivfmod.IvfIndex, pq: pqmod.ProductQuantizer, query,
           R: int, ma: int = 1, method: str = "adc",
           init: int = DEFAULT_INIT, variant: str | None = None) -> SearchResult:
    """Top-R ids for one query, with per-phase wall times.

    method "adc" runs the float scan over standard-layout lists;
    "qadc" quantizes the tables to bytes and runs the block scan over
    transposed lists (4-bit codes only). A flat index (no coarse
    codebook) skips the Index phase and scans its single list; ma is
    ignored there.
    """
    if R < 1:
        raise ValueError("R must be positive")
    if method not in ("adc", "qadc"):
        raise ValueError(f"unknown method {method!r}")
    if (index.d, index.m, index.b) != (pq.d, pq.m, pq.b):
        raise ValueError("index geometry does not match the quantizer")
    if method == "adc" and index.layout != ivfmod.LAYOUT_STANDARD:
        raise ValueError("adc search needs a standard-layout index")
    if method == "qadc":
        if index.layout != ivfmod.LAYOUT_TRANSPOSED:
            raise ValueError("qadc search needs a transposed16 index")
        if pq.b != 4:
            raise ValueError("qadc search needs 4-bit sub-codes")

    q = np.asarray(query, dtype=np.float32).ravel()
    t0 = time.perf_counter()
    if index.coarse is None:
        cells = np.zeros(1, dtype=np.int64)
        residuals = q[None, :]
        if q.shape[0] != index.d:
            raise ValueError("query dimension does not match the index")
    else:
        ps = ivfmod.probe(index, q, ma)
        cells, residuals = ps.cells, ps.residual_queries
    index_ms = (time.perf_counter() - t0) * 1e3

    heap = NeighborHeap(R)
    tables_ms = 0.0
    scan_ms = 0.0
    if method == "adc":
        for c, r in zip(cells, residuals):
            t1 = time.perf_counter()
            tabs = compute_tables(pq, _rotate(pq, r), query_ref=int(c))
            t2 = time.perf_counter()
            scan_list(index.lists[c], tabs, heap, variant)
            t3 = time.perf_counter()
            tables_ms += (t2 - t1) * 1e3
            scan_ms += (t3 - t2) * 1e3
    else:
        qmax = None
        for c, r in zip(cells, residuals):
            t1 = time.perf_counter()
            tabs = compute_tables(pq, _rotate(pq, r), query_ref=int(c))
            tlist = index.lists[c]
            if qmax is None:
                # one qmax per query, from the first probed cell's prefix,
                # keeps dequantized distances comparable across cells
                qmax = qadc.find_qmax([(tabs.tables, tlist)], R, init)
            qmin = min(float(tabs.tables.min()), qmax)
            qt = qadc.quantize_tables(tabs.tables, qmin, qmax)
            t2 = time.perf_counter()
            qadc.qadc_scan(tlist, qt, heap, variant=variant)
            t3 = time.perf_counter()
            tables_ms += (t2 - t1) * 1e3
            scan_ms += (t3 - t2) * 1e3

    ids, dists = heap.extract()
    total = index_ms + tables_ms + scan_ms
    return SearchResult(ids=ids, distances=dists,
                        timings=PhaseTimings(index_ms=index_ms,
                                             tables_ms=tables_ms,
                                             scan_ms=scan_ms,
                                             total_ms=total))
