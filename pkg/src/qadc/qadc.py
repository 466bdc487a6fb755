"""Block-transposed 4-bit scan layer.

Lists are stored as blocks of 16 codes: each block holds m/2 rows of 16
bytes, where row j, byte l packs sub-codes (2j, 2j+1) of code l (low
nibble first). Float lookup tables are quantized to bytes in 0..127 so
a whole block's distances come from saturating byte adds; the heap
stores the dequantized bin midpoint qmin + (q + 0.5) * delta.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _pykernels, kernels
from .heap import NeighborHeap

# padding for partial final blocks: both nibbles point at table entry 15
# and the lane id is invalid (2**64 - 1, stored as int64 -1)
PAD_BYTE = 0xFF
PAD_ID = -1

QUANT_BINS = 127  # byte tables hold 0..127; saturated sums cap at 255


@dataclass(frozen=True)
class TransposedList:
    """A list of packed 4-bit codes regrouped into 16-code blocks."""

    blocks: np.ndarray  # (nblocks, m/2, 16) uint8
    ids: np.ndarray  # (nblocks * 16,) int64, PAD_ID marks padding
    count: int  # valid codes; padding only in the final block

    def __post_init__(self):
        if self.blocks.ndim != 3 or self.blocks.shape[2] != 16:
            raise ValueError("blocks must have shape (nblocks, m/2, 16)")
        if self.blocks.dtype != np.uint8:
            raise ValueError("blocks must be uint8")
        if self.ids.shape != (16 * self.blocks.shape[0],):
            raise ValueError("ids must hold 16 entries per block")
        if not 0 <= self.count <= self.ids.shape[0]:
            raise ValueError("count out of range")

    @property
    def nblocks(self) -> int:
        return self.blocks.shape[0]

    @property
    def m(self) -> int:
        return 2 * self.blocks.shape[1]


@dataclass(frozen=True)
class QuantizedTables:
    """Byte lookup tables with the affine map back to float distances."""

    tables: np.ndarray  # (m, 16) uint8, entries in 0..127
    qmin: float
    delta: float
    keep_min: np.ndarray  # per-table float minima that fed qmin

    def __post_init__(self):
        if self.tables.ndim != 2 or self.tables.shape[1] != 16:
            raise ValueError("tables must have shape (m, 16)")
        if self.tables.dtype != np.uint8:
            raise ValueError("tables must be uint8")
        if self.tables.max(initial=0) > QUANT_BINS:
            raise ValueError(f"table entries must not exceed {QUANT_BINS}")
        if self.delta < 0:
            raise ValueError("delta must be non-negative")


def transpose_block(codes: np.ndarray, b: int = 4) -> np.ndarray:
    """Regroup 16 packed codes (16, m/2) into one (m/2, 16) block.

    Row j, byte l = (code_l[2j+1] << 4) | code_l[2j], which is exactly
    byte j of packed code l, so this is a plain byte transpose.
    """
    if b != 4:
        raise ValueError("only 4-bit codes can be block-transposed")
    codes = np.asarray(codes, dtype=np.uint8)
    if codes.ndim != 2 or codes.shape[0] != 16:
        raise ValueError("a block holds exactly 16 codes")
    return np.ascontiguousarray(codes.T)


def untranspose_block(block: np.ndarray) -> np.ndarray:
    """Inverse of transpose_block: (m/2, 16) block back to (16, m/2) codes."""
    block = np.asarray(block, dtype=np.uint8)
    if block.ndim != 2 or block.shape[1] != 16:
        raise ValueError("a block is (m/2, 16) bytes")
    return np.ascontiguousarray(block.T)


def transpose_list(codes: np.ndarray, ids: np.ndarray) -> TransposedList:
    """Pack a whole list into blocks, padding the tail to a full block."""
    codes = np.asarray(codes, dtype=np.uint8)
    ids = np.asarray(ids, dtype=np.int64)
    if codes.ndim != 2:
        raise ValueError("codes must be (n, m/2) packed rows")
    n = codes.shape[0]
    if ids.shape != (n,):
        raise ValueError("ids must match the code count")
    nblocks = (n + 15) // 16
    padded = np.full((nblocks * 16, codes.shape[1]), PAD_BYTE, dtype=np.uint8)
    padded[:n] = codes
    pids = np.full(nblocks * 16, PAD_ID, dtype=np.int64)
    pids[:n] = ids
    # explicit width: reshape cannot infer -1 from an empty list
    blocks = np.ascontiguousarray(
        padded.reshape(nblocks, 16, codes.shape[1]).transpose(0, 2, 1))
    return TransposedList(blocks=blocks, ids=pids, count=n)


def untranspose_list(tlist: TransposedList) -> tuple[np.ndarray, np.ndarray]:
    """Recover the packed code rows and ids, dropping padding."""
    nb = tlist.nblocks
    codes = tlist.blocks.transpose(0, 2, 1).reshape(nb * 16, tlist.blocks.shape[1])
    return (np.ascontiguousarray(codes[: tlist.count]),
            tlist.ids[: tlist.count].copy())


def quantize_tables(tables: np.ndarray, qmin: float, qmax: float) -> QuantizedTables:
    """Quantize 16-entry float tables into bytes over [qmin, qmax].

    Bin q = min(127, floor((v - qmin) / delta)) with
    delta = (qmax - qmin) / 127; values at or below qmin map to 0 and
    values above qmax to 127. qmax == qmin degenerates to delta = 0
    with only bins 0 and 127 in use.
    """
    tables = np.asarray(tables, dtype=np.float32)
    if tables.ndim != 2 or tables.shape[1] != 16:
        raise ValueError("tables must have shape (m, 16)")
    qmin = float(qmin)
    qmax = float(qmax)
    if qmax < qmin:
        raise ValueError("qmax must not be below qmin")
    delta = (qmax - qmin) / QUANT_BINS
    v = tables.astype(np.float64)
    if delta > 0:
        q = np.floor((v - qmin) / delta)
        q = np.clip(q, 0, QUANT_BINS)
    else:
        q = np.where(v <= qmin, 0, QUANT_BINS)
    return QuantizedTables(tables=q.astype(np.uint8), qmin=qmin, delta=delta,
                           keep_min=tables.min(axis=1))


def dequantize(q, qtables: QuantizedTables) -> np.ndarray:
    """Bin midpoints qmin + (q + 0.5) * delta, in float32 like the kernels."""
    q = np.asarray(q, dtype=np.float32)
    return (np.float32(qtables.qmin)
            + (q + np.float32(0.5)) * np.float32(qtables.delta))


def find_qmax(cells, R: int, init: int) -> float:
    """Upper quantization bound from a float scan of the probe prefix.

    cells is an iterable of (tables, codes) pairs in probe order, where
    tables are the cell's float lookup tables (m, 16) and codes are its
    packed 4-bit rows or a TransposedList. The first min(init, available)
    candidates are scanned with full float distances into a heap of
    size R; the heap's max is returned (the max seen, when fewer than R).
    With zero candidates the degenerate bound sum(per-table maxima) of
    the first cell is returned.
    """
    if R < 1:
        raise ValueError("R must be positive")
    if init < 1:
        raise ValueError("init must be positive")
    heap = NeighborHeap(R)
    seen = 0
    first_tables = None
    for tables, codes in cells:
        tables = np.ascontiguousarray(tables, dtype=np.float32)
        if first_tables is None:
            first_tables = tables
        if isinstance(codes, TransposedList):
            codes, _ = untranspose_list(codes)
        else:
            codes = np.asarray(codes, dtype=np.uint8)
        take = min(init - seen, codes.shape[0])
        if take > 0:
            d = _pykernels.adc_batch(codes[:take], tables, 4)
            heap.push_batch(np.arange(seen, seen + take, dtype=np.int64), d)
            seen += take
        if seen >= init:
            break
    if first_tables is None:
        raise ValueError("probe order yielded no cells")
    if seen == 0:
        return float(first_tables.max(axis=1).sum())
    return float(heap.worst()[0])


def _qt_array(qtables) -> np.ndarray:
    if isinstance(qtables, QuantizedTables):
        return qtables.tables
    return np.asarray(qtables, dtype=np.uint8)


def scan_block_scalar(block: np.ndarray, qtables) -> np.ndarray:
    """Reference lane distances: saturating byte sums in row order."""
    qt = _qt_array(qtables)
    variant = "scalar" if kernels.have_extension() else "python"
    block = np.asarray(block, dtype=np.uint8)
    return kernels.block_distances(block[None, :, :], qt, variant=variant)[0]


def scan_block_simd(block: np.ndarray, qtables, variant: str | None = None) -> np.ndarray:
    """Vectorized lane distances; bit-exact to scan_block_scalar."""
    qt = _qt_array(qtables)
    block = np.asarray(block, dtype=np.uint8)
    return kernels.block_distances(block[None, :, :], qt, variant=variant)[0]


def qadc_scan(tlist: TransposedList, qtables, heap: NeighborHeap,
              qmin: float | None = None, delta: float | None = None,
              variant: str | None = None) -> NeighborHeap:
    """Quantized scan of a transposed list, merging into `heap`.

    Candidates enter with their dequantized midpoint distance; padding
    lanes never enter; saturated lanes (255) are admitted only while
    the heap is below capacity. qmin/delta default to the values stored
    on the QuantizedTables.
    """
    qt = _qt_array(qtables)
    if qmin is None:
        qmin = qtables.qmin
    if delta is None:
        delta = qtables.delta
    kernels.scan_blocks(tlist.blocks, tlist.ids, qt, float(qmin), float(delta),
                        heap, variant)
    return heap
