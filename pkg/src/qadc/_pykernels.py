"""Pure-numpy scan kernels.

These are the fallback implementations selected when the compiled
extension is unavailable (or pinned off via QADC_KERNEL=python). They
reproduce the compiled kernels' results exactly: float accumulation
happens left-to-right in float32, byte accumulation saturates at 255,
and heap admission follows the same (distance, id) ordering.
"""

from __future__ import annotations

import numpy as np


def adc_batch(codes: np.ndarray, tables: np.ndarray, b: int) -> np.ndarray:
    """Float ADC distances for packed codes, left-to-right float32 accumulation."""
    n = codes.shape[0]
    m = tables.shape[0]
    acc = np.zeros(n, dtype=np.float32)
    if b == 8:
        for j in range(m):
            acc += tables[j][codes[:, j]]
    elif b == 4:
        for j2 in range(m // 2):
            byte = codes[:, j2]
            acc += tables[2 * j2][byte & 0x0F]
            acc += tables[2 * j2 + 1][byte >> 4]
    elif b == 16:
        wide = np.ascontiguousarray(codes).view("<u2")
        for j in range(m):
            acc += tables[j][wide[:, j]]
    else:
        raise ValueError(f"unsupported b={b}")
    return acc


def scan_codes(codes, ids, tables, b, heap) -> None:
    """ADC scan of a standard-layout list, merging the R best into `heap`."""
    if codes.shape[0] == 0:
        return
    heap.push_batch(ids, adc_batch(codes, tables, b))


def block_distances(blocks: np.ndarray, qtables: np.ndarray) -> np.ndarray:
    """Lane distances for (B, m/2, 16) blocks; qtables (m, 16) or per-block (B, m, 16).

    Saturating byte adds of non-negative values equal min(255, total), so the
    sum can be taken in one shot without changing any lane value.
    """
    lo = blocks & 0x0F
    hi = blocks >> 4
    if qtables.ndim == 2:
        rows = np.arange(blocks.shape[1])[None, :, None]
        ev = qtables[0::2][rows, lo]  # (B, m/2, 16)
        od = qtables[1::2][rows, hi]
    else:
        ev = np.take_along_axis(qtables[:, 0::2, :], lo, axis=2)
        od = np.take_along_axis(qtables[:, 1::2, :], hi, axis=2)
    total = ev.sum(axis=1, dtype=np.uint32) + od.sum(axis=1, dtype=np.uint32)
    return np.minimum(total, 255).astype(np.uint8)


def scan_blocks(blocks, ids, qtables, qmin, delta, heap) -> None:
    """Quantized scan of a transposed list, merging into `heap`.

    Matches the sequential kernel exactly, including the rule that
    saturated (255) lanes are only admitted while the heap is filling:
    in scan order those are exactly the saturated lanes among the first
    (capacity - size) valid candidates; everything else resolves by
    (distance, id) dominance, which is order-free.
    """
    if blocks.shape[0] == 0:
        return
    lanes = block_distances(blocks, qtables).reshape(-1)
    valid = ids >= 0
    q = lanes[valid]
    vid = ids[valid]
    if q.shape[0] == 0:
        return
    free = heap.capacity - heap.size
    eligible = q < 255
    if free > 0:
        eligible[:free] = True
    q = q[eligible]
    vid = vid[eligible]
    mid = np.float32(qmin) + (q.astype(np.float32) + np.float32(0.5)) * np.float32(delta)
    heap.push_batch(vid, mid)
