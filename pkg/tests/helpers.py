"""Shared oracles for the test suite.

Everything in here is written as plainly as possible, trading speed for
obviousness, so the fast implementations have something independent to
disagree with.
"""

import numpy as np

# verdict lines from the acceptance suite; conftest echoes them after the run
ACCEPTANCE_REPORT: list[str] = []


def naive_block_distances(blocks, qtables):
    """Per-lane saturating sums over a transposed block group.

    blocks:  (nblocks, m/2, 16) uint8, two 4-bit codes per byte.
    qtables: (m, 16) uint8 shared across blocks, or (nblocks, m, 16)
             per-block.
    Returns (nblocks, 16) uint8.
    """
    blocks = np.asarray(blocks)
    qtables = np.asarray(qtables)
    nblocks, half_m, _ = blocks.shape
    out = np.zeros((nblocks, 16), dtype=np.uint8)
    for blk in range(nblocks):
        qt = qtables if qtables.ndim == 2 else qtables[blk]
        for lane in range(16):
            acc = 0
            for j in range(half_m):
                byte = int(blocks[blk, j, lane])
                acc = min(255, acc + int(qt[2 * j][byte & 0x0F]))
                acc = min(255, acc + int(qt[2 * j + 1][byte >> 4]))
            out[blk, lane] = acc
    return out


def naive_adc_distance(code_row, tables):
    """Left-to-right float32 table sum for one unpacked code row."""
    acc = np.float32(0.0)
    for j, idx in enumerate(code_row):
        acc = np.float32(acc + tables[j, int(idx)])
    return float(acc)


def sorted_topk(dists, ids, k):
    """Top-k by (distance, id), ascending. Returns (ids, dists)."""
    dists = np.asarray(dists)
    ids = np.asarray(ids)
    order = np.lexsort((ids, dists))[:k]
    return ids[order], dists[order]


def random_unpacked_codes(rng, n, m, b):
    return rng.integers(0, 1 << b, size=(n, m), dtype=np.uint64).astype(
        np.uint8 if b <= 8 else np.uint16)


def brute_force_nn(base, queries, depth):
    """Exact nearest neighbours in float64, ties broken by lower id."""
    out = np.empty((queries.shape[0], depth), dtype=np.int64)
    b64 = base.astype(np.float64)
    for qi, q in enumerate(queries.astype(np.float64)):
        d2 = ((b64 - q) ** 2).sum(axis=1)
        order = np.lexsort((np.arange(base.shape[0]), d2))
        out[qi] = order[:depth]
    return out
