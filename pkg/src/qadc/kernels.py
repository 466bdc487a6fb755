"""Kernel selection and dispatch.

The compiled extension is optional; every entry point falls back to the
pure-numpy implementations in _pykernels, which produce identical
results. The active variant is picked per call: an explicit argument
wins, then the QADC_KERNEL environment variable, then the best variant
this build and CPU support.
"""

from __future__ import annotations

import os

import numpy as np

from . import _pykernels

try:
    from . import _kernels as _ext
except ImportError:  # pure-python install
    _ext = None

ENV_VAR = "QADC_KERNEL"
VARIANTS = ("python", "scalar", "simd128", "simd256")
MAX_M = _ext.MAX_M if _ext is not None else 128

_C_LEVEL = {"scalar": 0, "simd128": 1, "simd256": 2}


def have_extension() -> bool:
    """True when the compiled kernels were built and imported."""
    return _ext is not None


def simd_level() -> int:
    """0 without vector support (or extension), 1 for 128-bit, 2 for 256-bit."""
    return int(_ext.simd_level()) if _ext is not None else 0


def available_variants() -> tuple[str, ...]:
    """Usable variant names, worst to best."""
    out = ["python"]
    if _ext is not None:
        out.append("scalar")
        lvl = _ext.simd_level()
        if lvl >= 1:
            out.append("simd128")
        if lvl >= 2:
            out.append("simd256")
    return tuple(out)


def resolve_variant(variant: str | None = None) -> str:
    """Resolve a variant name to a concrete, available kernel.

    None consults QADC_KERNEL; "auto" (the default) picks the best
    available. Unknown names raise ValueError, known-but-unavailable
    ones raise RuntimeError.
    """
    if variant is None:
        variant = os.environ.get(ENV_VAR) or "auto"
    if variant == "auto":
        return available_variants()[-1]
    if variant not in VARIANTS:
        raise ValueError(f"unknown kernel variant {variant!r}")
    if variant not in available_variants():
        raise RuntimeError(f"kernel variant {variant!r} is unavailable in this build")
    return variant


def _code_bytes(m: int, b: int) -> int:
    if b == 4:
        return m // 2
    if b == 8:
        return m
    if b == 16:
        return 2 * m
    raise ValueError(f"unsupported b={b}")


def scan_codes(codes, ids, tables, b, heap, variant: str | None = None) -> None:
    """Float scan of packed codes, merging the best candidates into `heap`."""
    v = resolve_variant(variant)
    codes = np.ascontiguousarray(codes, dtype=np.uint8)
    ids = np.ascontiguousarray(ids, dtype=np.int64)
    tables = np.ascontiguousarray(tables, dtype=np.float32)
    m = tables.shape[0]
    if m < 1 or m > MAX_M or (b == 4 and m % 2):
        raise ValueError(f"unsupported sub-quantizer count m={m} for b={b}")
    if codes.ndim != 2 or codes.shape[1] != _code_bytes(m, b):
        raise ValueError("code rows do not match the table geometry")
    if tables.shape[1] != (1 << b):
        raise ValueError("tables must have shape (m, 2**b)")
    if ids.shape[0] != codes.shape[0]:
        raise ValueError("ids length does not match code count")
    if v == "python":
        _pykernels.scan_codes(codes, ids, tables, b, heap)
        return
    heap.size = _ext.adc_scan(codes, ids, m, b, tables,
                              heap.dists, heap.ids, heap.size, heap.capacity)


def _check_blocks(blocks, qtables) -> None:
    if blocks.ndim != 3 or blocks.shape[2] != 16:
        raise ValueError("blocks must have shape (nblocks, m/2, 16)")
    mrows = blocks.shape[1]
    if mrows < 1 or 2 * mrows > MAX_M:
        raise ValueError(f"unsupported row count {mrows}")
    if qtables.shape[-2:] != (2 * mrows, 16):
        raise ValueError("quantized tables must have shape (.., 2*mrows, 16)")
    if qtables.ndim == 3 and qtables.shape[0] != blocks.shape[0]:
        raise ValueError("per-block tables must match the block count")
    elif qtables.ndim not in (2, 3):
        raise ValueError("quantized tables must be 2- or 3-dimensional")


def scan_blocks(blocks, ids, qtables, qmin, delta, heap,
                variant: str | None = None) -> None:
    """Quantized scan of transposed blocks, merging into `heap`.

    ids holds one entry per lane (16 per block); negative ids mark
    padding and are never admitted.
    """
    v = resolve_variant(variant)
    blocks = np.ascontiguousarray(blocks, dtype=np.uint8)
    ids = np.ascontiguousarray(ids, dtype=np.int64)
    qtables = np.ascontiguousarray(qtables, dtype=np.uint8)
    _check_blocks(blocks, qtables)
    if qtables.ndim != 2:
        raise ValueError("scan_blocks uses one shared table set")
    if ids.shape[0] != 16 * blocks.shape[0]:
        raise ValueError("ids length must be 16 per block")
    if v == "python":
        _pykernels.scan_blocks(blocks, ids, qtables, qmin, delta, heap)
        return
    heap.size = _ext.qadc_scan(blocks, ids, qtables, float(qmin), float(delta),
                               heap.dists, heap.ids, heap.size, heap.capacity,
                               _C_LEVEL[v])


def block_distances(blocks, qtables, variant: str | None = None) -> np.ndarray:
    """Saturated lane distances, one uint8 row of 16 per block.

    qtables is (2*mrows, 16) to share one table set across blocks or
    (nblocks, 2*mrows, 16) for per-block tables.
    """
    v = resolve_variant(variant)
    blocks = np.ascontiguousarray(blocks, dtype=np.uint8)
    qtables = np.ascontiguousarray(qtables, dtype=np.uint8)
    _check_blocks(blocks, qtables)
    if v == "python":
        return _pykernels.block_distances(blocks, qtables)
    out = np.empty((blocks.shape[0], 16), dtype=np.uint8)
    if qtables.ndim == 2:
        _ext.block_dists(blocks, qtables, out, _C_LEVEL[v])
    else:
        _ext.block_dists_per(blocks, qtables, out, _C_LEVEL[v])
    return out
