# cython: language_level=3, boundscheck=False, wraparound=False
"""Thin wrapper over the compiled scan kernels.

All entry points expect C-contiguous arrays; shape checks here guard the
raw pointer calls, everything else is validated by qadc.kernels.
"""

from libc.stdint cimport uint8_t, int64_t

cdef extern from "scan_kernels.h":
    int QADC_KERNEL_SCALAR
    int QADC_KERNEL_SIMD128
    int QADC_KERNEL_SIMD256
    int QADC_MAX_M
    int qadc_simd_level() nogil
    int adc_scan_f32(const uint8_t *codes, int64_t n, const int64_t *ids,
                     int m, int b, const float *tables,
                     float *hd, int64_t *hi, int size, int R) nogil
    int qadc_scan_u8(const uint8_t *blocks, int64_t nblocks,
                     const int64_t *ids, int mrows, const uint8_t *qt,
                     float qmin, float delta, float *hd, int64_t *hi,
                     int size, int R, int variant) nogil
    void qadc_block_dists(const uint8_t *blocks, int64_t nblocks, int mrows,
                          const uint8_t *qt, int per_block, uint8_t *out,
                          int variant) nogil

MAX_M = QADC_MAX_M
SCALAR = QADC_KERNEL_SCALAR
SIMD128 = QADC_KERNEL_SIMD128
SIMD256 = QADC_KERNEL_SIMD256


def simd_level():
    """Best variant this CPU supports: 0 scalar, 1 128-bit, 2 256-bit."""
    return qadc_simd_level()


cdef int _check_heap(const float[::1] heap_d, const int64_t[::1] heap_i,
                     int size, int R) except -1:
    if R < 1:
        raise ValueError("heap capacity must be positive")
    if heap_d.shape[0] < R or heap_i.shape[0] < R:
        raise ValueError("heap arrays smaller than capacity")
    if size < 0 or size > R:
        raise ValueError("heap size out of range")
    return 0


def adc_scan(const uint8_t[:, ::1] codes, const int64_t[::1] ids,
             int m, int b, const float[:, ::1] tables,
             float[::1] heap_d, int64_t[::1] heap_i, int size, int R):
    """Float scan over packed codes; returns the new heap size."""
    cdef int64_t n = codes.shape[0]
    cdef Py_ssize_t row_bytes
    cdef int out
    if b == 4:
        row_bytes = m // 2
    elif b == 8:
        row_bytes = m
    elif b == 16:
        row_bytes = 2 * m
    else:
        raise ValueError("b must be 4, 8 or 16")
    if m < 1 or m > MAX_M or (b == 4 and m % 2 != 0):
        raise ValueError("unsupported sub-quantizer count")
    if codes.shape[1] != row_bytes:
        raise ValueError("code row width does not match m and b")
    if tables.shape[0] != m or tables.shape[1] != (1 << b):
        raise ValueError("tables must have shape (m, 2**b)")
    if ids.shape[0] != n:
        raise ValueError("ids length does not match code count")
    _check_heap(heap_d, heap_i, size, R)
    if n == 0:
        return size
    with nogil:
        out = adc_scan_f32(&codes[0, 0], n, &ids[0], m, b, &tables[0, 0],
                           &heap_d[0], &heap_i[0], size, R)
    return out


def qadc_scan(const uint8_t[:, :, ::1] blocks, const int64_t[::1] ids,
              const uint8_t[:, ::1] qtables, float qmin, float delta,
              float[::1] heap_d, int64_t[::1] heap_i, int size, int R,
              int variant):
    """Quantized scan over transposed blocks; returns the new heap size."""
    cdef int64_t nblocks = blocks.shape[0]
    cdef int mrows = <int>blocks.shape[1]
    cdef int out
    if blocks.shape[2] != 16:
        raise ValueError("blocks must be (nblocks, mrows, 16)")
    if mrows < 1 or 2 * mrows > MAX_M:
        raise ValueError("unsupported row count")
    if qtables.shape[0] != 2 * mrows or qtables.shape[1] != 16:
        raise ValueError("quantized tables must have shape (2*mrows, 16)")
    if ids.shape[0] != 16 * nblocks:
        raise ValueError("ids length must be 16 per block")
    if variant < SCALAR or variant > SIMD256:
        raise ValueError("unknown kernel variant")
    _check_heap(heap_d, heap_i, size, R)
    if nblocks == 0:
        return size
    with nogil:
        out = qadc_scan_u8(&blocks[0, 0, 0], nblocks, &ids[0], mrows,
                           &qtables[0, 0], qmin, delta,
                           &heap_d[0], &heap_i[0], size, R, variant)
    return out


def block_dists(const uint8_t[:, :, ::1] blocks, const uint8_t[:, ::1] qtables,
                uint8_t[:, ::1] out, int variant):
    """Saturating lane distances with one shared table set."""
    cdef int64_t nblocks = blocks.shape[0]
    cdef int mrows = <int>blocks.shape[1]
    if blocks.shape[2] != 16:
        raise ValueError("blocks must be (nblocks, mrows, 16)")
    if mrows < 1 or 2 * mrows > MAX_M:
        raise ValueError("unsupported row count")
    if qtables.shape[0] != 2 * mrows or qtables.shape[1] != 16:
        raise ValueError("quantized tables must have shape (2*mrows, 16)")
    if out.shape[0] != nblocks or out.shape[1] != 16:
        raise ValueError("out must have shape (nblocks, 16)")
    if variant < SCALAR or variant > SIMD256:
        raise ValueError("unknown kernel variant")
    if nblocks == 0:
        return
    with nogil:
        qadc_block_dists(&blocks[0, 0, 0], nblocks, mrows,
                         &qtables[0, 0], 0, &out[0, 0], variant)


def block_dists_per(const uint8_t[:, :, ::1] blocks,
                    const uint8_t[:, :, ::1] qtables,
                    uint8_t[:, ::1] out, int variant):
    """Saturating lane distances with one table set per block."""
    cdef int64_t nblocks = blocks.shape[0]
    cdef int mrows = <int>blocks.shape[1]
    if blocks.shape[2] != 16:
        raise ValueError("blocks must be (nblocks, mrows, 16)")
    if mrows < 1 or 2 * mrows > MAX_M:
        raise ValueError("unsupported row count")
    if (qtables.shape[0] != nblocks or qtables.shape[1] != 2 * mrows
            or qtables.shape[2] != 16):
        raise ValueError("quantized tables must have shape (nblocks, 2*mrows, 16)")
    if out.shape[0] != nblocks or out.shape[1] != 16:
        raise ValueError("out must have shape (nblocks, 16)")
    if variant < SCALAR or variant > SIMD256:
        raise ValueError("unknown kernel variant")
    if nblocks == 0:
        return
    with nogil:
        qadc_block_dists(&blocks[0, 0, 0], nblocks, mrows,
                         &qtables[0, 0, 0], 1, &out[0, 0], variant)
