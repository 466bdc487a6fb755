#ifndef QADC_SCAN_KERNELS_H
#define QADC_SCAN_KERNELS_H

#include <stdint.h>

/* Kernel variants for the quantized scan. */
#define QADC_KERNEL_SCALAR 0
#define QADC_KERNEL_SIMD128 1
#define QADC_KERNEL_SIMD256 2

/* Largest supported sub-quantizer count (rows = m/2 per block). */
#define QADC_MAX_M 128

/* Best variant the running CPU supports: 0, 1 (ssse3) or 2 (avx2). */
int qadc_simd_level(void);

/*
 * Float ADC scan over a standard-layout list of packed codes.
 * codes:  n * code_bytes, row-major; b selects the sub-code width (4/8/16).
 * tables: m tables of (1 << b) floats each, row-major.
 * ids:    one 64-bit id per code; negative ids are skipped.
 * The heap arrays (hd, hi) hold a (dist, id) max-heap of capacity R with
 * `size` live entries; returns the new size.
 */
int adc_scan_f32(const uint8_t *codes, int64_t n, const int64_t *ids,
                 int m, int b, const float *tables,
                 float *hd, int64_t *hi, int size, int R);

/*
 * Quantized scan over a transposed list of (nblocks, mrows, 16) bytes.
 * qt: m = 2*mrows tables of 16 bytes. Candidates with lane distance q are
 * admitted with dequantized distance qmin + (q + 0.5) * delta. Saturated
 * lanes (255) are only admitted while the heap is below capacity; padding
 * lanes (id < 0) never. Returns the new heap size.
 */
int qadc_scan_u8(const uint8_t *blocks, int64_t nblocks, const int64_t *ids,
                 int mrows, const uint8_t *qt, float qmin, float delta,
                 float *hd, int64_t *hi, int size, int R, int variant);

/*
 * Lane distances for a batch of blocks, one 16-byte output row per block.
 * per_block != 0 means qt holds one (m, 16) table set per block.
 */
void qadc_block_dists(const uint8_t *blocks, int64_t nblocks, int mrows,
                      const uint8_t *qt, int per_block, uint8_t *out,
                      int variant);

#endif
