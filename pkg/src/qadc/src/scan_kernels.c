#include "scan_kernels.h"

#include <math.h>
#include <string.h>

#if defined(__x86_64__) || defined(__i386__)
#define QADC_X86 1
#include <immintrin.h>
#endif

int qadc_simd_level(void)
{
#ifdef QADC_X86
    if (__builtin_cpu_supports("avx2"))
        return QADC_KERNEL_SIMD256;
    if (__builtin_cpu_supports("ssse3"))
        return QADC_KERNEL_SIMD128;
#endif
    return QADC_KERNEL_SCALAR;
}

/* ---------------- bounded max-heap of (dist, id) ---------------- */

static inline int entry_less(float d1, int64_t i1, float d2, int64_t i2)
{
    return d1 < d2 || (d1 == d2 && i1 < i2);
}

static void heap_sift_down(float *hd, int64_t *hi, int size, int pos)
{
    for (;;) {
        int left = 2 * pos + 1;
        int right = left + 1;
        int big = pos;
        if (left < size && entry_less(hd[big], hi[big], hd[left], hi[left]))
            big = left;
        if (right < size && entry_less(hd[big], hi[big], hd[right], hi[right]))
            big = right;
        if (big == pos)
            return;
        float td = hd[pos]; hd[pos] = hd[big]; hd[big] = td;
        int64_t ti = hi[pos]; hi[pos] = hi[big]; hi[big] = ti;
        pos = big;
    }
}

static void heap_sift_up(float *hd, int64_t *hi, int pos)
{
    while (pos > 0) {
        int parent = (pos - 1) / 2;
        if (!entry_less(hd[parent], hi[parent], hd[pos], hi[pos]))
            return;
        float td = hd[pos]; hd[pos] = hd[parent]; hd[parent] = td;
        int64_t ti = hi[pos]; hi[pos] = hi[parent]; hi[parent] = ti;
        pos = parent;
    }
}

static inline int heap_push(float *hd, int64_t *hi, int size, int R,
                            float d, int64_t id)
{
    if (size < R) {
        hd[size] = d;
        hi[size] = id;
        heap_sift_up(hd, hi, size);
        return size + 1;
    }
    if (entry_less(d, id, hd[0], hi[0])) {
        hd[0] = d;
        hi[0] = id;
        heap_sift_down(hd, hi, R, 0);
    }
    return size;
}

/* ---------------- float ADC scan (standard layout) ---------------- */

int adc_scan_f32(const uint8_t *codes, int64_t n, const int64_t *ids,
                 int m, int b, const float *tables,
                 float *hd, int64_t *hi, int size, int R)
{
    int64_t i;
    int j;
    if (b == 8) {
        for (i = 0; i < n; i++) {
            const uint8_t *c = codes + (size_t)i * m;
            int64_t id = ids[i];
            float d = 0.0f;
            for (j = 0; j < m; j++)
                d += tables[(size_t)j * 256 + c[j]];
            if (id < 0)
                continue;
            size = heap_push(hd, hi, size, R, d, id);
        }
    } else if (b == 4) {
        int mrows = m / 2;
        for (i = 0; i < n; i++) {
            const uint8_t *c = codes + (size_t)i * mrows;
            int64_t id = ids[i];
            float d = 0.0f;
            for (j = 0; j < mrows; j++) {
                uint8_t byte = c[j];
                d += tables[(size_t)(2 * j) * 16 + (byte & 0x0f)];
                d += tables[(size_t)(2 * j + 1) * 16 + (byte >> 4)];
            }
            if (id < 0)
                continue;
            size = heap_push(hd, hi, size, R, d, id);
        }
    } else { /* b == 16 */
        for (i = 0; i < n; i++) {
            const uint8_t *c = codes + (size_t)i * m * 2;
            int64_t id = ids[i];
            float d = 0.0f;
            for (j = 0; j < m; j++) {
                unsigned idx = (unsigned)c[2 * j] | ((unsigned)c[2 * j + 1] << 8);
                d += tables[(size_t)j * 65536 + idx];
            }
            if (id < 0)
                continue;
            size = heap_push(hd, hi, size, R, d, id);
        }
    }
    return size;
}

/* ---------------- quantized block kernels ---------------- */

/*
 * Each kernel stores the 16 lane distances into lane_d and returns a bit
 * mask of lanes whose distance is <= thr_incl (thr_incl >= 255 short-
 * circuits to all lanes). The mask is only a pre-filter: callers re-check
 * every flagged lane exactly, so a too-wide mask is harmless and a too-
 * narrow one is forbidden.
 */

static unsigned block_scan_scalar(const uint8_t *blk, int mrows,
                                  const uint8_t *qt, int thr_incl,
                                  uint8_t *lane_d)
{
    unsigned acc[16];
    int j, l;
    memset(acc, 0, sizeof(acc));
    for (j = 0; j < mrows; j++) {
        const uint8_t *row = blk + 16 * j;
        const uint8_t *t_even = qt + 32 * j;
        const uint8_t *t_odd = t_even + 16;
        for (l = 0; l < 16; l++) {
            unsigned v = acc[l] + t_even[row[l] & 0x0f];
            if (v > 255)
                v = 255;
            v += t_odd[row[l] >> 4];
            if (v > 255)
                v = 255;
            acc[l] = v;
        }
    }
    unsigned mask = 0;
    for (l = 0; l < 16; l++) {
        lane_d[l] = (uint8_t)acc[l];
        if ((int)acc[l] <= thr_incl)
            mask |= 1u << l;
    }
    if (thr_incl >= 255)
        mask = 0xffffu;
    return mask;
}

#ifdef QADC_X86

__attribute__((target("ssse3")))
static unsigned block_scan_128(const uint8_t *blk, int mrows,
                               const uint8_t *qt, int thr_incl,
                               uint8_t *lane_d)
{
    const __m128i lo4 = _mm_set1_epi8(0x0f);
    __m128i acc = _mm_setzero_si128();
    int j;
    for (j = 0; j < mrows; j++) {
        __m128i comps = _mm_loadu_si128((const __m128i *)(blk + 16 * j));
        __m128i even = _mm_and_si128(comps, lo4);
        __m128i t_even = _mm_loadu_si128((const __m128i *)(qt + 32 * j));
        acc = _mm_adds_epu8(acc, _mm_shuffle_epi8(t_even, even));
        __m128i odd = _mm_and_si128(_mm_srli_epi16(comps, 4), lo4);
        __m128i t_odd = _mm_loadu_si128((const __m128i *)(qt + 32 * j + 16));
        acc = _mm_adds_epu8(acc, _mm_shuffle_epi8(t_odd, odd));
    }
    _mm_storeu_si128((__m128i *)lane_d, acc);
    if (thr_incl >= 255)
        return 0xffffu;
    __m128i thr = _mm_set1_epi8((char)(uint8_t)thr_incl);
    __m128i le = _mm_cmpeq_epi8(_mm_min_epu8(acc, thr), acc);
    return (unsigned)_mm_movemask_epi8(le);
}

/*
 * 256-bit variant: two rows per iteration, row 2t in the low lane and row
 * 2t+1 in the high lane. qt256 holds the tables rearranged to match:
 * per iteration 64 bytes [D(4t) | D(4t+2) | D(4t+1) | D(4t+3)].
 */
static void prepare_tables_256(const uint8_t *qt, int mrows, uint8_t *qt256)
{
    int t;
    for (t = 0; t < mrows / 2; t++) {
        memcpy(qt256 + 64 * t, qt + 32 * (2 * t), 16);
        memcpy(qt256 + 64 * t + 16, qt + 32 * (2 * t + 1), 16);
        memcpy(qt256 + 64 * t + 32, qt + 32 * (2 * t) + 16, 16);
        memcpy(qt256 + 64 * t + 48, qt + 32 * (2 * t + 1) + 16, 16);
    }
}

__attribute__((target("avx2")))
static unsigned block_scan_256(const uint8_t *blk, int mrows,
                               const uint8_t *qt256, const uint8_t *qt,
                               int thr_incl, uint8_t *lane_d)
{
    const __m256i lo4w = _mm256_set1_epi8(0x0f);
    __m256i acc2 = _mm256_setzero_si256();
    int pairs = mrows / 2;
    int t;
    for (t = 0; t < pairs; t++) {
        __m256i comps = _mm256_loadu_si256((const __m256i *)(blk + 32 * t));
        __m256i even = _mm256_and_si256(comps, lo4w);
        __m256i t_even = _mm256_loadu_si256((const __m256i *)(qt256 + 64 * t));
        acc2 = _mm256_adds_epu8(acc2, _mm256_shuffle_epi8(t_even, even));
        __m256i odd = _mm256_and_si256(_mm256_srli_epi16(comps, 4), lo4w);
        __m256i t_odd = _mm256_loadu_si256((const __m256i *)(qt256 + 64 * t + 32));
        acc2 = _mm256_adds_epu8(acc2, _mm256_shuffle_epi8(t_odd, odd));
    }
    __m128i acc = _mm_adds_epu8(_mm256_castsi256_si128(acc2),
                                _mm256_extracti128_si256(acc2, 1));
    if (mrows & 1) {
        const __m128i lo4 = _mm_set1_epi8(0x0f);
        int j = mrows - 1;
        __m128i comps = _mm_loadu_si128((const __m128i *)(blk + 16 * j));
        __m128i even = _mm_and_si128(comps, lo4);
        __m128i t_even = _mm_loadu_si128((const __m128i *)(qt + 32 * j));
        acc = _mm_adds_epu8(acc, _mm_shuffle_epi8(t_even, even));
        __m128i odd = _mm_and_si128(_mm_srli_epi16(comps, 4), lo4);
        __m128i t_odd = _mm_loadu_si128((const __m128i *)(qt + 32 * j + 16));
        acc = _mm_adds_epu8(acc, _mm_shuffle_epi8(t_odd, odd));
    }
    _mm_storeu_si128((__m128i *)lane_d, acc);
    if (thr_incl >= 255)
        return 0xffffu;
    __m128i thr = _mm_set1_epi8((char)(uint8_t)thr_incl);
    __m128i le = _mm_cmpeq_epi8(_mm_min_epu8(acc, thr), acc);
    return (unsigned)_mm_movemask_epi8(le);
}

#endif /* QADC_X86 */

/*
 * Inclusive byte threshold for lane pre-filtering: the largest q that
 * could still satisfy midpoint(q) <= root. Computed in double with one
 * extra bin of slack so float rounding can only widen the filter.
 * Returns -1 when no lane can qualify, 254 at most (saturated lanes are
 * never admitted once the heap is full).
 */
static int byte_threshold(float root, float qmin, float delta)
{
    double x;
    int t;
    if (delta <= 0.0f)
        return 254;
    x = ((double)root - (double)qmin) / (double)delta - 0.5;
    /* widen by the worst-case float32 rounding of midpoint(q) */
    x += (fabs((double)root) + fabs((double)qmin)) * 3e-7 / (double)delta;
    if (x < -0.5)
        return -1;
    if (x >= 254.0)
        return 254;
    t = (int)floor(x) + 1;
    if (t > 254)
        t = 254;
    return t;
}

static inline int admit_lanes(unsigned mask, const uint8_t *lane_d,
                              const int64_t *bids, float qmin, float delta,
                              float *hd, int64_t *hi, int size, int R)
{
    int l;
    for (l = 0; l < 16; l++) {
        int64_t id;
        unsigned q;
        float d;
        if (!(mask & (1u << l)))
            continue;
        id = bids[l];
        if (id < 0)
            continue;
        q = lane_d[l];
        d = qmin + ((float)q + 0.5f) * delta;
        if (size == R) {
            if (q == 255)
                continue;
            if (!entry_less(d, id, hd[0], hi[0]))
                continue;
            hd[0] = d;
            hi[0] = id;
            heap_sift_down(hd, hi, R, 0);
        } else {
            size = heap_push(hd, hi, size, R, d, id);
        }
    }
    return size;
}

/*
 * The block loop is stamped once per ISA variant: a kernel carrying a
 * wider target attribute cannot inline into a default-target caller, and
 * a per-block call (plus its vzeroupper) would cost more than the kernel
 * itself. The byte threshold is recomputed only when the heap root moves;
 * the threshold depends on the root distance alone, so a replacement that
 * keeps the same distance can safely reuse the cached value.
 */
#define DEFINE_SCAN_LOOP(name, attrs, kernel_expr)                          \
attrs static int name(const uint8_t *blocks, int64_t nblocks,               \
                      const int64_t *ids, int mrows, const uint8_t *qt,     \
                      const uint8_t *qt256, float qmin, float delta,        \
                      float *hd, int64_t *hi, int size, int R)              \
{                                                                           \
    uint8_t lane_d[16];                                                     \
    int thr_incl = 255;                                                     \
    int have_thr = 0;                                                       \
    float root_at = 0.0f;                                                   \
    int64_t bi;                                                             \
    (void)qt256;                                                            \
    for (bi = 0; bi < nblocks; bi++) {                                      \
        const uint8_t *blk = blocks + (size_t)bi * mrows * 16;              \
        unsigned mask;                                                      \
        if (size < R) {                                                     \
            thr_incl = 255;                                                 \
            have_thr = 0;                                                   \
        } else if (!have_thr || hd[0] != root_at) {                         \
            root_at = hd[0];                                                \
            thr_incl = byte_threshold(root_at, qmin, delta);                \
            have_thr = 1;                                                   \
        }                                                                   \
        if (thr_incl < 0)                                                   \
            continue;                                                       \
        mask = kernel_expr;                                                 \
        if (!mask)                                                          \
            continue;                                                       \
        size = admit_lanes(mask, lane_d, ids + bi * 16, qmin, delta,        \
                           hd, hi, size, R);                                \
    }                                                                       \
    return size;                                                            \
}

DEFINE_SCAN_LOOP(scan_loop_scalar, ,
                 block_scan_scalar(blk, mrows, qt, thr_incl, lane_d))

#ifdef QADC_X86
DEFINE_SCAN_LOOP(scan_loop_128, __attribute__((target("ssse3"))),
                 block_scan_128(blk, mrows, qt, thr_incl, lane_d))
DEFINE_SCAN_LOOP(scan_loop_256, __attribute__((target("avx2"))),
                 block_scan_256(blk, mrows, qt256, qt, thr_incl, lane_d))
#endif

int qadc_scan_u8(const uint8_t *blocks, int64_t nblocks, const int64_t *ids,
                 int mrows, const uint8_t *qt, float qmin, float delta,
                 float *hd, int64_t *hi, int size, int R, int variant)
{
    uint8_t qt256[QADC_MAX_M * 16];

#ifdef QADC_X86
    if (variant == QADC_KERNEL_SIMD256) {
        prepare_tables_256(qt, mrows, qt256);
        return scan_loop_256(blocks, nblocks, ids, mrows, qt, qt256,
                             qmin, delta, hd, hi, size, R);
    }
    if (variant == QADC_KERNEL_SIMD128)
        return scan_loop_128(blocks, nblocks, ids, mrows, qt, NULL,
                             qmin, delta, hd, hi, size, R);
#else
    (void)qt256;
#endif
    return scan_loop_scalar(blocks, nblocks, ids, mrows, qt, NULL,
                            qmin, delta, hd, hi, size, R);
}

void qadc_block_dists(const uint8_t *blocks, int64_t nblocks, int mrows,
                      const uint8_t *qt, int per_block, uint8_t *out,
                      int variant)
{
    uint8_t qt256[QADC_MAX_M * 16];
    int64_t bi;

#ifndef QADC_X86
    (void)qt256;
    variant = QADC_KERNEL_SCALAR;
#endif

#ifdef QADC_X86
    if (variant == QADC_KERNEL_SIMD256 && !per_block)
        prepare_tables_256(qt, mrows, qt256);
#endif

    for (bi = 0; bi < nblocks; bi++) {
        const uint8_t *blk = blocks + (size_t)bi * mrows * 16;
        const uint8_t *t = per_block ? qt + (size_t)bi * mrows * 32 : qt;
        uint8_t *o = out + bi * 16;
#ifdef QADC_X86
        if (variant == QADC_KERNEL_SIMD256) {
            if (per_block)
                prepare_tables_256(t, mrows, qt256);
            block_scan_256(blk, mrows, qt256, t, 255, o);
        } else if (variant == QADC_KERNEL_SIMD128) {
            block_scan_128(blk, mrows, t, 255, o);
        } else {
            block_scan_scalar(blk, mrows, t, 255, o);
        }
#else
        block_scan_scalar(blk, mrows, t, 255, o);
#endif
    }
}
