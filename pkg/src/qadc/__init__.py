"""Product-quantization nearest-neighbor search with a byte-quantized,
in-register scan path.

Vectors are compressed to short codes by a product quantizer (optionally
preceded by a learned rotation), stored flat or in an inverted file, and
searched by accumulating per-query lookup tables over the codes. The
quantized path packs 4-bit sub-codes into 16-code blocks and replaces
table lookups with 16-lane byte shuffles; compiled scalar/SIMD kernels
and a pure-python fallback produce bit-identical results.
"""

from .adc import (LookupTables, PhaseTimings, SearchResult, adc_distance,
                  compute_tables, scan_list, search)
from .bench import (BenchConfig, BenchData, BenchReport, recall_at,
                    run_bench, sweep_configs)
from .heap import NeighborHeap
from .ivf import (LAYOUT_STANDARD, LAYOUT_TRANSPOSED, IvfIndex, ProbeSet,
                  StandardList, build, build_flat, load_index, probe,
                  save_index)
from .kernels import available_variants, resolve_variant, simd_level
from .kmeans import Codebook
from .pq import (PqCode, ProductQuantizer, decode, decode_batch, encode,
                 encode_batch, load_model, pack_codes, save_model, train_opq,
                 train_pq, unpack_codes)
from .qadc import (QuantizedTables, TransposedList, find_qmax, qadc_scan,
                   quantize_tables, scan_block_scalar, scan_block_simd,
                   transpose_block, transpose_list, untranspose_block)
from .synth import Corpus, ground_truth, make_corpus
from .vecio import (Dataset, FormatError, GroundTruth, read_bvecs, read_fvecs,
                    read_ivecs, write_fvecs, write_ivecs)

__version__ = "0.1.0"

__all__ = [
    "BenchConfig", "BenchData", "BenchReport", "Codebook", "Corpus",
    "Dataset", "FormatError", "GroundTruth", "IvfIndex", "LookupTables",
    "NeighborHeap", "PhaseTimings", "PqCode", "ProbeSet",
    "ProductQuantizer", "QuantizedTables", "SearchResult", "StandardList",
    "TransposedList", "LAYOUT_STANDARD", "LAYOUT_TRANSPOSED",
    "adc_distance", "available_variants", "build", "build_flat",
    "compute_tables", "decode", "decode_batch", "encode", "encode_batch",
    "find_qmax", "ground_truth", "load_index", "load_model", "make_corpus",
    "pack_codes", "probe", "qadc_scan", "quantize_tables", "recall_at",
    "resolve_variant", "run_bench", "save_index", "save_model",
    "scan_block_scalar", "scan_block_simd", "scan_list", "search",
    "simd_level", "sweep_configs", "train_opq", "train_pq",
    "transpose_block", "transpose_list", "unpack_codes",
    "untranspose_block", "write_fvecs", "write_ivecs", "__version__",
]
