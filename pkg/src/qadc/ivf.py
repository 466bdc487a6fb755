"""Inverted-file index over packed PQ codes.

A coarse codebook of K centroids partitions the database; every vector
is stored in exactly one cell's list as (id, residual code). Lists keep
either the standard row layout or the 16-code block-transposed layout.
A flat index (coarse is None) holds one list of whole-vector codes and
serves the exhaustive search path.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from . import kmeans, pq as pqmod, qadc
from .kmeans import Codebook
from .vecio import FormatError

INDEX_MAGIC = b"QIVF"
INDEX_VERSION = 1

LAYOUT_STANDARD = "standard"
LAYOUT_TRANSPOSED = "transposed16"
_LAYOUT_TAGS = {LAYOUT_STANDARD: 0, LAYOUT_TRANSPOSED: 1}
_TAG_LAYOUTS = {v: k for k, v in _LAYOUT_TAGS.items()}


def _row_bytes(m: int, b: int) -> int:
    if b == 4:
        return m // 2
    if b == 8:
        return m
    if b == 16:
        return 2 * m
    raise ValueError(f"unsupported b={b}")


@dataclass(frozen=True)
class StandardList:
    """One inverted list: parallel ids and packed code rows."""

    ids: np.ndarray  # (n,) int64
    codes: np.ndarray  # (n, code_bytes) uint8

    def __post_init__(self):
        if self.codes.ndim != 2 or self.codes.dtype != np.uint8:
            raise ValueError("codes must be a uint8 matrix")
        if self.ids.shape != (self.codes.shape[0],):
            raise ValueError("ids must parallel the code rows")

    @property
    def count(self) -> int:
        return self.codes.shape[0]


@dataclass(frozen=True)
class ProbeSet:
    """Cells to visit, ordered by ascending coarse distance."""

    cells: np.ndarray  # (ma,) int64, distinct
    residual_queries: np.ndarray  # (ma, d) float32, query minus cell centroid


@dataclass
class IvfIndex:
    d: int
    m: int
    b: int
    coarse: Codebook | None  # None marks a flat (exhaustive) index
    lists: list
    layout: str

    def __post_init__(self):
        if self.layout not in _LAYOUT_TAGS:
            raise ValueError(f"unknown layout {self.layout!r}")
        expected = self.coarse.k if self.coarse is not None else 1
        if len(self.lists) != expected:
            raise ValueError("list count must match the coarse codebook")

    @property
    def nlists(self) -> int:
        return len(self.lists)

    @property
    def K(self) -> int:
        return self.coarse.k if self.coarse is not None else 0

    @property
    def count(self) -> int:
        return sum(l.count for l in self.lists)


def _canonical(lst) -> tuple[np.ndarray, np.ndarray]:
    """(codes, ids) of a list in standard row order, padding dropped."""
    if isinstance(lst, qadc.TransposedList):
        return qadc.untranspose_list(lst)
    return lst.codes, lst.ids


def _make_list(codes: np.ndarray, ids: np.ndarray, layout: str):
    if layout == LAYOUT_TRANSPOSED:
        return qadc.transpose_list(codes, ids)
    return StandardList(ids=np.ascontiguousarray(ids, dtype=np.int64),
                        codes=np.ascontiguousarray(codes, dtype=np.uint8))


def _split_lists(packed: np.ndarray, labels: np.ndarray, k: int, layout: str):
    """Per-cell lists with ids ascending inside each cell."""
    order = np.argsort(labels, kind="stable")
    counts = np.bincount(labels, minlength=k)
    bounds = np.concatenate([[0], np.cumsum(counts)])
    lists = []
    for c in range(k):
        idx = order[bounds[c]:bounds[c + 1]]
        lists.append(_make_list(packed[idx], idx.astype(np.int64), layout))
    return lists


def _check_layout(pq: pqmod.ProductQuantizer, layout: str) -> None:
    if layout not in _LAYOUT_TAGS:
        raise ValueError(f"unknown layout {layout!r}")
    if layout == LAYOUT_TRANSPOSED and pq.b != 4:
        raise ValueError("transposed16 layout requires 4-bit sub-codes")


def build(pq: pqmod.ProductQuantizer, coarse_k: int, base, iters: int = 25,
          seed: int = 0, layout: str = LAYOUT_STANDARD, learn=None) -> IvfIndex:
    """Partition `base` into coarse_k cells and encode residuals.

    The coarse codebook is trained on `learn` when given, else on the
    base vectors themselves. Residuals are computed in the original
    space; the quantizer's own rotation is applied inside encoding.
    """
    _check_layout(pq, layout)
    X = np.asarray(getattr(base, "data", base), dtype=np.float32)
    if X.ndim != 2 or X.shape[1] != pq.d:
        raise ValueError("base dimension does not match the quantizer")
    if coarse_k < 1:
        raise ValueError("coarse_k must be positive")
    if coarse_k > X.shape[0]:
        raise ValueError("coarse_k exceeds the number of base vectors")
    train_on = learn if learn is not None else X
    coarse = kmeans.train(train_on, coarse_k, iters=iters, seed=seed)
    labels, _ = kmeans.assign_batch(coarse.centroids, X)
    residuals = X - coarse.centroids[labels]
    packed = pqmod.encode_batch(pq, residuals)
    return IvfIndex(d=pq.d, m=pq.m, b=pq.b, coarse=coarse,
                    lists=_split_lists(packed, labels, coarse_k, layout),
                    layout=layout)


def build_flat(pq: pqmod.ProductQuantizer, base, layout: str = LAYOUT_STANDARD) -> IvfIndex:
    """Single-list index of whole-vector codes for exhaustive scans."""
    _check_layout(pq, layout)
    X = np.asarray(getattr(base, "data", base), dtype=np.float32)
    if X.ndim != 2 or X.shape[1] != pq.d:
        raise ValueError("base dimension does not match the quantizer")
    packed = pqmod.encode_batch(pq, X)
    ids = np.arange(X.shape[0], dtype=np.int64)
    return IvfIndex(d=pq.d, m=pq.m, b=pq.b, coarse=None,
                    lists=[_make_list(packed, ids, layout)], layout=layout)


def probe(index: IvfIndex, query, ma: int) -> ProbeSet:
    """Select the ma nearest coarse cells, ties by lower cell id."""
    if index.coarse is None:
        raise ValueError("a flat index has no cells to probe")
    if ma < 1:
        raise ValueError("ma must be positive")
    if ma > index.K:
        raise ValueError(f"ma={ma} exceeds the cell count K={index.K}")
    q = np.asarray(query, dtype=np.float32).ravel()
    if q.shape[0] != index.d:
        raise ValueError("query dimension does not match the index")
    cent = index.coarse.centroids
    diff = cent - q[None, :]
    d2 = np.einsum("kd,kd->k", diff, diff)
    cells = np.lexsort((np.arange(index.K), d2))[:ma].astype(np.int64)
    return ProbeSet(cells=cells,
                    residual_queries=(q[None, :] - cent[cells]).astype(np.float32))


def save_index(index: IvfIndex, path) -> None:
    """Versioned little-endian dump; lists stored in standard row order."""
    with open(path, "wb") as f:
        f.write(INDEX_MAGIC)
        f.write(struct.pack("<IIIIIB", INDEX_VERSION, index.d, index.m,
                            index.b, index.K, _LAYOUT_TAGS[index.layout]))
        if index.coarse is not None:
            f.write(np.ascontiguousarray(
                index.coarse.centroids, dtype="<f4").tobytes())
        for lst in index.lists:
            codes, ids = _canonical(lst)
            f.write(struct.pack("<Q", codes.shape[0]))
            f.write(np.ascontiguousarray(ids, dtype="<i8").tobytes())
            f.write(np.ascontiguousarray(codes, dtype=np.uint8).tobytes())


def load_index(path) -> IvfIndex:
    """Inverse of save_index; transposed lists are rebuilt block by block."""
    with open(path, "rb") as f:
        raw = f.read()
    head = struct.calcsize("<IIIIIB")
    if len(raw) < 4 + head or raw[:4] != INDEX_MAGIC:
        raise FormatError(f"{path}: not an index file")
    version, d, m, b, K, tag = struct.unpack_from("<IIIIIB", raw, 4)
    if version != INDEX_VERSION:
        raise FormatError(f"{path}: unsupported index version {version}")
    if tag not in _TAG_LAYOUTS:
        raise FormatError(f"{path}: unknown layout tag {tag}")
    layout = _TAG_LAYOUTS[tag]
    try:
        rb = _row_bytes(m, b)
    except ValueError as e:
        raise FormatError(f"{path}: {e}") from None
    off = 4 + head
    coarse = None
    if K:
        need = 4 * K * d
        if len(raw) < off + need:
            raise FormatError(f"{path}: truncated coarse codebook")
        cent = np.frombuffer(raw, dtype="<f4", count=K * d, offset=off)
        coarse = Codebook(centroids=cent.reshape(K, d).copy())
        off += need
    lists = []
    for _ in range(K if K else 1):
        if len(raw) < off + 8:
            raise FormatError(f"{path}: truncated list header")
        (n,) = struct.unpack_from("<Q", raw, off)
        off += 8
        need = 8 * n + rb * n
        if len(raw) < off + need:
            raise FormatError(f"{path}: truncated list data")
        ids = np.frombuffer(raw, dtype="<i8", count=n, offset=off).copy()
        off += 8 * n
        codes = np.frombuffer(raw, dtype=np.uint8, count=rb * n, offset=off)
        codes = codes.reshape(n, rb).copy()
        off += rb * n
        lists.append(_make_list(codes, ids, layout))
    if off != len(raw):
        raise FormatError(f"{path}: trailing bytes after last list")
    return IvfIndex(d=d, m=m, b=b, coarse=coarse, lists=lists, layout=layout)
