"""Readers and writers for the little-endian vector corpus formats.

Three sibling formats, all headerless sequences of records:

* fvecs: ``[int32 dim][float32 * dim]``
* bvecs: ``[int32 dim][uint8 * dim]``
* ivecs: ``[int32 depth][int32 * depth]``

Every record in a file must carry the same dim. bvecs payloads are
widened to float32 on read so downstream code sees one dtype.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class FormatError(ValueError):
    """Raised when a vector file violates its record framing."""


@dataclass(frozen=True)
class Dataset:
    """A row-major float32 matrix of `count` vectors of dimension `dim`."""

    dim: int
    count: int
    data: np.ndarray

    def __post_init__(self):
        if self.data.shape != (self.count, self.dim):
            raise ValueError(f"data shape {self.data.shape} != ({self.count}, {self.dim})")

    @classmethod
    def from_array(cls, data: np.ndarray) -> "Dataset":
        data = np.ascontiguousarray(np.asarray(data, dtype=np.float32))
        if data.ndim != 2:
            raise ValueError("expected a 2-d array")
        return cls(dim=data.shape[1], count=data.shape[0], data=data)


@dataclass(frozen=True)
class GroundTruth:
    """Exact nearest-neighbor ids, one row of `depth` ids per query."""

    depth: int
    count: int
    ids: np.ndarray

    def __post_init__(self):
        if self.ids.shape != (self.count, self.depth):
            raise ValueError(f"ids shape {self.ids.shape} != ({self.count}, {self.depth})")


def _empty_dataset() -> Dataset:
    return Dataset(dim=0, count=0, data=np.empty((0, 0), dtype=np.float32))


def _read_framed_i32(path, limit=None):
    """Read a [int32 width][width * 4-byte payload] file into an (n, width+1) int32 view."""
    with open(path, "rb") as f:
        head = np.fromfile(f, dtype="<i4", count=1)
        if head.size == 0:
            return None
        width = int(head[0])
        if width <= 0:
            raise FormatError(f"{path}: non-positive record width {width}")
        stride = width + 1
        f.seek(0)
        count = -1 if limit is None else limit * stride
        raw = np.fromfile(f, dtype="<i4", count=count)
    if raw.size % stride != 0:
        raise FormatError(f"{path}: truncated record ({raw.size} words, stride {stride})")
    mat = raw.reshape(-1, stride)
    if not (mat[:, 0] == width).all():
        bad = int(np.flatnonzero(mat[:, 0] != width)[0])
        raise FormatError(f"{path}: inconsistent width at record {bad}")
    return mat


def read_fvecs(path, limit: int | None = None) -> Dataset:
    """Load an fvecs file, optionally only its first `limit` records."""
    mat = _read_framed_i32(path, limit)
    if mat is None:
        return _empty_dataset()
    data = np.ascontiguousarray(mat[:, 1:]).view("<f4")
    return Dataset(dim=mat.shape[1] - 1, count=mat.shape[0], data=data)


def read_bvecs(path, limit: int | None = None) -> Dataset:
    """Load a bvecs file, widening the byte payload to float32."""
    with open(path, "rb") as f:
        head = np.fromfile(f, dtype="<i4", count=1)
        if head.size == 0:
            return _empty_dataset()
        dim = int(head[0])
        if dim <= 0:
            raise FormatError(f"{path}: non-positive record dim {dim}")
        rec = np.dtype([("dim", "<i4"), ("val", "u1", (dim,))])
        f.seek(0, 2)
        size = f.tell()
        f.seek(0)
        if size % rec.itemsize != 0:
            raise FormatError(f"{path}: truncated record (file size {size}, record {rec.itemsize})")
        count = size // rec.itemsize if limit is None else min(limit, size // rec.itemsize)
        recs = np.fromfile(f, dtype=rec, count=count)
    if not (recs["dim"] == dim).all():
        bad = int(np.flatnonzero(recs["dim"] != dim)[0])
        raise FormatError(f"{path}: inconsistent dim at record {bad}")
    data = np.ascontiguousarray(recs["val"].astype(np.float32))
    return Dataset(dim=dim, count=len(recs), data=data)


def read_ivecs(path) -> GroundTruth:
    """Load an ivecs ground-truth file."""
    mat = _read_framed_i32(path)
    if mat is None:
        return GroundTruth(depth=0, count=0, ids=np.empty((0, 0), dtype=np.int32))
    ids = np.ascontiguousarray(mat[:, 1:])
    return GroundTruth(depth=mat.shape[1] - 1, count=mat.shape[0], ids=ids)


def write_fvecs(path, dataset: Dataset) -> None:
    """Write a Dataset as fvecs; read_fvecs(write_fvecs(x)) is bit-exact."""
    if dataset.count == 0:
        open(path, "wb").close()
        return
    data = np.ascontiguousarray(dataset.data, dtype="<f4")
    out = np.empty((dataset.count, dataset.dim + 1), dtype="<i4")
    out[:, 0] = dataset.dim
    out[:, 1:] = data.view("<i4")
    out.tofile(path)


def write_ivecs(path, ids: np.ndarray) -> None:
    """Write an (n, depth) id matrix as ivecs."""
    ids = np.ascontiguousarray(ids, dtype="<i4")
    if ids.size == 0:
        open(path, "wb").close()
        return
    out = np.empty((ids.shape[0], ids.shape[1] + 1), dtype="<i4")
    out[:, 0] = ids.shape[1]
    out[:, 1:] = ids
    out.tofile(path)
