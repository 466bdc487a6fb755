"""Product quantizer training, encoding, decoding and model persistence.

A vector is split into m sub-vectors of dsub dims; each sub-vector is
encoded by an independent k-centroid sub-quantizer (k = 2^b). The
optimized variant learns an orthonormal rotation R and encodes R·x.
Codes pack to ceil(m*b/8) bytes: two codes per byte for b=4 (low nibble
= even sub-code), one byte per code for b=8, little-endian u16 for b=16.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from . import kmeans

MODEL_MAGIC = b"QADC"
MODEL_VERSION = 1

SUPPORTED_BITS = (4, 8, 16)


@dataclass
class ProductQuantizer:
    m: int
    b: int
    codebooks: np.ndarray  # (m, k, dsub) float32
    rotation: np.ndarray | None = None  # (d, d) float32, orthonormal
    train_errors: list = field(default_factory=list)  # per-alternation MSE (OPQ only)

    def __post_init__(self) -> None:
        if self.b not in SUPPORTED_BITS:
            raise ValueError(f"unsupported b={self.b}, expected one of {SUPPORTED_BITS}")
        if self.codebooks.ndim != 3 or self.codebooks.shape[:2] != (self.m, 1 << self.b):
            raise ValueError(
                f"codebooks shape {self.codebooks.shape} does not match m={self.m}, k={1 << self.b}"
            )
        if self.rotation is not None and self.rotation.shape != (self.d, self.d):
            raise ValueError(
                f"rotation shape {self.rotation.shape} does not match d={self.d}"
            )

    @property
    def k(self) -> int:
        return 1 << self.b

    @property
    def dsub(self) -> int:
        return self.codebooks.shape[2]

    @property
    def d(self) -> int:
        return self.m * self.dsub

    @property
    def code_bytes(self) -> int:
        return (self.m * self.b + 7) // 8

    def codebook(self, j: int) -> kmeans.Codebook:
        return kmeans.Codebook(centroids=self.codebooks[j])


@dataclass(frozen=True)
class PqCode:
    codes: np.ndarray  # (m,) uint16 sub-indices
    packed: bytes

    @property
    def m(self) -> int:
        return self.codes.shape[0]


def _validate_geometry(d, m, b, count):
    if b not in SUPPORTED_BITS:
        raise ValueError(f"unsupported b={b}, expected one of {SUPPORTED_BITS}")
    if d % m != 0:
        raise ValueError(f"d={d} not divisible by m={m}")
    if b == 4 and m % 2 != 0:
        raise ValueError("b=4 requires an even m (two sub-codes per packed byte)")
    if count < (1 << b):
        raise ValueError(f"learning set of {count} vectors cannot train k={1 << b} centroids")


def _subspace_seeds(seed, m):
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(m)]


def pack_codes(codes: np.ndarray, b: int) -> np.ndarray:
    """Pack an (n, m) sub-index matrix into (n, ceil(m*b/8)) bytes."""
    codes = np.ascontiguousarray(codes)
    if b == 4:
        if codes.shape[1] % 2:
            raise ValueError("4-bit packing pairs sub-indices; m must be even")
        lo = codes[:, 0::2].astype(np.uint8)
        hi = codes[:, 1::2].astype(np.uint8)
        return np.ascontiguousarray(lo | (hi << 4))
    if b == 8:
        return np.ascontiguousarray(codes.astype(np.uint8))
    if b == 16:
        flat = np.ascontiguousarray(codes.astype("<u2"))
        # explicit width: reshape cannot infer -1 when the input is empty
        return flat.view(np.uint8).reshape(codes.shape[0], 2 * codes.shape[1])
    raise ValueError(f"unsupported b={b}")


def unpack_codes(packed: np.ndarray, m: int, b: int) -> np.ndarray:
    """Inverse of pack_codes; returns (n, m) uint16."""
    packed = np.ascontiguousarray(packed, dtype=np.uint8)
    if b not in (4, 8, 16):
        raise ValueError(f"unsupported b={b}")
    expect = m * b // 8 if b != 4 else (m + 1) // 2
    if b == 4 and m % 2:
        raise ValueError("4-bit packing pairs sub-indices; m must be even")
    if packed.shape[1] != expect:
        raise ValueError(
            f"packed width {packed.shape[1]} does not match m={m}, b={b}"
        )
    if b == 4:
        out = np.empty((packed.shape[0], m), dtype=np.uint16)
        out[:, 0::2] = packed & 0x0F
        out[:, 1::2] = packed >> 4
        return out
    if b == 8:
        return packed.astype(np.uint16)
    return packed.view("<u2").astype(np.uint16)


def train_pq(learning_set, m: int, b: int, iters: int = 25, seed: int = 0) -> ProductQuantizer:
    """Train m independent sub-codebooks on the sub-vector slices of the learning set."""
    X = kmeans._as_matrix(learning_set)
    _validate_geometry(X.shape[1], m, b, X.shape[0])
    dsub = X.shape[1] // m
    k = 1 << b
    seeds = _subspace_seeds(seed, m)
    books = np.empty((m, k, dsub), dtype=np.float32)
    for j in range(m):
        sub = np.ascontiguousarray(X[:, j * dsub : (j + 1) * dsub])
        books[j] = kmeans.train(sub, k, iters=iters, seed=seeds[j]).centroids
    return ProductQuantizer(m=m, b=b, codebooks=books)


def _assign_subspaces(codebooks, X):
    """Per-sub-space nearest-centroid indices for every row of X."""
    m, k, dsub = codebooks.shape
    n = X.shape[0]
    codes = np.empty((n, m), dtype=np.uint16)
    for j in range(m):
        sub = np.ascontiguousarray(X[:, j * dsub : (j + 1) * dsub])
        labels, _ = kmeans.assign_batch(codebooks[j], sub)
        codes[:, j] = labels
    return codes


def _decode_rotated(codebooks, codes):
    """Reconstruction in the (rotated) encoding space."""
    m, _, dsub = codebooks.shape
    n = codes.shape[0]
    out = np.empty((n, m * dsub), dtype=np.float32)
    for j in range(m):
        out[:, j * dsub : (j + 1) * dsub] = codebooks[j][codes[:, j]]
    return out


def train_opq(
    learning_set,
    m: int,
    b: int,
    iters: int = 25,
    opq_iters: int = 20,
    seed: int = 0,
) -> ProductQuantizer:
    """Train an optimized product quantizer by alternating minimization.

    Each alternation refreshes the codebooks on the currently rotated
    learning set (warm-started Lloyd step), then re-solves the rotation
    as the orthogonal Procrustes fit between the original vectors and
    their reconstructions. With opq_iters=0 this degenerates to train_pq
    plus an identity rotation.
    """
    if opq_iters < 0:
        raise ValueError(f"opq_iters must be >= 0, got {opq_iters}")
    X = kmeans._as_matrix(learning_set)
    pq = train_pq(X, m, b, iters=iters, seed=seed)
    d = X.shape[1]
    R = np.eye(d, dtype=np.float32)
    errors = []
    books = pq.codebooks
    for _ in range(opq_iters):
        Xr = X @ R.T
        for j in range(m):
            dsub = pq.dsub
            sub = np.ascontiguousarray(Xr[:, j * dsub : (j + 1) * dsub])
            refreshed, _ = kmeans.refine(books[j], sub, iters=1)
            books[j] = refreshed
        codes = _assign_subspaces(books, Xr)
        Xhat = _decode_rotated(books, codes)
        # orthogonal Procrustes: minimize |X R^T - Xhat|_F over R^T R = I
        M = (X.T @ Xhat).astype(np.float64)
        U, _, Vt = np.linalg.svd(M)
        R = (U @ Vt).T.astype(np.float32)
        diff = X @ R.T - Xhat
        errors.append(float(np.einsum("nd,nd->n", diff, diff).mean()))
    pq.rotation = R
    pq.train_errors = errors
    return pq


def encode_batch(pq: ProductQuantizer, X) -> np.ndarray:
    """Encode rows of X; returns packed codes (n, code_bytes) uint8."""
    X = kmeans._as_matrix(X)
    if X.shape[1] != pq.d:
        raise ValueError(f"vector dim {X.shape[1]} != quantizer dim {pq.d}")
    if pq.rotation is not None:
        X = X @ pq.rotation.T
    return pack_codes(_assign_subspaces(pq.codebooks, X), pq.b)


def encode(pq: ProductQuantizer, vector) -> PqCode:
    """Encode one vector to its PqCode."""
    v = np.asarray(vector, dtype=np.float32).reshape(1, -1)
    packed = encode_batch(pq, v)[0]
    return PqCode(codes=unpack_codes(packed[None, :], pq.m, pq.b)[0], packed=packed.tobytes())


def decode_batch(pq: ProductQuantizer, packed: np.ndarray) -> np.ndarray:
    """Reconstruct vectors from packed codes, undoing the rotation if present."""
    codes = unpack_codes(np.atleast_2d(packed), pq.m, pq.b)
    Xhat = _decode_rotated(pq.codebooks, codes)
    if pq.rotation is not None:
        Xhat = Xhat @ pq.rotation
    return Xhat


def decode(pq: ProductQuantizer, code) -> np.ndarray:
    """Reconstruct one vector from a PqCode (or packed bytes)."""
    if isinstance(code, PqCode):
        packed = np.frombuffer(code.packed, dtype=np.uint8)
    else:
        packed = np.asarray(code, dtype=np.uint8)
    return decode_batch(pq, packed[None, :])[0]


def reconstruction_mse(pq: ProductQuantizer, X) -> float:
    """Mean squared reconstruction error of encode-then-decode over X."""
    X = kmeans._as_matrix(X)
    diff = X - decode_batch(pq, encode_batch(pq, X))
    return float(np.einsum("nd,nd->n", diff, diff).mean())


def save_model(pq: ProductQuantizer, path) -> None:
    """Write the model: magic, version, d, m, b, rotation flag, rotation, codebooks."""
    with open(path, "wb") as f:
        flag = 1 if pq.rotation is not None else 0
        f.write(MODEL_MAGIC)
        f.write(struct.pack("<IIIIB", MODEL_VERSION, pq.d, pq.m, pq.b, flag))
        if pq.rotation is not None:
            np.ascontiguousarray(pq.rotation, dtype="<f4").tofile(f)
        np.ascontiguousarray(pq.codebooks, dtype="<f4").tofile(f)


def load_model(path) -> ProductQuantizer:
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != MODEL_MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        head = f.read(17)
        if len(head) != 17:
            raise ValueError(f"{path}: truncated model header")
        version, d, m, b, flag = struct.unpack("<IIIIB", head)
        if version != MODEL_VERSION:
            raise ValueError(f"{path}: unsupported model version {version}")
        if b not in SUPPORTED_BITS or m < 1 or d < 1 or d % m != 0:
            raise ValueError(f"{path}: invalid geometry d={d} m={m} b={b}")
        rotation = None
        if flag:
            rotation = np.fromfile(f, dtype="<f4", count=d * d)
            if rotation.size != d * d:
                raise ValueError(f"{path}: truncated rotation")
            rotation = rotation.reshape(d, d)
        k = 1 << b
        dsub = d // m
        books = np.fromfile(f, dtype="<f4", count=m * k * dsub)
        if books.size != m * k * dsub:
            raise ValueError(f"{path}: truncated codebooks")
        books = books.reshape(m, k, dsub)
    return ProductQuantizer(m=m, b=b, codebooks=books, rotation=rotation)
