"""Lloyd's k-means with k-means++ seeding.

Deterministic under a fixed seed: same data + seed reproduce the same
centroids bit for bit. Distances are squared Euclidean throughout; all
argmin ties resolve to the lowest index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# working-set cap (floats) for one assignment chunk
_CHUNK_FLOATS = 1 << 24
# above this k * dim, assignment switches from the broadcast-difference
# formula to a GEMM expansion (
#   |x - c|^2 = |x|^2 - 2 x.c + |c|^2
# ); the GEMM form can go slightly negative under cancellation, so it is
# clamped at 0 and kept away from the small-k paths the exactness tests use
_GEMM_THRESHOLD = 1 << 20


@dataclass(frozen=True)
class Codebook:
    """k centroids of dimension dim, float32, row-major."""

    centroids: np.ndarray

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    @property
    def dim(self) -> int:
        return self.centroids.shape[1]


def _as_matrix(data) -> np.ndarray:
    data = getattr(data, "data", data)
    data = np.ascontiguousarray(np.asarray(data, dtype=np.float32))
    if data.ndim != 2:
        raise ValueError("expected a 2-d array of vectors")
    return data


def _row_sq_dist(X, c):
    diff = X - c
    return np.einsum("nd,nd->n", diff, diff)


def assign_batch(centroids: np.ndarray, X: np.ndarray):
    """Nearest centroid per row of X. Returns (labels, squared distances)."""
    n, d = X.shape
    k = centroids.shape[0]
    labels = np.empty(n, dtype=np.int64)
    dists = np.empty(n, dtype=np.float32)
    use_gemm = k * d > _GEMM_THRESHOLD
    if use_gemm:
        cnorm = np.einsum("kd,kd->k", centroids, centroids)
        chunk = max(1, _CHUNK_FLOATS // k)
    else:
        chunk = max(1, _CHUNK_FLOATS // (k * d))
    for s in range(0, n, chunk):
        xs = X[s : s + chunk]
        if use_gemm:
            d2 = xs @ centroids.T
            d2 *= -2.0
            d2 += np.einsum("nd,nd->n", xs, xs)[:, None]
            d2 += cnorm
            np.maximum(d2, 0.0, out=d2)
        else:
            diff = xs[:, None, :] - centroids[None, :, :]
            d2 = np.einsum("nkd,nkd->nk", diff, diff)
        lab = d2.argmin(axis=1)
        labels[s : s + chunk] = lab
        dists[s : s + chunk] = d2[np.arange(len(lab)), lab]
    return labels, dists


def assign(codebook: Codebook, vector) -> tuple[int, float]:
    """Index and squared distance of the centroid nearest to `vector`.

    Equidistant centroids resolve to the lowest index.
    """
    v = np.asarray(vector, dtype=np.float32).ravel()
    if v.shape[0] != codebook.dim:
        raise ValueError(f"vector dim {v.shape[0]} != codebook dim {codebook.dim}")
    d2 = _row_sq_dist(codebook.centroids, v)
    idx = int(d2.argmin())
    return idx, float(d2[idx])


def _plusplus_init(X, k, rng):
    n = X.shape[0]
    cent = np.empty((k, X.shape[1]), dtype=np.float32)
    cent[0] = X[int(rng.integers(n))]
    d2 = _row_sq_dist(X, cent[0]).astype(np.float64)
    for i in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        cent[i] = X[idx]
        np.minimum(d2, _row_sq_dist(X, cent[i]), out=d2)
    return cent


def _update(X, labels, dists, centroids, k):
    d = X.shape[1]
    sums = np.zeros((k, d), dtype=np.float64)
    np.add.at(sums, labels, X)
    counts = np.bincount(labels, minlength=k)
    out = centroids.copy()
    filled = counts > 0
    out[filled] = (sums[filled] / counts[filled, None]).astype(np.float32)
    empties = np.flatnonzero(~filled)
    if empties.size:
        # steal the point currently farthest from its centroid, one per
        # empty cluster, farthest first; ties go to the lowest point index
        stealable = dists.astype(np.float64).copy()
        for e in empties:
            victim = int(stealable.argmax())
            out[e] = X[victim]
            stealable[victim] = -1.0
    return out


def train(data, k: int, iters: int = 25, seed: int = 0) -> Codebook:
    """Train a codebook of k centroids with k-means++ init and `iters` Lloyd steps.

    A learning set of exactly k distinct points is its own fixed point and
    is returned verbatim.
    """
    X = _as_matrix(data)
    n = X.shape[0]
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if iters < 1:
        raise ValueError(f"iters must be >= 1, got {iters}")
    if n < k:
        raise ValueError(f"need at least k={k} vectors, got {n}")
    if n == k and len(np.unique(X, axis=0)) == n:
        return Codebook(centroids=X.copy())
    rng = np.random.default_rng(seed)
    cent = _plusplus_init(X, k, rng)
    for _ in range(iters):
        labels, dists = assign_batch(cent, X)
        cent = _update(X, labels, dists, cent, k)
    return Codebook(centroids=np.ascontiguousarray(cent))


def refine(centroids: np.ndarray, X: np.ndarray, iters: int = 1):
    """Warm-started Lloyd steps. Returns (centroids, mean squared error).

    The reported error is measured at the final assignment, before the
    last centroid update, matching the monotone Lloyd objective.
    """
    cent = centroids
    err = 0.0
    for _ in range(iters):
        labels, dists = assign_batch(cent, X)
        err = float(dists.mean()) if len(dists) else 0.0
        cent = _update(X, labels, dists, cent, cent.shape[0])
    return cent, err


def quantization_error(codebook: Codebook, data) -> float:
    """Mean squared distance from each vector to its nearest centroid."""
    X = _as_matrix(data)
    if X.shape[0] == 0:
        return 0.0
    _, dists = assign_batch(codebook.centroids, X)
    return float(dists.mean())
