"""Deterministic synthetic corpora with exact ground truth.

Vectors are drawn around shared cluster centers, scaled by a decaying
per-dimension spectrum and mixed through a random orthonormal basis, so
variance is spread unevenly across correlated dimensions. That gives
coarse quantizers real cell structure and a learned rotation something
to recover, without any external data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .vecio import Dataset, GroundTruth


@dataclass(frozen=True)
class Corpus:
    learn: Dataset
    base: Dataset
    queries: Dataset


def make_corpus(d: int = 128, n_learn: int = 25000, n_base: int = 100000,
                n_query: int = 200, seed: int = 0, clusters: int = 64,
                spread: float = 0.35) -> Corpus:
    """Learn/base/query splits drawn from one clustered distribution."""
    if min(d, n_learn, n_base, n_query, clusters) < 1:
        raise ValueError("all corpus sizes must be positive")
    rng = np.random.default_rng(seed)
    centers = rng.standard_normal((clusters, d))
    spectrum = np.power(10.0, -np.arange(d) / d)  # energy decays 1 -> 0.1
    mix, _ = np.linalg.qr(rng.standard_normal((d, d)))

    def draw(n: int) -> Dataset:
        c = rng.integers(0, clusters, size=n)
        x = centers[c] + spread * rng.standard_normal((n, d))
        return Dataset.from_array(((x * spectrum) @ mix.T).astype(np.float32))

    return Corpus(learn=draw(n_learn), base=draw(n_base), queries=draw(n_query))


def ground_truth(base: Dataset, queries: Dataset, depth: int = 100,
                 chunk: int = 64) -> GroundTruth:
    """Exact nearest neighbors by brute force, ties broken by lower id.

    Candidates are preselected with a float32 GEMM, then the survivors
    are re-measured exactly in float64 before the final ordering.
    """
    if depth < 1 or depth > base.count:
        raise ValueError("depth must be in 1..base.count")
    X = base.data
    n = X.shape[0]
    pad = min(n - 1, depth + 56)  # margin for float32 preselection error
    xnorm = np.einsum("nd,nd->n", X, X)
    out = np.empty((queries.count, depth), dtype=np.int32)
    X64 = X.astype(np.float64)
    for s in range(0, queries.count, chunk):
        Q = queries.data[s:s + chunk]
        d2 = xnorm[None, :] - 2.0 * (Q @ X.T)  # query norm omitted: rank-only
        cand = np.argpartition(d2, pad, axis=1)[:, :pad + 1]
        for i in range(Q.shape[0]):
            ci = cand[i]
            diff = X64[ci] - Q[i].astype(np.float64)[None, :]
            ex = np.einsum("nd,nd->n", diff, diff)
            order = np.lexsort((ci, ex))[:depth]
            out[s + i] = ci[order]
    return GroundTruth(depth=depth, count=queries.count, ids=out)
