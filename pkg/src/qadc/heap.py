"""Bounded max-heap of (id, distance) candidates.

Array-backed so the compiled scan kernels can push into the same storage
the Python paths use. Ordering is lexicographic on (distance, id): the
root is the worst candidate, equal distances evict the higher id first,
so results are deterministic. Any method may leave the arrays in a
different internal arrangement, but the candidate multiset is always the
R best seen so far.
"""

from __future__ import annotations

import numpy as np


class NeighborHeap:
    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self.dists = np.empty(capacity, dtype=np.float32)
        self.ids = np.empty(capacity, dtype=np.int64)
        self.size = 0

    def __len__(self) -> int:
        return self.size

    @property
    def full(self) -> bool:
        return self.size >= self.capacity

    def worst(self):
        """(distance, id) of the current eviction candidate, or None if empty."""
        if self.size == 0:
            return None
        return float(self.dists[0]), int(self.ids[0])

    def _less(self, a: int, b: int) -> bool:
        # entry a orders strictly before entry b under (dist, id)
        if self.dists[a] != self.dists[b]:
            return self.dists[a] < self.dists[b]
        return self.ids[a] < self.ids[b]

    def _swap(self, a: int, b: int):
        self.dists[a], self.dists[b] = self.dists[b], self.dists[a]
        self.ids[a], self.ids[b] = self.ids[b], self.ids[a]

    def _sift_up(self, pos: int):
        while pos > 0:
            parent = (pos - 1) >> 1
            if not self._less(parent, pos):
                return
            self._swap(parent, pos)
            pos = parent

    def _sift_down(self, pos: int):
        n = self.size
        while True:
            left = 2 * pos + 1
            right = left + 1
            big = pos
            if left < n and self._less(big, left):
                big = left
            if right < n and self._less(big, right):
                big = right
            if big == pos:
                return
            self._swap(big, pos)
            pos = big

    def push(self, id: int, dist: float):
        """Insert a candidate, evicting the worst when at capacity."""
        if self.size < self.capacity:
            self.dists[self.size] = dist
            self.ids[self.size] = id
            self.size += 1
            self._sift_up(self.size - 1)
            return
        d0, i0 = self.dists[0], self.ids[0]
        if dist < d0 or (dist == d0 and id < i0):
            self.dists[0] = dist
            self.ids[0] = id
            self._sift_down(0)

    def push_batch(self, ids, dists):
        """Merge a batch of candidates; equivalent to pushing them one by one."""
        ids = np.asarray(ids, dtype=np.int64)
        dists = np.asarray(dists, dtype=np.float32)
        if ids.shape[0] == 0:
            return
        md = np.concatenate([self.dists[: self.size], dists])
        mi = np.concatenate([self.ids[: self.size], ids])
        keep = np.lexsort((mi, md))[: self.capacity]
        # descending (dist, id) order is a valid max-heap layout
        keep = keep[::-1]
        self.size = keep.shape[0]
        self.dists[: self.size] = md[keep]
        self.ids[: self.size] = mi[keep]

    def pop(self):
        """Remove and return the worst (id, distance); non-increasing across pops."""
        if self.size == 0:
            raise IndexError("pop from an empty heap")
        out = (int(self.ids[0]), float(self.dists[0]))
        self.size -= 1
        if self.size:
            self.dists[0] = self.dists[self.size]
            self.ids[0] = self.ids[self.size]
            self._sift_down(0)
        return out

    def extract(self):
        """Non-destructive (ids, dists) copies sorted ascending by (dist, id)."""
        order = np.lexsort((self.ids[: self.size], self.dists[: self.size]))
        return self.ids[order].copy(), self.dists[order].copy()
