"""Deterministic overlapping chunk planning over a seeded row permutation."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .data import DatasetMatrix


@dataclass(frozen=True)
class ChunkPlan:
    n: int
    chunk_size: int
    overlap: float
    seed: int
    permutation: np.ndarray           # seeded uniform shuffle of 0..n-1
    windows: tuple[tuple[int, int], ...]  # half-open [start, end) into the permutation

    @property
    def num_chunks(self) -> int:
        return len(self.windows)

    def to_json(self) -> str:
        # the permutation is reproducible from the seed and is not stored
        return json.dumps({
            "n": self.n,
            "chunk_size": self.chunk_size,
            "overlap": self.overlap,
            "seed": self.seed,
            "windows": [list(w) for w in self.windows],
        })

    @staticmethod
    def from_json(text: str) -> "ChunkPlan":
        doc = json.loads(text)
        plan = plan_chunks(doc["n"], doc["chunk_size"], doc["overlap"], doc["seed"])
        if [list(w) for w in plan.windows] != doc["windows"]:
            raise ValueError("stored windows disagree with the stride rule")
        return plan


def plan_chunks(n: int, chunk_size: int, overlap: float, seed: int) -> ChunkPlan:
    """Seeded shuffle of the rows plus a sliding window of full-length chunks.

    Stride is max(1, floor(chunk_size * (1 - overlap))); starts run 0, s, 2s,
    ... while start + chunk_size < n, then one final start clamped to
    n - chunk_size (skipped if it repeats the previous start). When
    n < chunk_size the plan degenerates to the single window [0, n).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if chunk_size < 2:
        raise ValueError("chunk_size must be >= 2")
    if not 0.0 <= overlap < 1.0:
        raise ValueError("overlap must be in [0, 1)")

    permutation = np.random.default_rng(seed).permutation(n)
    if n < chunk_size:
        windows = [(0, n)]
    else:
        stride = max(1, int(np.floor(chunk_size * (1.0 - overlap))))
        starts = []
        start = 0
        while start + chunk_size < n:
            starts.append(start)
            start += stride
        final = n - chunk_size
        if not starts or starts[-1] != final:
            starts.append(final)
        windows = [(s, s + chunk_size) for s in starts]
    return ChunkPlan(
        n=n,
        chunk_size=chunk_size,
        overlap=overlap,
        seed=seed,
        permutation=permutation,
        windows=tuple(windows),
    )


def materialize_chunk(ds: DatasetMatrix, plan: ChunkPlan, i: int) -> DatasetMatrix:
    """Rows permutation[start:end) of ds, in permutation order."""
    if plan.n != ds.rows:
        raise ValueError("plan was built for a different row count")
    if not 0 <= i < plan.num_chunks:
        raise IndexError(f"chunk index {i} out of range (N={plan.num_chunks})")
    start, end = plan.windows[i]
    return ds.take_rows(plan.permutation[start:end])
