"""Chunk-wise training, importance aggregation, and the global feature ranking."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .chunker import materialize_chunk, plan_chunks
from .data import DatasetMatrix
from .gbdt import GbdtParams, gain_importance, train


@dataclass(frozen=True)
class CafeGbConfig:
    chunk_size: int = 15000
    overlap: float = 0.1
    gbdt: GbdtParams = field(default_factory=GbdtParams)
    seed: int = 42
    normalize_chunks: bool = False  # L1-normalize each chunk's gains (ablation; off by default)


@dataclass(frozen=True)
class FeatureRanking:
    order: np.ndarray       # feature indices, descending aggregated score
    aggregated: np.ndarray  # per-feature summed gain


def aggregate(importances) -> np.ndarray:
    """Elementwise sum, accumulated sequentially in the given order."""
    vectors = list(importances)
    if not vectors:
        raise ValueError("cannot aggregate an empty sequence")
    acc = np.array(vectors[0], dtype=np.float64, copy=True)
    for vec in vectors[1:]:
        vec = np.asarray(vec, dtype=np.float64)
        if vec.shape != acc.shape:
            raise ValueError("importance vectors have mismatched lengths")
        acc += vec
    return acc


def rank(scores) -> FeatureRanking:
    """Stable descending sort; ties break toward the lower feature index."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size == 0:
        raise ValueError("cannot rank an empty importance vector")
    order = np.argsort(-scores, kind="stable")
    return FeatureRanking(order=order.astype(np.int64), aggregated=scores)


def top_k(ranking: FeatureRanking, k: int) -> set[int]:
    m = ranking.order.shape[0]
    if not 1 <= k <= m:
        raise ValueError(f"k must be in [1, {m}]")
    return {int(j) for j in ranking.order[:k]}


def run(train_ds: DatasetMatrix, cfg: CafeGbConfig, workers: int = 1) -> FeatureRanking:
    """Plan chunks over a seeded row shuffle, train one model per chunk,
    and sum per-chunk gain importances in ascending chunk order.

    Chunks may train concurrently; the summation order is fixed, so the
    result is independent of the worker count.
    """
    plan = plan_chunks(train_ds.rows, cfg.chunk_size, cfg.overlap, cfg.seed)

    def chunk_importance(i: int) -> np.ndarray:
        chunk = materialize_chunk(train_ds, plan, i)
        scores = gain_importance(train(chunk.values, chunk.labels, cfg.gbdt))
        if cfg.normalize_chunks:
            total = scores.sum()
            if total > 0.0:
                scores = scores / total
        return scores

    indices = range(plan.num_chunks)
    if workers <= 1:
        per_chunk = [chunk_importance(i) for i in indices]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_chunk = list(pool.map(chunk_importance, indices))
    return rank(aggregate(per_chunk))


def with_seed(cfg: CafeGbConfig, seed: int) -> CafeGbConfig:
    return replace(cfg, seed=seed)


def ranking_records(ranking: FeatureRanking, feature_names) -> list[dict]:
    """JSON-ready rows: [{rank, feature_name, aggregated_gain}, ...]."""
    return [{
        "rank": pos + 1,
        "feature_name": feature_names[int(j)],
        "aggregated_gain": float(ranking.aggregated[int(j)]),
    } for pos, j in enumerate(ranking.order)]
