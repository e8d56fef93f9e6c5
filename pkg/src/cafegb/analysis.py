"""Feature-budget scans, stability, redundancy, and paired significance tests."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.stats import t as student_t

from .data import DatasetMatrix, fit_scaler, stratified_split
from .evaluate import _fit_predict, accuracy
from .ranking import CafeGbConfig, run, top_k, with_seed

EXACT_WILCOXON_MAX_N = 25


@dataclass(frozen=True)
class StabilityRow:
    k: int
    accuracy_mean: float
    accuracy_std: float
    jaccard_stability: float


@dataclass(frozen=True)
class StabilityReport:
    rows: tuple[StabilityRow, ...]


@dataclass(frozen=True)
class RedundancyReport:
    k: int
    mean_abs_rho: float
    max_abs_rho: float
    strong_pair_pct: float   # percent of pairs with |rho| > threshold
    threshold: float
    degenerate_pairs: int    # zero-variance pairs, counted as rho = 0


@dataclass(frozen=True)
class WilcoxonResult:
    n_effective: int
    w_plus: float
    p_two_sided: float
    method: str              # "exact" | "normal-approx"
    ci_low: float
    ci_high: float


def jaccard(a, b) -> float:
    a, b = set(a), set(b)
    union = a | b
    if not union:
        raise ValueError("jaccard of two empty sets is undefined")
    return len(a & b) / len(union)


def stability(sets) -> float:
    """Mean Jaccard similarity over all unordered pairs of selections."""
    sets = [set(s) for s in sets]
    if len(sets) < 2:
        raise ValueError("stability needs at least 2 sets")
    pairs = list(combinations(sets, 2))
    return sum(jaccard(a, b) for a, b in pairs) / len(pairs)


def pearson_flag(x, y) -> tuple[float, bool]:
    """Sample correlation; a zero-variance side yields (0.0, degenerate=True)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("length mismatch")
    if x.size < 2:
        raise ValueError("need at least 2 points")
    xc = x - x.mean()
    yc = y - y.mean()
    sx = float(xc @ xc)
    sy = float(yc @ yc)
    if sx == 0.0 or sy == 0.0:
        return 0.0, True
    return float(xc @ yc) / math.sqrt(sx * sy), False


def pearson(x, y) -> float:
    return pearson_flag(x, y)[0]


def correlation_stats(X, subset, threshold: float = 0.8) -> RedundancyReport:
    """Absolute pairwise correlations within a feature subset: mean, max,
    and the percentage of strong pairs over all k(k-1)/2 pairs."""
    cols = np.asarray(sorted(int(j) for j in set(subset)), dtype=np.int64)
    k = cols.size
    if k < 2:
        raise ValueError("subset must contain at least 2 features")
    sub = np.asarray(X, dtype=np.float64)[:, cols]
    centered = sub - sub.mean(axis=0)
    norms = np.sqrt((centered ** 2).sum(axis=0))
    degenerate_col = norms == 0.0
    safe = np.where(degenerate_col, 1.0, norms)
    z = centered / safe
    corr = np.clip(z.T @ z, -1.0, 1.0)
    iu = np.triu_indices(k, 1)
    abs_rho = np.abs(corr[iu])
    pair_degenerate = degenerate_col[iu[0]] | degenerate_col[iu[1]]
    abs_rho = np.where(pair_degenerate, 0.0, abs_rho)
    n_pairs = abs_rho.size
    strong = int(np.sum(abs_rho > threshold))
    return RedundancyReport(
        k=k,
        mean_abs_rho=float(abs_rho.mean()),
        max_abs_rho=float(abs_rho.max()),
        strong_pair_pct=100.0 * strong / n_pairs,
        threshold=threshold,
        degenerate_pairs=int(pair_degenerate.sum()),
    )


def _rank_abs(d: np.ndarray) -> np.ndarray:
    a = np.abs(d)
    order = np.argsort(a, kind="stable")
    ranks = np.empty(a.shape[0])
    i = 0
    while i < a.shape[0]:
        j = i
        while j + 1 < a.shape[0] and a[order[j + 1]] == a[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _exact_tail_counts(n: int, w: int) -> tuple[int, int]:
    """Subset-sum counting over ranks {1..n}: how many of the 2^n sign
    assignments give W+ <= w and W+ >= w. Exact integer arithmetic."""
    total = n * (n + 1) // 2
    ways = [0] * (total + 1)
    ways[0] = 1
    for r in range(1, n + 1):
        for s in range(total, r - 1, -1):
            ways[s] += ways[s - r]
    return sum(ways[:w + 1]), sum(ways[w:])


def wilcoxon_signed_rank(baseline, proposed) -> WilcoxonResult:
    """Paired signed-rank test of proposed - baseline.

    Zero differences are dropped; |d| are ranked with average ranks on ties;
    W+ sums the ranks of positive differences. With n_effective <= 25 and no
    tied |d| the two-sided p is exact (2 * min tail probability over all 2^n
    sign assignments, capped at 1); otherwise a tie-corrected normal
    approximation is used, without continuity correction. The CI is the
    Student-t 95% interval of the proposed-side mean.
    """
    baseline = np.asarray(baseline, dtype=np.float64)
    proposed = np.asarray(proposed, dtype=np.float64)
    if baseline.shape != proposed.shape or baseline.ndim != 1:
        raise ValueError("length mismatch")
    if baseline.size < 2:
        raise ValueError("need at least 2 paired samples")
    d = proposed - baseline
    d = d[d != 0.0]
    n = d.size
    if n == 0:
        raise ValueError("all paired differences are zero")
    ranks = _rank_abs(d)
    w_plus = float(ranks[d > 0].sum())
    tied = np.unique(np.abs(d)).size < n

    if n <= EXACT_WILCOXON_MAX_N and not tied:
        n_le, n_ge = _exact_tail_counts(n, int(round(w_plus)))
        p = min(1.0, 2 * min(n_le, n_ge) / 2 ** n)
        method = "exact"
    else:
        mean = n * (n + 1) / 4.0
        var = n * (n + 1) * (2 * n + 1) / 24.0
        _, counts = np.unique(np.abs(d), return_counts=True)
        var -= float(np.sum(counts ** 3 - counts)) / 48.0
        z = (w_plus - mean) / math.sqrt(var)
        p = min(1.0, math.erfc(abs(z) / math.sqrt(2.0)))
        method = "normal-approx"

    n_prop = proposed.size
    center = float(proposed.mean())
    half = float(student_t.ppf(0.975, n_prop - 1) * proposed.std(ddof=1) / math.sqrt(n_prop))
    return WilcoxonResult(
        n_effective=n,
        w_plus=w_plus,
        p_two_sided=p,
        method=method,
        ci_low=center - half,
        ci_high=center + half,
    )


def kscan(ds: DatasetMatrix, k_grid, seeds, cfg: CafeGbConfig,
          classifier: str = "gbdt", test_fraction: float = 0.2,
          workers: int = 1) -> StabilityReport:
    """Per seed, rank features once on the training portion, then score each
    budget k on the held-out rows; per k, report accuracy mean/std across
    seeds and the mean pairwise Jaccard of the selected top-k sets."""
    k_grid = [int(k) for k in k_grid]
    if any(k > ds.features or k < 1 for k in k_grid):
        raise ValueError("every k must be in [1, m]")
    acc: dict[int, list[float]] = {k: [] for k in k_grid}
    sets: dict[int, list[set[int]]] = {k: [] for k in k_grid}
    for seed in seeds:
        split = stratified_split(ds, test_fraction, seed)
        scaler = fit_scaler(ds, split.train_indices)
        std = scaler.transform(ds)
        train_ds = std.take_rows(split.train_indices)
        test_ds = std.take_rows(split.test_indices)
        ranking = run(train_ds, with_seed(cfg, seed), workers=workers)
        for k in k_grid:
            selected = np.asarray(sorted(top_k(ranking, k)), dtype=np.int64)
            proba = _fit_predict(classifier, train_ds.values[:, selected],
                                 train_ds.labels, test_ds.values[:, selected], cfg.gbdt)
            yhat = (proba >= 0.5).astype(np.int64)
            acc[k].append(accuracy(test_ds.labels, yhat))
            sets[k].append(set(int(j) for j in selected))
    rows = []
    for k in k_grid:
        values = np.asarray(acc[k])
        rows.append(StabilityRow(
            k=k,
            accuracy_mean=float(values.mean()),
            accuracy_std=float(values.std(ddof=1)) if values.size > 1 else 0.0,
            jaccard_stability=stability(sets[k]) if len(sets[k]) > 1 else 1.0,
        ))
    return StabilityReport(rows=tuple(rows))


def select_budget(report: StabilityReport, delta: float = 0.001) -> int:
    """Among budgets within delta of the best mean accuracy, pick the one
    with the highest stability; ties break toward the smaller k."""
    if not report.rows:
        raise ValueError("empty stability report")
    if delta < 0:
        raise ValueError("delta must be >= 0")
    best_acc = max(row.accuracy_mean for row in report.rows)
    eligible = [row for row in report.rows if row.accuracy_mean >= best_acc - delta]
    winner = max(eligible, key=lambda row: (row.jaccard_stability, -row.k))
    return winner.k
