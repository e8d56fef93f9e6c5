"""Histogram-based gradient-boosted trees for binary classification.

Leaf-wise growth on second-order logistic-loss statistics. Split gains are
recorded per node for feature importance, and training sample covers are
recorded per node for Shapley attribution.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np
from numba import njit

PROBA_CLAMP = 1e-15


@dataclass(frozen=True)
class GbdtParams:
    num_rounds: int = 100
    learning_rate: float = 0.1
    max_leaves: int = 31
    min_samples_leaf: int = 20
    l2_reg: float = 0.0
    max_bins: int = 255
    min_gain_to_split: float = 0.0
    seed: int = 0  # reserved for subsampling; training is deterministic without it

    def validate(self):
        if self.num_rounds < 1:
            raise ValueError("num_rounds must be >= 1")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError("learning_rate must be in (0, 1]")
        if self.max_leaves < 2:
            raise ValueError("max_leaves must be >= 2")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")
        if self.l2_reg < 0.0:
            raise ValueError("l2_reg must be >= 0")
        if not 2 <= self.max_bins <= 255:
            raise ValueError("max_bins must be in [2, 255]")
        if self.min_gain_to_split < 0.0:
            raise ValueError("min_gain_to_split must be >= 0")


@dataclass
class Tree:
    """Flat node arrays in pre-order; feature[i] == -1 marks a leaf.

    Routing rule: go left iff x[feature] <= threshold. cover[i] counts the
    training rows that passed through node i.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    gain: np.ndarray
    value: np.ndarray
    cover: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]


@dataclass
class GbdtModel:
    base_score: float             # log-odds of clamped training prevalence
    trees: list[Tree]
    params: GbdtParams
    num_features: int
    train_loss_curve: list[float] = field(default_factory=list)


@njit(cache=True, nogil=True)
def _best_split_scan(binned, rows, g_sub, h_sub, n_bins, total_g, total_h,
                     min_leaf, lam, max_hist_bins):
    # One fused pass per feature over a small reused scratch histogram (it
    # stays cache-resident, so per-node cost tracks the rows actually
    # touched). Strict improvement (>) keeps the first maximum: ties break
    # toward the lower feature index, then the lower threshold.
    m = binned.shape[1]
    hg = np.empty(max_hist_bins)
    hh = np.empty(max_hist_bins)
    hc = np.empty(max_hist_bins, np.int64)
    count = rows.size
    best_gain = 0.0
    best_feat = -1
    best_bin = -1
    parent = total_g * total_g / (total_h + lam)
    for j in range(m):
        nb = n_bins[j]
        if nb < 2:
            continue
        for b in range(nb):
            hg[b] = 0.0
            hh[b] = 0.0
            hc[b] = 0
        for k in range(count):
            b = binned[rows[k], j]
            hg[b] += g_sub[k]
            hh[b] += h_sub[k]
            hc[b] += 1
        gl = 0.0
        hl = 0.0
        cl = 0
        for b in range(nb - 1):
            gl += hg[b]
            hl += hh[b]
            cl += hc[b]
            if count - cl < min_leaf:
                break
            if cl < min_leaf:
                continue
            gr = total_g - gl
            hr = total_h - hl
            gain = 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent)
            if gain > best_gain:
                best_gain = gain
                best_feat = j
                best_bin = b
    return best_gain, best_feat, best_bin


@njit(cache=True, nogil=True)
def _tree_route(feature, threshold, left, right, value, X, out):
    for r in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[r, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[r] += value[node]


def _column_edges(col: np.ndarray, max_bins: int) -> np.ndarray:
    """Equal-frequency bin boundaries; every boundary is an observed value.

    With at most max_bins distinct values each value gets its own bin, so
    every (feature, threshold) split the data admits is representable.
    """
    uniq = np.unique(col)
    if uniq.size <= max_bins:
        return uniq[:-1]
    sorted_col = np.sort(col)
    cuts = (np.arange(1, max_bins) * col.size) // max_bins
    edges = np.unique(sorted_col[cuts - 1])
    return edges[edges < sorted_col[-1]]


def _bin_matrix(X: np.ndarray, max_bins: int):
    n, m = X.shape
    binned = np.empty((n, m), dtype=np.uint8, order="F")
    edges = []
    n_bins = np.empty(m, dtype=np.int64)
    for j in range(m):
        e = _column_edges(X[:, j], max_bins)
        edges.append(e)
        binned[:, j] = np.searchsorted(e, X[:, j], side="left")
        n_bins[j] = e.size + 1
    return binned, edges, n_bins


def _grow_tree(binned, edges, n_bins, g, h, params: GbdtParams, max_hist_bins: int):
    """One leaf-wise tree; returns (Tree, leaf updates) or (None, []) if the
    root admits no split. The leaf with the highest candidate gain is split
    next; gain ties break toward the earliest-created leaf."""
    n = g.shape[0]
    feature = [-1]
    thr_bin = [-1]
    left = [-1]
    right = [-1]
    gain = [0.0]
    cover = [n]
    leaf_rows = {0: np.arange(n, dtype=np.int64)}
    candidates: dict[int, tuple[float, int, int]] = {}
    lam = params.l2_reg
    min_leaf = params.min_samples_leaf

    def evaluate(nid: int) -> None:
        rows = leaf_rows[nid]
        if rows.size < 2 * min_leaf:
            return
        g_sub = g[rows]
        h_sub = h[rows]
        best_gain, best_feat, best_bin = _best_split_scan(
            binned, rows, g_sub, h_sub, n_bins, float(g_sub.sum()),
            float(h_sub.sum()), min_leaf, lam, max_hist_bins)
        if best_feat >= 0 and best_gain >= params.min_gain_to_split:
            candidates[nid] = (best_gain, best_feat, best_bin)

    evaluate(0)
    n_leaves = 1
    while n_leaves < params.max_leaves and candidates:
        nid = max(candidates, key=lambda k: (candidates[k][0], -k))
        split_gain, feat, bin_idx = candidates.pop(nid)
        rows = leaf_rows.pop(nid)
        left_mask = binned[rows, feat] <= bin_idx
        rows_l = rows[left_mask]
        rows_r = rows[~left_mask]
        lid = len(feature)
        rid = lid + 1
        for child_rows in (rows_l, rows_r):
            feature.append(-1)
            thr_bin.append(-1)
            left.append(-1)
            right.append(-1)
            gain.append(0.0)
            cover.append(child_rows.size)
        feature[nid] = feat
        thr_bin[nid] = bin_idx
        left[nid] = lid
        right[nid] = rid
        gain[nid] = split_gain
        leaf_rows[lid] = rows_l
        leaf_rows[rid] = rows_r
        n_leaves += 1
        if n_leaves < params.max_leaves:
            evaluate(lid)
            evaluate(rid)

    if len(feature) == 1:
        return None, []

    value = [0.0] * len(feature)
    leaf_updates = []
    for nid, rows in leaf_rows.items():
        gsum = float(g[rows].sum())
        hsum = float(h[rows].sum())
        value[nid] = -params.learning_rate * gsum / (hsum + lam)
        leaf_updates.append((rows, value[nid]))

    threshold = [0.0 if b < 0 else float(edges[f][b])
                 for f, b in zip(feature, thr_bin)]
    tree = _reorder_preorder(
        np.asarray(feature, np.int32), np.asarray(threshold),
        np.asarray(left, np.int32), np.asarray(right, np.int32),
        np.asarray(gain), np.asarray(value), np.asarray(cover, np.float64))
    return tree, leaf_updates


def _reorder_preorder(feature, threshold, left, right, gain, value, cover) -> Tree:
    n = feature.shape[0]
    order = np.empty(n, dtype=np.int64)
    pos = 0
    stack = [0]
    while stack:
        nid = stack.pop()
        order[pos] = nid
        pos += 1
        if feature[nid] >= 0:
            stack.append(right[nid])
            stack.append(left[nid])
    new_id = np.empty(n, dtype=np.int32)
    new_id[order] = np.arange(n, dtype=np.int32)

    def remap(child):
        reordered = child[order]
        return np.where(reordered >= 0, new_id[np.maximum(reordered, 0)], -1).astype(np.int32)

    return Tree(
        feature=feature[order],
        threshold=threshold[order],
        left=remap(left),
        right=remap(right),
        gain=gain[order],
        value=value[order],
        cover=cover[order],
    )


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _check_xy(X, y):
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise ValueError("X must be a nonempty 2-D matrix")
    if y.shape != (X.shape[0],):
        raise ValueError("y length must match X rows")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be binary")
    return X, y.astype(np.float64)


def train(X, y, params: GbdtParams = GbdtParams()) -> GbdtModel:
    """Boost on logistic loss with g = p - y, h = p(1 - p); trees grow
    leaf-wise from per-feature equal-frequency histograms computed once on
    the training matrix. Single-class input yields a base-score-only model.
    """
    params.validate()
    X, yf = _check_xy(X, y)
    n, m = X.shape
    prevalence = float(yf.mean())
    clamped = min(max(prevalence, PROBA_CLAMP), 1.0 - PROBA_CLAMP)
    base_score = float(np.log(clamped / (1.0 - clamped)))
    model = GbdtModel(base_score=base_score, trees=[], params=params, num_features=m)
    if prevalence in (0.0, 1.0):
        return model

    binned, edges, n_bins = _bin_matrix(X, params.max_bins)
    max_hist_bins = int(n_bins.max())
    margins = np.full(n, base_score)
    for _ in range(params.num_rounds):
        p = _sigmoid(margins)
        g = p - yf
        h = p * (1.0 - p)
        tree, leaf_updates = _grow_tree(binned, edges, n_bins, g, h, params, max_hist_bins)
        if tree is None:
            break
        for rows, val in leaf_updates:
            margins[rows] += val
        model.trees.append(tree)
        model.train_loss_curve.append(
            float(np.mean(np.logaddexp(0.0, margins) - yf * margins)))
    return model


def predict_margin(model: GbdtModel, X) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.num_features:
        raise ValueError(f"X must have {model.num_features} columns")
    out = np.full(X.shape[0], model.base_score)
    for tree in model.trees:
        _tree_route(tree.feature, tree.threshold, tree.left, tree.right,
                    tree.value, X, out)
    return out


def predict_proba(model: GbdtModel, X) -> np.ndarray:
    return np.clip(_sigmoid(predict_margin(model, X)), PROBA_CLAMP, 1.0 - PROBA_CLAMP)


def gain_importance(model: GbdtModel) -> np.ndarray:
    """Total split gain per feature, accumulated tree by tree in node order."""
    scores = np.zeros(model.num_features)
    for tree in model.trees:
        internal = tree.feature >= 0
        np.add.at(scores, tree.feature[internal], tree.gain[internal])
    return scores


def model_to_json(model: GbdtModel) -> str:
    return json.dumps({
        "format_version": 1,
        "params": asdict(model.params),
        "base_score": model.base_score,
        "num_features": model.num_features,
        "trees": [{
            "feature": tree.feature.tolist(),
            "threshold": tree.threshold.tolist(),
            "left": tree.left.tolist(),
            "right": tree.right.tolist(),
            "gain": tree.gain.tolist(),
            "value": tree.value.tolist(),
            "cover": tree.cover.tolist(),
        } for tree in model.trees],
    })


def model_from_json(text: str) -> GbdtModel:
    doc = json.loads(text)
    if doc.get("format_version") != 1:
        raise ValueError(f"unsupported model format: {doc.get('format_version')!r}")
    trees = [Tree(
        feature=np.asarray(t["feature"], np.int32),
        threshold=np.asarray(t["threshold"], np.float64),
        left=np.asarray(t["left"], np.int32),
        right=np.asarray(t["right"], np.int32),
        gain=np.asarray(t["gain"], np.float64),
        value=np.asarray(t["value"], np.float64),
        cover=np.asarray(t["cover"], np.float64),
    ) for t in doc["trees"]]
    return GbdtModel(
        base_score=doc["base_score"],
        trees=trees,
        params=GbdtParams(**doc["params"]),
        num_features=doc["num_features"],
    )


def write_importance_csv(path, feature_names, scores) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("feature_name,gain\n")
        for name, score in zip(feature_names, scores):
            fh.write(f"{name},{float(score)!r}\n")
