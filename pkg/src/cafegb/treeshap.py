"""Exact per-feature Shapley attribution for the boosted-tree ensemble.

Path-dependent variant: conditional expectations follow the tree, weighting
children by their training-cover fractions, so no background dataset is
needed at explanation time. Contributions explain the margin (log-odds),
which keeps additivity exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .gbdt import GbdtModel, Tree, predict_margin


@dataclass(frozen=True)
class ShapRow:
    contributions: np.ndarray  # per-feature Shapley value of the margin
    base_value: float          # cover-weighted expected margin


@dataclass(frozen=True)
class ShapSummary:
    features: np.ndarray       # ranked by mean |contribution|, descending
    mean_abs: np.ndarray
    frac_positive: np.ndarray  # share of explained rows pushed toward the positive class


# no disk cache here: numba caching of self-recursive functions is unreliable
@njit(nogil=True)
def _shap_recurse(feature, threshold, left, right, value, cover, x, phi,
                  node, pd, pz, po, pw, parent_zero, parent_one, parent_feat):
    # extend the path of unique features with the incoming split
    l = pd.size
    d2 = np.empty(l + 1, np.int64)
    z2 = np.empty(l + 1, np.float64)
    o2 = np.empty(l + 1, np.float64)
    w2 = np.empty(l + 1, np.float64)
    for i in range(l):
        d2[i] = pd[i]
        z2[i] = pz[i]
        o2[i] = po[i]
        w2[i] = pw[i]
    d2[l] = parent_feat
    z2[l] = parent_zero
    o2[l] = parent_one
    w2[l] = 1.0 if l == 0 else 0.0
    for i in range(l - 1, -1, -1):
        w2[i + 1] += parent_one * w2[i] * (i + 1.0) / (l + 1.0)
        w2[i] = parent_zero * w2[i] * (l - i) / (l + 1.0)

    length = l + 1
    if feature[node] < 0:
        # leaf: each feature on the path gets its unwound weight sum
        for i in range(1, length):
            one_f = o2[i]
            zero_f = z2[i]
            total = 0.0
            next_one = w2[length - 1]
            if one_f != 0.0:
                for j in range(length - 2, -1, -1):
                    tmp = next_one * length / ((j + 1.0) * one_f)
                    total += tmp
                    next_one = w2[j] - tmp * zero_f * (length - 1.0 - j) / length
            else:
                for j in range(length - 2, -1, -1):
                    total += w2[j] * length / (zero_f * (length - 1.0 - j))
            phi[d2[i]] += total * (o2[i] - z2[i]) * value[node]
        return

    f = feature[node]
    if x[f] <= threshold[node]:
        hot, cold = left[node], right[node]
    else:
        hot, cold = right[node], left[node]

    incoming_zero = 1.0
    incoming_one = 1.0
    k = -1
    for i in range(1, length):
        if d2[i] == f:
            k = i
            break
    if k >= 0:
        # the feature already conditions the path: undo its extension first
        incoming_zero = z2[k]
        incoming_one = o2[k]
        one_f = o2[k]
        zero_f = z2[k]
        next_one = w2[length - 1]
        for j in range(length - 2, -1, -1):
            if one_f != 0.0:
                tmp = w2[j]
                w2[j] = next_one * length / ((j + 1.0) * one_f)
                next_one = tmp - w2[j] * zero_f * (length - 1.0 - j) / length
            else:
                w2[j] = w2[j] * length / (zero_f * (length - 1.0 - j))
        for j in range(k, length - 1):
            d2[j] = d2[j + 1]
            z2[j] = z2[j + 1]
            o2[j] = o2[j + 1]
        length -= 1
        d2 = d2[:length]
        z2 = z2[:length]
        o2 = o2[:length]
        w2 = w2[:length]
    else:
        d2 = d2[:length]
        z2 = z2[:length]
        o2 = o2[:length]
        w2 = w2[:length]

    hot_zero = cover[hot] / cover[node]
    cold_zero = cover[cold] / cover[node]
    _shap_recurse(feature, threshold, left, right, value, cover, x, phi,
                  hot, d2, z2, o2, w2, incoming_zero * hot_zero, incoming_one, f)
    _shap_recurse(feature, threshold, left, right, value, cover, x, phi,
                  cold, d2, z2, o2, w2, incoming_zero * cold_zero, 0.0, f)


@njit(nogil=True)
def _shap_tree_batch(feature, threshold, left, right, value, cover, X, phi):
    empty_d = np.empty(0, np.int64)
    empty_f = np.empty(0, np.float64)
    for r in range(X.shape[0]):
        _shap_recurse(feature, threshold, left, right, value, cover,
                      X[r], phi[r], 0, empty_d, empty_f, empty_f, empty_f,
                      1.0, 1.0, -1)


def _tree_expected(tree: Tree, node: int = 0) -> float:
    """Cover-weighted expectation of the tree output."""
    if tree.feature[node] < 0:
        return float(tree.value[node])
    lc, rc = tree.left[node], tree.right[node]
    wl = tree.cover[lc] / tree.cover[node]
    wr = tree.cover[rc] / tree.cover[node]
    return wl * _tree_expected(tree, lc) + wr * _tree_expected(tree, rc)


def expected_margin(model: GbdtModel) -> float:
    return model.base_score + sum(_tree_expected(tree) for tree in model.trees)


def shap_matrix(model: GbdtModel, X) -> tuple[np.ndarray, float]:
    """Per-row, per-feature contributions phi (n, m) plus the shared base
    value; base + phi.sum(axis=1) reproduces predict_margin."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.num_features:
        raise ValueError(f"X must have {model.num_features} columns")
    for tree in model.trees:
        if np.any(tree.cover <= 0):
            raise ValueError("model lacks positive per-node cover counts")
    phi = np.zeros((X.shape[0], model.num_features))
    for tree in model.trees:
        _shap_tree_batch(tree.feature, tree.threshold, tree.left, tree.right,
                         tree.value, tree.cover, X, phi)
    return phi, expected_margin(model)


def tree_shap(model: GbdtModel, x) -> ShapRow:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("x must be a single feature row")
    phi, base = shap_matrix(model, x.reshape(1, -1))
    return ShapRow(contributions=phi[0], base_value=base)


def shap_summary(model: GbdtModel, X, top: int) -> ShapSummary:
    """Features ranked by mean absolute contribution over the explanation
    set, truncated to the top entries; ties break toward the lower index."""
    if top < 1:
        raise ValueError("top must be >= 1")
    phi, _ = shap_matrix(model, X)
    mean_abs = np.abs(phi).mean(axis=0)
    frac_positive = (phi > 0).mean(axis=0)
    order = np.argsort(-mean_abs, kind="stable")[:min(top, model.num_features)]
    return ShapSummary(
        features=order.astype(np.int64),
        mean_abs=mean_abs[order],
        frac_positive=frac_positive[order],
    )
