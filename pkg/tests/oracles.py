"""Independent brute-force oracles used to pin expected values.

Everything here recomputes results from first principles (exhaustive
enumeration, pair counting, subset sums) and stays independent of the
library code paths it checks.
"""

import itertools
import math

import numpy as np


def first_split_bruteforce(X, y, params):
    """Exhaustive (feature, threshold) search for the root split of the
    first boosting round; returns (feature, threshold) or None.

    Mirrors the trainer's contract only: logistic first-round statistics,
    the second-order gain formula, min_samples_leaf, strictly positive gain
    at least min_gain_to_split, ties to the lower feature then threshold.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, m = X.shape
    prevalence = min(max(y.mean(), 1e-15), 1 - 1e-15)
    p = np.full(n, prevalence)
    g = p - y
    h = p * (1 - p)
    total_g, total_h = g.sum(), h.sum()
    lam = params.l2_reg
    best = None
    for j in range(m):
        for t in np.unique(X[:, j]):
            mask = X[:, j] <= t
            cl = int(mask.sum())
            cr = n - cl
            if cl < params.min_samples_leaf or cr < params.min_samples_leaf:
                continue
            gl, hl = g[mask].sum(), h[mask].sum()
            gr, hr = total_g - gl, total_h - hl
            gain = 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam)
                          - total_g * total_g / (total_h + lam))
            if gain <= 0.0 or gain < params.min_gain_to_split:
                continue
            if best is None or gain > best[0]:
                best = (gain, j, float(t))
    return None if best is None else (best[1], best[2])


def tree_conditional_expectation(tree, x, subset, node=0):
    """Path-dependent expectation: known features follow x, unknown ones
    average the children by training-cover fractions."""
    f = tree.feature[node]
    if f < 0:
        return float(tree.value[node])
    lc, rc = int(tree.left[node]), int(tree.right[node])
    if int(f) in subset:
        child = lc if x[int(f)] <= tree.threshold[node] else rc
        return tree_conditional_expectation(tree, x, subset, child)
    wl = tree.cover[lc] / tree.cover[node]
    wr = tree.cover[rc] / tree.cover[node]
    return (wl * tree_conditional_expectation(tree, x, subset, lc)
            + wr * tree_conditional_expectation(tree, x, subset, rc))


def shap_bruteforce(model, x):
    """Shapley values by full subset enumeration over all model features."""
    m = model.num_features
    phi = np.zeros(m)
    for tree in model.trees:
        for i in range(m):
            others = [f for f in range(m) if f != i]
            for r in range(len(others) + 1):
                for combo in itertools.combinations(others, r):
                    weight = (math.factorial(len(combo))
                              * math.factorial(m - len(combo) - 1) / math.factorial(m))
                    s = set(combo)
                    phi[i] += weight * (
                        tree_conditional_expectation(tree, x, s | {i})
                        - tree_conditional_expectation(tree, x, s))
    return phi


def wilcoxon_enumeration(baseline, proposed):
    """Two-sided exact p by enumerating all 2^n sign assignments."""
    d = np.asarray(proposed, dtype=np.float64) - np.asarray(baseline, dtype=np.float64)
    d = d[d != 0.0]
    n = d.size
    a = np.abs(d)
    order = np.argsort(a, kind="stable")
    ranks = np.empty(n)
    ranks[order] = np.arange(1, n + 1)
    w_plus = ranks[d > 0].sum()
    count_ge = count_le = 0
    for signs in itertools.product((0, 1), repeat=n):
        w = sum(r for s, r in zip(signs, ranks) if s)
        count_ge += w >= w_plus
        count_le += w <= w_plus
    return min(1.0, 2 * min(count_le, count_ge) / 2 ** n)


def roc_auc_paircount(y, scores):
    """Mann-Whitney by literal pair counting."""
    y = np.asarray(y)
    scores = np.asarray(scores, dtype=np.float64)
    pos = scores[y == 1]
    neg = scores[y == 0]
    wins = ties = 0
    for sp in pos:
        for sn in neg:
            if sp > sn:
                wins += 1
            elif sp == sn:
                ties += 1
    return (wins + 0.5 * ties) / (pos.size * neg.size)


def pr_auc_threshold_walk(y, scores):
    """Average precision by walking distinct thresholds in descending order."""
    y = np.asarray(y)
    scores = np.asarray(scores, dtype=np.float64)
    n_pos = int((y == 1).sum())
    ap = 0.0
    prev_recall = 0.0
    for t in sorted(set(scores.tolist()), reverse=True):
        picked = scores >= t
        tp = int(((y == 1) & picked).sum())
        precision = tp / int(picked.sum())
        recall = tp / n_pos
        ap += (recall - prev_recall) * precision
        prev_recall = recall
    return ap


def confusion_counts(y, yhat):
    y = list(y)
    yhat = list(yhat)
    tp = sum(1 for a, b in zip(y, yhat) if a == 1 and b == 1)
    tn = sum(1 for a, b in zip(y, yhat) if a == 0 and b == 0)
    fp = sum(1 for a, b in zip(y, yhat) if a == 0 and b == 1)
    fn = sum(1 for a, b in zip(y, yhat) if a == 1 and b == 0)
    return tp, tn, fp, fn


def correlation_pairs_bruteforce(X, subset, threshold):
    """Per-pair Pearson loop; degenerate pairs contribute rho = 0."""
    cols = sorted(set(int(j) for j in subset))
    abs_rhos = []
    degenerate = 0
    for a, b in itertools.combinations(cols, 2):
        xa = X[:, a] - X[:, a].mean()
        xb = X[:, b] - X[:, b].mean()
        sa = float(xa @ xa)
        sb = float(xb @ xb)
        if sa == 0.0 or sb == 0.0:
            abs_rhos.append(0.0)
            degenerate += 1
            continue
        abs_rhos.append(abs(float(xa @ xb) / math.sqrt(sa * sb)))
    abs_rhos = np.asarray(abs_rhos)
    strong = int((abs_rhos > threshold).sum())
    return (float(abs_rhos.mean()), float(abs_rhos.max()),
            100.0 * strong / abs_rhos.size, degenerate)
