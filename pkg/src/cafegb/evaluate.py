"""Downstream classifiers and classification metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import DatasetMatrix, fit_scaler, stratified_split
from .gbdt import GbdtParams, predict_proba, train
from .ranking import CafeGbConfig, run, top_k, with_seed


@dataclass(frozen=True)
class LogRegParams:
    l2: float = 1e-4
    max_iters: int = 500
    tol: float = 1e-6
    # backtracking line search: accept f(x - t g) <= f(x) - armijo_c * t * |g|^2
    armijo_c: float = 1e-4
    shrink: float = 0.5


@dataclass
class LinearModel:
    weights: np.ndarray
    bias: float
    params: LogRegParams

    def predict_margin(self, X) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) @ self.weights + self.bias

    def predict_proba(self, X) -> np.ndarray:
        return 1.0 / (1.0 + np.exp(-np.clip(self.predict_margin(X), -500, 500)))


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    f1: float
    mcc: float
    roc_auc: float
    pr_auc: float
    seed: int
    classifier: str
    feature_set: str


def _logloss(w, b, X, y, l2):
    margin = X @ w + b
    data = float(np.mean(np.logaddexp(0.0, margin) - y * margin))
    return data + 0.5 * l2 * float(w @ w)


def _loggrad(w, b, X, y, l2):
    margin = X @ w + b
    p = 1.0 / (1.0 + np.exp(-np.clip(margin, -500, 500)))
    r = (p - y) / y.shape[0]
    return X.T @ r + l2 * w, float(r.sum())


def train_logreg(X, y, params: LogRegParams = LogRegParams()) -> LinearModel:
    """Full-batch gradient descent with backtracking line search on the
    L2-regularized mean logistic loss, from zero initialization; stops when
    the gradient norm drops to tol or max_iters is reached."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite feature values")
    if np.unique(y).size < 2:
        raise ValueError("single-class training set")
    w = np.zeros(X.shape[1])
    b = 0.0
    for _ in range(params.max_iters):
        gw, gb = _loggrad(w, b, X, y, params.l2)
        gnorm_sq = float(gw @ gw) + gb * gb
        if np.sqrt(gnorm_sq) <= params.tol:
            break
        loss = _logloss(w, b, X, y, params.l2)
        t = 1.0
        for _ in range(60):
            if _logloss(w - t * gw, b - t * gb, X, y, params.l2) <= loss - params.armijo_c * t * gnorm_sq:
                break
            t *= params.shrink
        w -= t * gw
        b -= t * gb
    return LinearModel(weights=w, bias=b, params=params)


def _confusion(y, yhat):
    y = np.asarray(y)
    yhat = np.asarray(yhat)
    if y.shape != yhat.shape:
        raise ValueError("length mismatch")
    tp = int(np.sum((y == 1) & (yhat == 1)))
    tn = int(np.sum((y == 0) & (yhat == 0)))
    fp = int(np.sum((y == 0) & (yhat == 1)))
    fn = int(np.sum((y == 1) & (yhat == 0)))
    return tp, tn, fp, fn


def accuracy(y, yhat) -> float:
    tp, tn, fp, fn = _confusion(y, yhat)
    return (tp + tn) / (tp + tn + fp + fn)


def f1(y, yhat) -> float:
    tp, _, fp, fn = _confusion(y, yhat)
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


def mcc(y, yhat) -> float:
    tp, tn, fp, fn = _confusion(y, yhat)
    denom = float(tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    if denom == 0.0:
        return 0.0
    return (tp * tn - fp * fn) / np.sqrt(denom)


def _rank_average(a: np.ndarray) -> np.ndarray:
    """1-based ranks with ties assigned the group-average rank."""
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


def roc_auc(y, scores) -> float:
    """Mann-Whitney estimator: (concordant + half of tied pairs) / (n+ * n-)."""
    y = np.asarray(y)
    scores = np.asarray(scores, dtype=np.float64)
    if y.shape != scores.shape:
        raise ValueError("length mismatch")
    n_pos = int(np.sum(y == 1))
    n_neg = y.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("roc_auc needs both classes")
    ranks = _rank_average(scores)
    u = float(ranks[y == 1].sum()) - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def pr_auc(y, scores) -> float:
    """Average precision over descending-score thresholds, each group of
    tied scores processed as one step."""
    y = np.asarray(y)
    scores = np.asarray(scores, dtype=np.float64)
    if y.shape != scores.shape:
        raise ValueError("length mismatch")
    n_pos = int(np.sum(y == 1))
    if n_pos == 0:
        raise ValueError("pr_auc needs at least one positive")
    order = np.argsort(-scores, kind="stable")
    y_sorted = y[order]
    s_sorted = scores[order]
    ap = 0.0
    tp = fp = 0
    prev_recall = 0.0
    i = 0
    n = y.shape[0]
    while i < n:
        j = i
        while j + 1 < n and s_sorted[j + 1] == s_sorted[i]:
            j += 1
        group_pos = int(np.sum(y_sorted[i:j + 1] == 1))
        tp += group_pos
        fp += (j - i + 1) - group_pos
        precision = tp / (tp + fp)
        recall = tp / n_pos
        ap += (recall - prev_recall) * precision
        prev_recall = recall
        i = j + 1
    return ap


def compute_metrics(y, proba, seed: int, classifier: str, feature_set: str) -> MetricsReport:
    """All five metrics at probability threshold 0.5."""
    yhat = (np.asarray(proba) >= 0.5).astype(np.int64)
    return MetricsReport(
        accuracy=accuracy(y, yhat),
        f1=f1(y, yhat),
        mcc=mcc(y, yhat),
        roc_auc=roc_auc(y, proba),
        pr_auc=pr_auc(y, proba),
        seed=seed,
        classifier=classifier,
        feature_set=feature_set,
    )


def _fit_predict(classifier: str, X_train, y_train, X_test, gbdt_params: GbdtParams):
    if classifier == "gbdt":
        model = train(X_train, y_train, gbdt_params)
        return predict_proba(model, X_test)
    if classifier == "logreg":
        model = train_logreg(X_train, y_train)
        return model.predict_proba(X_test)
    raise ValueError(f"unknown classifier {classifier!r}")


def run_experiment(ds: DatasetMatrix, feature_budget: int | None, classifier: str,
                   seeds, cfg: CafeGbConfig, test_fraction: float = 0.2,
                   workers: int = 1) -> list[MetricsReport]:
    """Per seed: re-split, re-standardize, reselect features (when a budget
    is given) by re-running the chunk-wise ranking on the training portion,
    then train and score on the held-out test rows. Per-seed reselection is
    what makes cross-seed stability analysis meaningful."""
    reports = []
    for seed in seeds:
        split = stratified_split(ds, test_fraction, seed)
        scaler = fit_scaler(ds, split.train_indices)
        std = scaler.transform(ds)
        train_ds = std.take_rows(split.train_indices)
        test_ds = std.take_rows(split.test_indices)
        if feature_budget is None:
            selected = None
            tag = "baseline"
        else:
            ranking = run(train_ds, with_seed(cfg, seed), workers=workers)
            selected = np.asarray(sorted(top_k(ranking, feature_budget)), dtype=np.int64)
            tag = f"cafegb-{feature_budget}"
        X_train = train_ds.values if selected is None else train_ds.values[:, selected]
        X_test = test_ds.values if selected is None else test_ds.values[:, selected]
        proba = _fit_predict(classifier, X_train, train_ds.labels, X_test, cfg.gbdt)
        reports.append(compute_metrics(test_ds.labels, proba, seed, classifier, tag))
    return reports
