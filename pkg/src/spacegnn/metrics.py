"""Binary classification metrics used for node anomaly detection."""

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import OneClassOnlyError


@dataclass
class Metrics:
    auc: float
    f1_macro: float
    confusion: np.ndarray  # rows: true class, cols: predicted class

    def to_dict(self):
        return {"auc": self.auc, "f1_macro": self.f1_macro, "confusion": self.confusion.tolist()}


def auc_score(scores, labels):
    """ROC AUC via the Mann-Whitney rank statistic (ties count one half)."""
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    labels = np.asarray(labels).reshape(-1)
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise OneClassOnlyError("AUC needs both classes present")
    ranks = rankdata(scores)
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def predict(Z):
    """Row argmax of a two-column probability matrix; ties go to class 0."""
    Z = np.asarray(Z)
    return (Z[:, 1] > Z[:, 0]).astype(np.int64)


def confusion_matrix(pred, labels):
    pred = np.asarray(pred, dtype=np.int64).reshape(-1)
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    cm = np.zeros((2, 2), dtype=np.int64)
    np.add.at(cm, (labels, pred), 1)
    return cm


def f1_macro(pred, labels):
    """Unweighted mean of the two per-class F1 scores (0 when undefined)."""
    cm = confusion_matrix(pred, labels)
    if cm.sum() == 0:
        raise ValueError("f1_macro needs at least one prediction")
    scores = []
    for c in (0, 1):
        tp = cm[c, c]
        fp = cm[1 - c, c]
        fn = cm[c, 1 - c]
        denom = 2 * tp + fp + fn
        scores.append(2.0 * tp / denom if denom > 0 else 0.0)
    return float(np.mean(scores))
