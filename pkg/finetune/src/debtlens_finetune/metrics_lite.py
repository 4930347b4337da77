"""Self-contained metric computation emitting the primary report JSON schema.

Kept local so this package touches the primary only through files. Same
conventions: 0/0 quotients are 0, MCC with a zero denominator factor is 0,
AUC is the trapezoidal threshold sweep (ties worth 1/2).
"""

from __future__ import annotations

import math

import numpy as np


def report_dict(
    scores: np.ndarray, truths: np.ndarray, threshold: float, model: str, split: str
) -> dict:
    scores = np.asarray(scores, dtype=np.float64)
    truths = np.asarray(truths, dtype=bool)
    preds = scores >= threshold
    tp = int((preds & truths).sum())
    fp = int((preds & ~truths).sum())
    tn = int((~preds & ~truths).sum())
    fn = int((~preds & truths).sum())
    total = tp + fp + tn + fn
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    accuracy = (tp + tn) / total if total else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    den_sq = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    mcc = (tp * tn - fp * fn) / math.sqrt(den_sq) if den_sq else 0.0
    return {
        "model": model,
        "split": split,
        "confusion": {"tp": tp, "fp": fp, "tn": tn, "fn": fn},
        "metrics": {
            "precision": precision,
            "recall": recall,
            "accuracy": accuracy,
            "f1": f1,
            "mcc": mcc,
            "auc": auc(scores, truths),
        },
        "support": {"positive": int(truths.sum()), "negative": int((~truths).sum())},
    }


def auc(scores: np.ndarray, truths: np.ndarray) -> float:
    n_pos = int(truths.sum())
    n_neg = int(truths.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        return float("nan")
    order = np.argsort(-scores, kind="stable")
    t_sorted = truths[order]
    s_sorted = scores[order]
    idx = np.concatenate([np.nonzero(np.diff(s_sorted))[0], [scores.size - 1]])
    tpr = np.concatenate([[0.0], np.cumsum(t_sorted)[idx] / n_pos])
    fpr = np.concatenate([[0.0], np.cumsum(~t_sorted)[idx] / n_neg])
    return float(np.sum((fpr[1:] - fpr[:-1]) * (tpr[1:] + tpr[:-1]) / 2.0))


def class_weights(counts: list[int]) -> np.ndarray:
    """Inverse-frequency weights, total / (n_classes * count): the shared formula."""
    arr = np.asarray(counts, dtype=np.float64)
    if (arr <= 0).any():
        raise ValueError("class weights undefined for empty classes")
    return arr.sum() / (arr.size * arr)
