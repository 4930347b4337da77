"""Evaluation suite: confusion counts, precision/recall/accuracy/F1, MCC,
ROC-AUC, the positive-only ground-truth recall table, and report rendering.

All functions are pure. Degenerate-quotient conventions: any 0/0 among
precision/recall/F1 is 0, and MCC with a zero denominator factor is 0.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import MetricError
from .labeling import CATEGORIES, Category


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def to_dict(self) -> dict[str, int]:
        return {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn}


@dataclass(frozen=True)
class RocPoint:
    threshold: float
    tpr: float
    fpr: float


@dataclass
class EvalReport:
    model: str
    split: str
    confusion: ConfusionMatrix
    precision: float
    recall: float
    accuracy: float
    f1: float
    mcc: float
    auc: float
    support: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "split": self.split,
            "confusion": self.confusion.to_dict(),
            "metrics": {
                "precision": self.precision,
                "recall": self.recall,
                "accuracy": self.accuracy,
                "f1": self.f1,
                "mcc": self.mcc,
                "auc": self.auc,
            },
            "support": dict(self.support),
        }


def confusion(predictions: Sequence[bool], truths: Sequence[bool]) -> ConfusionMatrix:
    """Exact counts of the four confusion cells."""
    if len(predictions) != len(truths):
        raise ValueError(
            f"length mismatch: {len(predictions)} predictions vs {len(truths)} truths"
        )
    if not predictions:
        raise ValueError("cannot build a confusion matrix from empty inputs")
    tp = fp = tn = fn = 0
    for p, t in zip(predictions, truths):
        if p and t:
            tp += 1
        elif p and not t:
            fp += 1
        elif not p and t:
            fn += 1
        else:
            tn += 1
    return ConfusionMatrix(tp=tp, fp=fp, tn=tn, fn=fn)


def basic_metrics(cm: ConfusionMatrix) -> tuple[float, float, float, float]:
    """(precision, recall, accuracy, f1) with the 0/0 -> 0 convention."""
    if cm.total <= 0:
        raise ValueError("confusion matrix is empty")
    precision = cm.tp / (cm.tp + cm.fp) if (cm.tp + cm.fp) else 0.0
    recall = cm.tp / (cm.tp + cm.fn) if (cm.tp + cm.fn) else 0.0
    accuracy = (cm.tp + cm.tn) / cm.total
    f1 = (
        2 * precision * recall / (precision + recall) if (precision + recall) else 0.0
    )
    return precision, recall, accuracy, f1


def mcc(cm: ConfusionMatrix) -> float:
    """Matthews correlation coefficient; 0 when any denominator factor is 0.

    Products are taken in exact integer arithmetic; the single sqrt and
    division are the only floating-point steps.
    """
    if cm.total <= 0:
        raise ValueError("confusion matrix is empty")
    num = cm.tp * cm.tn - cm.fp * cm.fn
    den_sq = (cm.tp + cm.fp) * (cm.tp + cm.fn) * (cm.tn + cm.fp) * (cm.tn + cm.fn)
    if den_sq == 0:
        return 0.0
    return num / math.sqrt(den_sq)


def _validated_scores(scores: Sequence[float], truths: Sequence[bool]):
    s = np.asarray(scores, dtype=np.float64)
    t = np.asarray(truths, dtype=bool)
    if s.shape != t.shape or s.ndim != 1:
        raise ValueError("scores and truths must be 1-d sequences of equal length")
    n_pos = int(t.sum())
    n_neg = int(t.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise MetricError("AUC undefined: only one class present in truths")
    return s, t, n_pos, n_neg


def roc_curve(scores: Sequence[float], truths: Sequence[bool]) -> list[RocPoint]:
    """One point per distinct score, swept from the highest threshold down."""
    s, t, n_pos, n_neg = _validated_scores(scores, truths)
    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    t_sorted = t[order]
    last_of_group = np.nonzero(np.diff(s_sorted))[0]
    idx = np.concatenate([last_of_group, [s.size - 1]])
    cum_tp = np.cumsum(t_sorted)[idx]
    cum_fp = np.cumsum(~t_sorted)[idx]
    return [
        RocPoint(threshold=float(s_sorted[i]), tpr=float(tp) / n_pos, fpr=float(fp) / n_neg)
        for i, tp, fp in zip(idx, cum_tp, cum_fp)
    ]


def roc_auc(scores: Sequence[float], truths: Sequence[bool]) -> float:
    """Area under the threshold-swept ROC curve (trapezoidal).

    Equals the pairwise concordance statistic with ties counted as 1/2.
    """
    s, t, n_pos, n_neg = _validated_scores(scores, truths)
    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    t_sorted = t[order]
    last_of_group = np.nonzero(np.diff(s_sorted))[0]
    idx = np.concatenate([last_of_group, [s.size - 1]])
    tpr = np.concatenate([[0.0], np.cumsum(t_sorted)[idx] / n_pos])
    fpr = np.concatenate([[0.0], np.cumsum(~t_sorted)[idx] / n_neg])
    return float(np.sum((fpr[1:] - fpr[:-1]) * (tpr[1:] + tpr[:-1]) / 2.0))


def build_report(
    scores: Sequence[float],
    truths: Sequence[bool],
    threshold: float = 0.5,
    model: str = "model",
    split: str = "test",
) -> EvalReport:
    """Assemble the full binary metric suite for one model on one split."""
    s = np.asarray(scores, dtype=np.float64)
    t = np.asarray(truths, dtype=bool)
    preds = s >= threshold
    cm = confusion(preds.tolist(), t.tolist())
    precision, recall, accuracy, f1 = basic_metrics(cm)
    try:
        auc = roc_auc(s, t)
    except MetricError:
        auc = float("nan")
    return EvalReport(
        model=model,
        split=split,
        confusion=cm,
        precision=precision,
        recall=recall,
        accuracy=accuracy,
        f1=f1,
        mcc=mcc(cm),
        auc=auc,
        support={"positive": int(t.sum()), "negative": int((~t).sum())},
    )


def evaluate_multiclass(
    probs: np.ndarray,
    truth_idx: Sequence[int],
    class_names: Sequence[str],
    model: str = "multiclass",
    split: str = "test",
) -> tuple[EvalReport, list[EvalReport]]:
    """Macro report plus per-class one-vs-rest reports for a K-way classifier.

    Macro precision/recall/F1/MCC/AUC are unweighted means over classes;
    accuracy is plain argmax accuracy; the macro confusion field holds the
    summed one-vs-rest cells.
    """
    probs = np.asarray(probs, dtype=np.float64)
    truth = np.asarray(truth_idx, dtype=np.int64)
    if probs.ndim != 2 or probs.shape[0] != truth.size:
        raise ValueError("probs must be (n, k) aligned with truth_idx")
    k = probs.shape[1]
    if k != len(class_names):
        raise ValueError("class_names length must match probs width")
    pred = probs.argmax(axis=1)
    per_class: list[EvalReport] = []
    for ci, name in enumerate(class_names):
        t = truth == ci
        p = pred == ci
        cm = confusion(p.tolist(), t.tolist())
        precision, recall, _, f1 = basic_metrics(cm)
        try:
            auc = roc_auc(probs[:, ci], t)
        except MetricError:
            auc = float("nan")
        per_class.append(
            EvalReport(
                model=f"{model}[{name}]",
                split=split,
                confusion=cm,
                precision=precision,
                recall=recall,
                accuracy=(cm.tp + cm.tn) / cm.total,
                f1=f1,
                mcc=mcc(cm),
                auc=auc,
                support={name: int(t.sum())},
            )
        )
    def _macro(values: list[float]) -> float:
        finite = [v for v in values if not math.isnan(v)]
        return sum(finite) / len(finite) if finite else float("nan")

    macro = EvalReport(
        model=model,
        split=split,
        confusion=ConfusionMatrix(
            tp=sum(r.confusion.tp for r in per_class),
            fp=sum(r.confusion.fp for r in per_class),
            tn=sum(r.confusion.tn for r in per_class),
            fn=sum(r.confusion.fn for r in per_class),
        ),
        precision=_macro([r.precision for r in per_class]),
        recall=_macro([r.recall for r in per_class]),
        accuracy=float((pred == truth).mean()),
        f1=_macro([r.f1 for r in per_class]),
        mcc=_macro([r.mcc for r in per_class]),
        auc=_macro([r.auc for r in per_class]),
        support={name: int((truth == ci).sum()) for ci, name in enumerate(class_names)},
    )
    return macro, per_class


@dataclass
class GroundTruthRow:
    """One Table-style row: a category, its support, recall per model column."""

    category: Category
    support: int
    recalls: dict[str, float | None]

    def to_dict(self) -> dict:
        return {
            "category": self.category.value,
            "support": self.support,
            "recalls": dict(self.recalls),
        }


def _gt_text_and_cats(item, default_cat: Category) -> tuple[str, frozenset[Category]]:
    if isinstance(item, str):
        return item, frozenset({default_cat})
    cats = frozenset({default_cat})
    verdict = getattr(item, "source_verdict", None)
    if verdict is not None and verdict.categories:
        cats = frozenset(verdict.categories)
    return item.text, cats


def ground_truth_recall(
    ground_truth: Mapping[Category, Sequence],
    td_model=None,
    type_models: Mapping[Category, object] | None = None,
    multiclass_model=None,
    threshold: float = 0.5,
) -> list[GroundTruthRow]:
    """Recall of each model over the positive-only doubly-labeled set.

    The ground truth has no negatives, so recall is the only defined metric:
    identified / support per (category, model). A multiclass prediction counts
    as identified when the argmax category belongs to the issue's own
    ground-truth category set. Empty categories yield support 0 and null
    recalls.
    """
    rows: list[GroundTruthRow] = []
    for cat in CATEGORIES:
        items = list(ground_truth.get(cat, ()))
        support = len(items)
        recalls: dict[str, float | None] = {}
        if multiclass_model is not None:
            recalls["multiclass"] = None
        if type_models is not None:
            recalls["binary_types"] = None
        if td_model is not None:
            recalls["td_only"] = None
        if support:
            if multiclass_model is not None:
                class_names = list(
                    getattr(multiclass_model, "class_names", ())
                ) or [c.value for c in CATEGORIES]
                hits = 0
                for item in items:
                    text, cats = _gt_text_and_cats(item, cat)
                    probs = np.asarray(multiclass_model.score_multi(text))
                    predicted = Category(class_names[int(probs.argmax())])
                    hits += predicted in cats
                recalls["multiclass"] = hits / support
            if type_models is not None and cat in type_models:
                model = type_models[cat]
                hits = sum(
                    model.score(_gt_text_and_cats(item, cat)[0]) >= threshold
                    for item in items
                )
                recalls["binary_types"] = hits / support
            if td_model is not None:
                hits = sum(
                    td_model.score(_gt_text_and_cats(item, cat)[0]) >= threshold
                    for item in items
                )
                recalls["td_only"] = hits / support
        rows.append(GroundTruthRow(category=cat, support=support, recalls=recalls))
    return rows


def _sig4(x: float | None) -> str:
    if x is None:
        return "null"
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return f"{x:.4g}"


def render_report(reports: Sequence[EvalReport]) -> tuple[str, str]:
    """(json_text, aligned_table_text), rows sorted by (model, split)."""
    ordered = sorted(reports, key=lambda r: (r.model, r.split))
    json_text = json.dumps([r.to_dict() for r in ordered], indent=2, sort_keys=True)
    header = [
        "model", "split", "tp", "fp", "tn", "fn",
        "precision", "recall", "accuracy", "f1", "mcc", "auc",
    ]
    rows = [header]
    for r in ordered:
        rows.append(
            [
                r.model, r.split,
                str(r.confusion.tp), str(r.confusion.fp),
                str(r.confusion.tn), str(r.confusion.fn),
                _sig4(r.precision), _sig4(r.recall), _sig4(r.accuracy),
                _sig4(r.f1), _sig4(r.mcc), _sig4(r.auc),
            ]
        )
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows]
    return json_text, "\n".join(lines) + "\n"


def render_ground_truth_table(rows: Sequence[GroundTruthRow]) -> tuple[str, str]:
    """(json_text, aligned_table_text) for the recall-per-category table."""
    json_text = json.dumps([r.to_dict() for r in rows], indent=2, sort_keys=True)
    columns = sorted({name for r in rows for name in r.recalls})
    header = ["category"] + columns + ["support"]
    table = [header]
    for r in rows:
        table.append(
            [r.category.value]
            + [_sig4(r.recalls.get(c)) for c in columns]
            + [str(r.support)]
        )
    widths = [max(len(row[i]) for row in table) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in table]
    return json_text, "\n".join(lines) + "\n"
