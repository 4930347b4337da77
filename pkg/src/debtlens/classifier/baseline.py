"""Desk-scale baseline classifiers: logistic regression (binary) and
class-weighted softmax regression (multiclass) over hashed bag-of-words
features, trained by deterministic full-batch gradient descent.

Training follows the cross-validation protocol: one model per held-out fold
for validation metrics, then a final model refit on the full training split.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, Sequence, runtime_checkable

import numpy as np

from ..corpus import LabeledExample
from ..errors import TrainingError
from ..labeling import Category
from ..metrics import EvalReport, build_report, evaluate_multiclass
from .features import DEFAULT_DIM, HashedFeatures, featurize
from .kernels import kernels

logger = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1

DEFAULT_EPOCHS = 5
DEFAULT_LEARNING_RATE = 0.5


@runtime_checkable
class TextClassifier(Protocol):
    """Uniform scoring surface: text in, probability out."""

    threshold: float

    def score(self, text: str) -> float: ...


@runtime_checkable
class MulticlassTextClassifier(Protocol):
    class_names: tuple[str, ...]

    def score_multi(self, text: str) -> np.ndarray: ...


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _log_loss(z: np.ndarray, y: np.ndarray) -> float:
    # max(z,0) - z*y + log(1+e^-|z|): stable form of -log p(y|z)
    return float(np.mean(np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))))


@dataclass
class BaselineModel:
    """Trained weights plus everything needed to score and to reproduce."""

    dim: int
    kind: str  # "binary" | "multiclass"
    weights: np.ndarray  # (dim,) or (dim, k)
    bias: np.ndarray  # () or (k,)
    class_names: tuple[str, ...] = ()
    class_weights: np.ndarray | None = None
    loss_trace: list[float] = field(default_factory=list)
    threshold: float = 0.5
    seed: int = 0

    def score_many(self, texts: Sequence[str]) -> np.ndarray:
        feats = featurize(texts, self.dim)
        ks = kernels()
        if self.kind == "binary":
            z = ks.matvec(feats.indptr, feats.indices, feats.data, self.weights)
            return _sigmoid(z + float(self.bias))
        z = ks.matmat(feats.indptr, feats.indices, feats.data, self.weights) + self.bias
        return _softmax(z)

    def score(self, text: str) -> float:
        if self.kind != "binary":
            raise TypeError("score() is for binary models; use score_multi()")
        return float(self.score_many([text])[0])

    def score_multi(self, text: str) -> np.ndarray:
        if self.kind != "multiclass":
            raise TypeError("score_multi() is for multiclass models; use score()")
        return self.score_many([text])[0]

    def predict(self, text: str) -> bool | str:
        if self.kind == "binary":
            return self.score(text) >= self.threshold
        probs = self.score_multi(text)
        return self.class_names[int(np.argmax(probs))]

    def save(self, path: str | Path) -> None:
        meta = {
            "format_version": MODEL_FORMAT_VERSION,
            "kind": self.kind,
            "dim": self.dim,
            "class_names": list(self.class_names),
            "threshold": self.threshold,
            "seed": self.seed,
        }
        np.savez_compressed(
            path,
            meta=np.frombuffer(json.dumps(meta, sort_keys=True).encode(), dtype=np.uint8),
            weights=self.weights,
            bias=np.asarray(self.bias, dtype=np.float64),
            class_weights=self.class_weights
            if self.class_weights is not None
            else np.empty(0),
            loss_trace=np.asarray(self.loss_trace, dtype=np.float64),
        )

    @classmethod
    def load(cls, path: str | Path) -> "BaselineModel":
        with np.load(path) as npz:
            meta = json.loads(bytes(npz["meta"]).decode())
            if meta.get("format_version") != MODEL_FORMAT_VERSION:
                raise ValueError(
                    f"unsupported baseline model format {meta.get('format_version')!r}"
                )
            cw = npz["class_weights"]
            return cls(
                dim=meta["dim"],
                kind=meta["kind"],
                weights=npz["weights"],
                bias=npz["bias"],
                class_names=tuple(meta["class_names"]),
                class_weights=cw if cw.size else None,
                loss_trace=npz["loss_trace"].tolist(),
                threshold=meta["threshold"],
                seed=meta["seed"],
            )


def _softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    ez = np.exp(shifted)
    return ez / ez.sum(axis=1, keepdims=True)


def binary_loss_and_grad(
    feats: HashedFeatures, y: np.ndarray, w: np.ndarray, b: float
) -> tuple[float, np.ndarray, float]:
    """Mean logistic loss and its analytic gradient at (w, b)."""
    ks = kernels()
    z = ks.matvec(feats.indptr, feats.indices, feats.data, w) + b
    residual = (_sigmoid(z) - y) / feats.n_rows
    grad_w = ks.rmatvec(feats.indptr, feats.indices, feats.data, residual, feats.dim)
    return _log_loss(z, y), grad_w, float(residual.sum())


def _fit_binary(
    feats: HashedFeatures,
    y: np.ndarray,
    epochs: int,
    learning_rate: float,
    fold: int | None = None,
) -> tuple[np.ndarray, float, list[float]]:
    """Full-batch GD from zero init; returns (weights, bias, loss per epoch)."""
    w = np.zeros(feats.dim)
    b = 0.0
    loss, grad_w, grad_b = binary_loss_and_grad(feats, y, w, b)
    trace = [loss]
    for epoch in range(epochs):
        w -= learning_rate * grad_w
        b -= learning_rate * grad_b
        loss, grad_w, grad_b = binary_loss_and_grad(feats, y, w, b)
        if not np.isfinite(loss):
            where = f"epoch {epoch + 1}" + (f", fold {fold}" if fold is not None else "")
            raise TrainingError(f"non-finite training loss at {where}")
        trace.append(loss)
    return w, b, trace


def _texts_and_labels(train: Sequence) -> tuple[list[str], list]:
    texts, labels = [], []
    for item in train:
        if isinstance(item, LabeledExample):
            texts.append(item.text)
            labels.append(item.label)
        else:
            text, label = item
            texts.append(text)
            labels.append(label)
    return texts, labels


def train_baseline_binary(
    train: Sequence,
    folds: Sequence[int] | None = None,
    epochs: int = DEFAULT_EPOCHS,
    learning_rate: float = DEFAULT_LEARNING_RATE,
    seed: int = 0,
    dim: int = DEFAULT_DIM,
    threshold: float = 0.5,
    model_name: str = "baseline-binary",
) -> tuple[BaselineModel, list[EvalReport]]:
    """Cross-validated binary trainer; the returned model is refit on all folds."""
    texts, labels = _texts_and_labels(train)
    y = np.asarray([1.0 if bool(lab) else 0.0 for lab in labels])
    feats = featurize(texts, dim)
    fold_reports: list[EvalReport] = []
    if folds is not None:
        folds = list(folds)
        if len(folds) != len(texts):
            raise ValueError("folds must align with train examples")
        for i in sorted(set(folds)):
            tr_rows = [j for j, f in enumerate(folds) if f != i]
            va_rows = [j for j, f in enumerate(folds) if f == i]
            w, b, _ = _fit_binary(feats.take_rows(tr_rows), y[tr_rows], epochs, learning_rate, fold=i)
            va = feats.take_rows(va_rows)
            scores = _sigmoid(kernels().matvec(va.indptr, va.indices, va.data, w) + b)
            fold_reports.append(
                build_report(scores, y[va_rows] > 0.5, threshold, f"{model_name}/fold{i}", "cv")
            )
    w, b, trace = _fit_binary(feats, y, epochs, learning_rate)
    model = BaselineModel(
        dim=dim,
        kind="binary",
        weights=w,
        bias=np.float64(b),
        loss_trace=trace,
        threshold=threshold,
        seed=seed,
    )
    return model, fold_reports


def compute_class_weights(counts: Sequence[int]) -> np.ndarray:
    """Inverse-frequency weights: total / (n_classes * count_c)."""
    counts = np.asarray(counts, dtype=np.float64)
    if (counts <= 0).any():
        raise TrainingError("class weights undefined for empty classes")
    return counts.sum() / (counts.size * counts)


def multiclass_loss_and_grad(
    feats: HashedFeatures,
    y_idx: np.ndarray,
    class_weights: np.ndarray,
    W: np.ndarray,
    b: np.ndarray,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Class-weighted softmax cross-entropy (weighted mean) and its gradient."""
    ks = kernels()
    n = feats.n_rows
    n_classes = W.shape[1]
    sw = class_weights[y_idx]
    sw_sum = float(sw.sum())
    Z = ks.matmat(feats.indptr, feats.indices, feats.data, W) + b
    zmax = Z.max(axis=1)
    logsumexp = np.log(np.exp(Z - zmax[:, None]).sum(axis=1)) + zmax
    ce = logsumexp - Z[np.arange(n), y_idx]
    loss = float((sw * ce).sum() / sw_sum)
    G = _softmax(Z)
    G[np.arange(n), y_idx] -= 1.0
    G *= (sw / sw_sum)[:, None]
    grad_W = ks.rmatmat(feats.indptr, feats.indices, feats.data, G, feats.dim)
    return loss, grad_W, G.sum(axis=0)


def _fit_multiclass(
    feats: HashedFeatures,
    y_idx: np.ndarray,
    n_classes: int,
    class_weights: np.ndarray,
    epochs: int,
    learning_rate: float,
    fold: int | None = None,
) -> tuple[np.ndarray, np.ndarray, list[float]]:
    """Weighted softmax regression by full-batch GD from zero init."""
    W = np.zeros((feats.dim, n_classes))
    b = np.zeros(n_classes)
    loss, grad_W, grad_b = multiclass_loss_and_grad(feats, y_idx, class_weights, W, b)
    trace = [loss]
    for epoch in range(epochs):
        W -= learning_rate * grad_W
        b -= learning_rate * grad_b
        loss, grad_W, grad_b = multiclass_loss_and_grad(feats, y_idx, class_weights, W, b)
        if not np.isfinite(loss):
            where = f"epoch {epoch + 1}" + (f", fold {fold}" if fold is not None else "")
            raise TrainingError(f"non-finite training loss at {where}")
        trace.append(loss)
    return W, b, trace


def train_baseline_multiclass(
    train: Sequence,
    folds: Sequence[int] | None = None,
    epochs: int = DEFAULT_EPOCHS,
    learning_rate: float = DEFAULT_LEARNING_RATE,
    seed: int = 0,
    classes: Sequence[Category | str] | None = None,
    dim: int = DEFAULT_DIM,
    model_name: str = "baseline-multiclass",
) -> tuple[BaselineModel, list[EvalReport]]:
    """Class-weighted multiclass trainer over an explicit (or inferred) class list."""
    texts, labels = _texts_and_labels(train)
    names = [lab.value if isinstance(lab, Category) else str(lab) for lab in labels]
    if classes is None:
        class_names = tuple(sorted(set(names)))
    else:
        class_names = tuple(c.value if isinstance(c, Category) else str(c) for c in classes)
    name_to_idx = {name: i for i, name in enumerate(class_names)}
    missing = sorted(set(names) - set(class_names))
    if missing:
        raise TrainingError(f"examples carry labels outside the class list: {missing}")
    counts = [names.count(c) for c in class_names]
    for c, cnt in zip(class_names, counts):
        if cnt == 0:
            raise TrainingError(f"class {c!r} has no training examples")
    class_weights = compute_class_weights(counts)
    y_idx = np.asarray([name_to_idx[nm] for nm in names], dtype=np.int64)
    feats = featurize(texts, dim)
    fold_reports: list[EvalReport] = []
    if folds is not None:
        folds = list(folds)
        if len(folds) != len(texts):
            raise ValueError("folds must align with train examples")
        for i in sorted(set(folds)):
            tr_rows = [j for j, f in enumerate(folds) if f != i]
            va_rows = [j for j, f in enumerate(folds) if f == i]
            W, b, _ = _fit_multiclass(
                feats.take_rows(tr_rows), y_idx[tr_rows], len(class_names),
                class_weights, epochs, learning_rate, fold=i,
            )
            va = feats.take_rows(va_rows)
            probs = _softmax(kernels().matmat(va.indptr, va.indices, va.data, W) + b)
            macro, _ = evaluate_multiclass(
                probs, y_idx[va_rows], class_names, f"{model_name}/fold{i}", "cv"
            )
            fold_reports.append(macro)
    W, b, trace = _fit_multiclass(
        feats, y_idx, len(class_names), class_weights, epochs, learning_rate
    )
    model = BaselineModel(
        dim=dim,
        kind="multiclass",
        weights=W,
        bias=b,
        class_names=class_names,
        class_weights=class_weights,
        loss_trace=trace,
        seed=seed,
    )
    return model, fold_reports


@dataclass(frozen=True)
class PredictionRow:
    example_id: int
    score: float | tuple[float, ...]
    predicted: bool | str


def predict_bundle(model, examples: Sequence, threshold: float | None = None) -> list[PredictionRow]:
    """Score one partition, one order-stable row per example."""
    if not examples:
        return []
    texts = [e.text if isinstance(e, LabeledExample) else str(e) for e in examples]
    thr = threshold if threshold is not None else getattr(model, "threshold", 0.5)
    rows: list[PredictionRow] = []
    if getattr(model, "kind", "binary") == "multiclass" or (
        not hasattr(model, "score") and hasattr(model, "score_multi")
    ):
        if hasattr(model, "score_many"):
            probs = model.score_many(texts)
        else:
            probs = np.stack([np.asarray(model.score_multi(t)) for t in texts])
        class_names = tuple(getattr(model, "class_names", ()))
        for i, p in enumerate(probs):
            rows.append(
                PredictionRow(
                    example_id=i,
                    score=tuple(float(v) for v in p),
                    predicted=class_names[int(np.argmax(p))] if class_names else int(np.argmax(p)),
                )
            )
    else:
        if hasattr(model, "score_many"):
            scores = model.score_many(texts)
        else:
            scores = np.asarray([model.score(t) for t in texts])
        for i, s in enumerate(scores):
            rows.append(PredictionRow(example_id=i, score=float(s), predicted=bool(s >= thr)))
    return rows
