"""Fine-tuning jobs: k-fold cross-validation over the bundle's fold map,
then a final model refit on the full training split.
"""

from __future__ import annotations

import copy
import logging
import random
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import CATEGORY_ORDER, Example, assign_folds, load_bundle
from .metrics_lite import auc as auc_of
from .metrics_lite import class_weights, report_dict
from .modeling import prepare_base

logger = logging.getLogger(__name__)


class FinetuneError(RuntimeError):
    pass


@dataclass
class FinetuneJob:
    bundle_dir: str | Path
    task: str = "td"  # "td" | "category" | "multiclass"
    category: str | None = None
    base_model: str = "distilroberta-base"
    k: int = 5
    epochs: int = 5
    seed: int = 0
    batch_size: int = 16
    learning_rate: float | None = None  # default depends on base-weight provenance
    class_weighted: bool = True
    max_length: int = 512
    run_cv: bool = True

    def __post_init__(self) -> None:
        if self.task not in ("td", "category", "multiclass"):
            raise ValueError(f"unknown task {self.task!r}")
        if self.task == "category" and not self.category:
            raise ValueError("category task needs a category name")


@dataclass
class FinetuneResult:
    model: object
    tokenizer: object
    task: str
    category: str | None
    num_labels: int
    fold_reports: list[dict]
    final_report: dict | None
    loss_trace: list[float]
    trained: bool
    config: dict
    parity_texts: list[str] = field(default_factory=list)
    max_length: int = 512

    def score_texts(self, texts: list[str]) -> np.ndarray:
        return _score(self.model, self.tokenizer, texts, self.num_labels, self.max_length)


def _encode(tokenizer, texts: list[str], max_length: int):
    import torch

    pad_id = tokenizer.token_to_id("<pad>")
    if pad_id is None:
        pad_id = 0
    encoded = [tokenizer.encode(t).ids[:max_length] or [pad_id] for t in texts]
    width = max(len(ids) for ids in encoded)
    batch = torch.full((len(encoded), width), pad_id, dtype=torch.int64)
    mask = torch.zeros((len(encoded), width), dtype=torch.int64)
    for i, ids in enumerate(encoded):
        batch[i, : len(ids)] = torch.tensor(ids, dtype=torch.int64)
        mask[i, : len(ids)] = 1
    return batch, mask


def _score(model, tokenizer, texts: list[str], num_labels: int, max_length: int) -> np.ndarray:
    """Probabilities: (n,) sigmoid for 1 logit, (n, k) softmax otherwise."""
    import torch

    model.eval()
    out = []
    with torch.no_grad():
        for lo in range(0, len(texts), 64):
            ids, mask = _encode(tokenizer, texts[lo : lo + 64], max_length)
            logits = model(input_ids=ids, attention_mask=mask).logits
            if num_labels == 1:
                out.append(torch.sigmoid(logits[:, 0]).numpy())
            else:
                out.append(torch.softmax(logits, dim=1).numpy())
    return np.concatenate(out) if out else np.empty((0,))


def _labels_for(bundle_examples: list[Example], task: str) -> np.ndarray:
    if task == "multiclass":
        index = {name: i for i, name in enumerate(CATEGORY_ORDER)}
        missing = sorted({e.label for e in bundle_examples} - set(index))
        if missing:
            raise FinetuneError(f"labels outside the canonical category order: {missing}")
        return np.asarray([index[e.label] for e in bundle_examples], dtype=np.int64)
    return np.asarray([1.0 if e.label else 0.0 for e in bundle_examples], dtype=np.float64)


def _train_one(
    model, tokenizer, texts, y, job: FinetuneJob, lr: float, weights, fold: int | None
) -> list[float]:
    import torch

    model.train()
    torch.manual_seed(job.seed)
    optimizer = torch.optim.AdamW(model.parameters(), lr=lr)
    if job.task == "multiclass":
        loss_fn = torch.nn.CrossEntropyLoss(
            weight=torch.tensor(weights, dtype=torch.float32) if weights is not None else None
        )
        targets = torch.tensor(y, dtype=torch.int64)
    else:
        loss_fn = torch.nn.BCEWithLogitsLoss()
        targets = torch.tensor(y, dtype=torch.float32)
    trace: list[float] = []
    order = list(range(len(texts)))
    for epoch in range(job.epochs):
        random.Random(job.seed * 1000 + epoch).shuffle(order)
        epoch_loss = 0.0
        batches = 0
        for lo in range(0, len(order), job.batch_size):
            rows = order[lo : lo + job.batch_size]
            ids, mask = _encode(tokenizer, [texts[i] for i in rows], job.max_length)
            logits = model(input_ids=ids, attention_mask=mask).logits
            if job.task == "multiclass":
                loss = loss_fn(logits, targets[rows])
            else:
                loss = loss_fn(logits[:, 0], targets[rows])
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            value = float(loss.detach())
            if not np.isfinite(value):
                where = f"epoch {epoch + 1}" + (f", fold {fold}" if fold is not None else "")
                raise FinetuneError(f"divergent loss at {where}")
            epoch_loss += value
            batches += 1
        trace.append(epoch_loss / max(batches, 1))
    return trace


def _multiclass_report(probs: np.ndarray, y_idx: np.ndarray, model: str, split: str) -> dict:
    """Macro metrics over one-vs-rest cells, in the primary report schema."""
    import math

    pred = probs.argmax(axis=1)
    k = probs.shape[1]
    cells = {"tp": 0, "fp": 0, "tn": 0, "fn": 0}
    per = {"precision": [], "recall": [], "f1": [], "mcc": [], "auc": []}
    support: dict[str, int] = {}
    for ci in range(k):
        t = y_idx == ci
        p = pred == ci
        tp = int((p & t).sum()); fp = int((p & ~t).sum())
        tn = int((~p & ~t).sum()); fn = int((~p & t).sum())
        cells["tp"] += tp; cells["fp"] += fp; cells["tn"] += tn; cells["fn"] += fn
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        per["precision"].append(precision)
        per["recall"].append(recall)
        per["f1"].append(
            2 * precision * recall / (precision + recall) if precision + recall else 0.0
        )
        den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
        per["mcc"].append((tp * tn - fp * fn) / math.sqrt(den) if den else 0.0)
        if t.any() and (~t).any():
            per["auc"].append(auc_of(probs[:, ci], t))
        support[CATEGORY_ORDER[ci] if k == len(CATEGORY_ORDER) else str(ci)] = int(t.sum())
    return {
        "model": model,
        "split": split,
        "confusion": cells,
        "metrics": {
            "precision": float(np.mean(per["precision"])),
            "recall": float(np.mean(per["recall"])),
            "accuracy": float((pred == y_idx).mean()),
            "f1": float(np.mean(per["f1"])),
            "mcc": float(np.mean(per["mcc"])),
            "auc": float(np.mean(per["auc"])) if per["auc"] else float("nan"),
        },
        "support": support,
    }


def fine_tune(job: FinetuneJob) -> FinetuneResult:
    """Run the cross-validation protocol and refit the final model."""
    bundle = load_bundle(job.bundle_dir)
    if not bundle.train:
        raise FinetuneError(f"bundle {job.bundle_dir} has no training split")
    num_labels = len(CATEGORY_ORDER) if job.task == "multiclass" else 1
    texts = [e.text for e in bundle.train]
    y = _labels_for(bundle.train, job.task)

    folds = bundle.folds
    if len(set(folds)) < 2:
        folds = assign_folds(bundle.train, job.k, job.seed)

    weights = None
    if job.task == "multiclass" and job.class_weighted:
        counts = np.bincount(y, minlength=num_labels)
        if (counts == 0).any():
            missing = [CATEGORY_ORDER[i] for i in np.nonzero(counts == 0)[0]]
            raise FinetuneError(f"categories with no training examples: {missing}")
        weights = class_weights(counts.tolist())

    make_model, tokenizer, provenance, default_lr = prepare_base(
        job.base_model, num_labels, texts, job.seed, job.max_length
    )
    lr = job.learning_rate or default_lr
    name = job.task if job.task != "category" else f"category:{job.category}"
    fold_reports: list[dict] = []
    if job.run_cv and job.epochs > 0:
        for i in sorted(set(folds)):
            tr = [j for j, f in enumerate(folds) if f != i]
            va = [j for j, f in enumerate(folds) if f == i]
            model = make_model()
            _train_one(
                model, tokenizer, [texts[j] for j in tr], y[tr], job, lr, weights, fold=i
            )
            probs = _score(model, tokenizer, [texts[j] for j in va], num_labels, job.max_length)
            if job.task == "multiclass":
                fold_reports.append(_multiclass_report(probs, y[va], f"{name}/fold{i}", "cv"))
            else:
                fold_reports.append(
                    report_dict(probs, y[va] > 0.5, 0.5, f"{name}/fold{i}", "cv")
                )

    model = make_model()
    trace: list[float] = []
    if job.epochs > 0:
        trace = _train_one(model, tokenizer, texts, y, job, lr, weights, fold=None)
    else:
        logger.warning("epochs=0: model keeps its base weights; export will be refused")

    final_report = None
    if bundle.test:
        test_texts = [e.text for e in bundle.test]
        test_y = _labels_for(bundle.test, job.task)
        probs = _score(model, tokenizer, test_texts, num_labels, job.max_length)
        if job.task == "multiclass":
            final_report = _multiclass_report(probs, test_y, name, "test")
        else:
            final_report = report_dict(probs, test_y > 0.5, 0.5, name, "test")

    rng = random.Random(job.seed)
    parity_pool = texts if len(texts) >= 64 else texts * (64 // max(len(texts), 1) + 1)
    parity_texts = rng.sample(parity_pool, 64) if len(parity_pool) >= 64 else parity_pool[:64]

    deviations = []
    if job.k != 5:
        deviations.append(f"k={job.k}")
    if job.epochs != 5:
        deviations.append(f"epochs={job.epochs}")
    config = {
        "base_weights": provenance,
        "learning_rate": lr,
        "batch_size": job.batch_size,
        "optimizer": "adamw",
        "k": job.k,
        "epochs": job.epochs,
        "seed": job.seed,
        "max_length": job.max_length,
        "class_weighted": bool(weights is not None),
        "protocol_deviations": deviations,
    }
    return FinetuneResult(
        model=model,
        tokenizer=tokenizer,
        task=job.task,
        category=job.category,
        num_labels=num_labels,
        fold_reports=fold_reports,
        final_report=final_report,
        loss_trace=trace,
        trained=job.epochs > 0,
        config=config,
        parity_texts=parity_texts,
        max_length=job.max_length,
    )


def clone_result(result: FinetuneResult) -> FinetuneResult:
    """Deep-copied model so adaptation can leave the original intact."""
    out = copy.copy(result)
    out.model = copy.deepcopy(result.model)
    return out
