"""Text cleaning and dataset assembly: balancing, OOD carve-out, stratified
splits and folds, temporal splits, leakage purging.

Every sampling or shuffling step is a pure function of (input, seed), so a
bundle rebuilt with the same seed is byte-identical down to its manifest.
"""

from __future__ import annotations

import json
import logging
import math
import random
import re
from collections import Counter
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

from .errors import CurationError
from .ingest import parse_timestamp
from .labeling import CATEGORIES, Category, LabelVerdict, RULESET_VERSION

logger = logging.getLogger(__name__)

DEFAULT_MIN_LEN = 30

_URL_RE = re.compile(r"(?:https?://|www\.)\S+")
_EMOJI_RE = re.compile(
    "[\U0001f000-\U0001faff☀-➿⬀-⯿️‍\U0001f1e6-\U0001f1ff]"
)
# Keep letters, digits, whitespace and . , ; : ? ! ' " ( ) - ; \w also admits
# "_" which is not in the allowed set, so it is stripped separately.
_DISALLOWED_RE = re.compile(r"[^\w\s.,;:?!'\"()\-]")
_WS_RE = re.compile(r"\s+")


@dataclass(frozen=True)
class LabeledExample:
    """One cleaned, labeled text ready for training or evaluation."""

    text: str
    label: bool | Category
    repo_name: str = ""
    created_at: datetime | None = None
    source_verdict: LabelVerdict | None = None


def clean_text(
    title: str,
    body: str,
    min_len: int = DEFAULT_MIN_LEN,
    language_filter: Callable[[str], bool] | None = None,
) -> str | None:
    """Normalize issue text; None when it is rejected (too short / filtered).

    Pipeline order: concatenate, lowercase, strip URLs, strip emoji, strip
    characters outside the allowed set, collapse whitespace, trim. The result
    is a fixed point: cleaning an already-clean text returns it unchanged.
    """
    text = f"{title} {body}".lower()
    text = _URL_RE.sub("", text)
    text = _EMOJI_RE.sub("", text)
    text = _DISALLOWED_RE.sub("", text).replace("_", "")
    text = _WS_RE.sub(" ", text).strip()
    if len(text) < min_len:
        return None
    if language_filter is not None and not language_filter(text):
        return None
    return text


def deduplicate(examples: Iterable[LabeledExample]) -> list[LabeledExample]:
    """Keep the first occurrence of each cleaned text, preserving order."""
    seen: set[str] = set()
    out: list[LabeledExample] = []
    for ex in examples:
        if ex.text in seen:
            continue
        seen.add(ex.text)
        out.append(ex)
    return out


def build_balanced_dataset(
    positives: Sequence[LabeledExample],
    negative_pool: Sequence[LabeledExample],
    seed: int,
) -> list[LabeledExample]:
    """n positives + n negatives, n = min(|positives|, |pool|), seeded sampling."""
    if not positives:
        raise CurationError("cannot balance: positive pool is empty")
    if not negative_pool:
        raise CurationError("cannot balance: negative pool is empty")
    n = min(len(positives), len(negative_pool))
    rng = random.Random(seed)
    if len(positives) > n:
        logger.warning(
            "downsampling %d positives to %d (negative pool is smaller)", len(positives), n
        )
        pos = rng.sample(list(positives), n)
    else:
        pos = list(positives)
    neg = rng.sample(list(negative_pool), n)
    return [replace(e, label=True) for e in pos] + [replace(e, label=False) for e in neg]


def carve_ood(
    examples: Sequence[LabeledExample], top_n: int
) -> tuple[list[LabeledExample], list[LabeledExample], list[str]]:
    """Withhold the top_n repos by example count (ties: lexicographic) into OOD."""
    if top_n == 0:
        return list(examples), [], []
    counts = Counter(e.repo_name for e in examples)
    if len(counts) < top_n + 1:
        raise CurationError(
            f"cannot withhold {top_n} repos from {len(counts)} distinct repos: "
            "nothing would remain"
        )
    withheld = sorted(counts, key=lambda r: (-counts[r], r))[:top_n]
    wset = set(withheld)
    main = [e for e in examples if e.repo_name not in wset]
    ood = [e for e in examples if e.repo_name in wset]
    return main, ood, withheld


def _label_name(label: bool | Category) -> str:
    if isinstance(label, Category):
        return label.value
    return "positive" if label else "negative"


def _class_groups(examples: Sequence[LabeledExample]) -> dict[str, list[int]]:
    groups: dict[str, list[int]] = {}
    for i, ex in enumerate(examples):
        groups.setdefault(_label_name(ex.label), []).append(i)
    return groups


def split_train_test(
    dataset: Sequence[LabeledExample], ratio: float, seed: int
) -> tuple[list[LabeledExample], list[LabeledExample]]:
    """Stratified split: per class, floor(ratio*n) to train after a seeded shuffle."""
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must be in (0, 1), got {ratio}")
    rng = random.Random(seed)
    train: list[LabeledExample] = []
    test: list[LabeledExample] = []
    groups = _class_groups(dataset)
    for name in sorted(groups):
        idxs = groups[name][:]
        if len(idxs) < 2:
            raise CurationError(f"class {name!r} has fewer than 2 examples; cannot split")
        rng.shuffle(idxs)
        n_train = math.floor(ratio * len(idxs))
        train.extend(dataset[i] for i in idxs[:n_train])
        test.extend(dataset[i] for i in idxs[n_train:])
    return train, test


def stratified_folds(train: Sequence[LabeledExample], k: int, seed: int) -> list[int]:
    """Fold index per example; per class, fold sizes differ by at most one."""
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    rng = random.Random(seed)
    folds = [0] * len(train)
    groups = _class_groups(train)
    for name in sorted(groups):
        idxs = groups[name][:]
        if len(idxs) < k:
            raise CurationError(f"class {name!r} has {len(idxs)} examples, fewer than k={k}")
        rng.shuffle(idxs)
        for pos, i in enumerate(idxs):
            folds[i] = pos % k
    return folds


def temporal_split(
    examples: Sequence[LabeledExample], cutoff: datetime
) -> tuple[list[LabeledExample], list[LabeledExample]]:
    """(before cutoff, at-or-after cutoff); naive cutoffs are taken as UTC."""
    if cutoff.tzinfo is None:
        cutoff = cutoff.replace(tzinfo=timezone.utc)
    pre: list[LabeledExample] = []
    post: list[LabeledExample] = []
    for ex in examples:
        if ex.created_at is None:
            raise ValueError("example has no created_at; cannot split temporally")
        (pre if ex.created_at < cutoff else post).append(ex)
    return pre, post


def purge_ground_truth(
    dataset: Sequence[LabeledExample], ground_truth: Iterable
) -> list[LabeledExample]:
    """Drop every example whose cleaned text appears in the ground-truth set."""
    gt_texts = {item if isinstance(item, str) else item.text for item in ground_truth}
    out = [e for e in dataset if e.text not in gt_texts]
    if dataset and not out:
        logger.warning("purge removed every example (%d) from the dataset", len(dataset))
    return out


def build_multiclass_dataset(
    per_category_positives: Mapping[Category, Sequence[LabeledExample]],
    seed: int,
) -> list[LabeledExample]:
    """Union of per-category positives, one label per example, imbalance kept.

    A text matching several categories arrives once per category and stays
    duplicated, one copy per label. Every category present in the mapping
    must be non-empty; the full pipeline passes all 13.
    """
    cats = [c for c in CATEGORIES if c in per_category_positives]
    for cat in cats:
        if not per_category_positives[cat]:
            raise CurationError(f"category {cat.value!r} has no examples")
    out = [replace(e, label=cat) for cat in cats for e in per_category_positives[cat]]
    random.Random(seed).shuffle(out)
    return out


@dataclass
class DatasetBundle:
    """A curated corpus with its partitions, fold map, and manifest."""

    train: list[LabeledExample]
    test: list[LabeledExample]
    ood: list[LabeledExample] = field(default_factory=list)
    folds: list[int] = field(default_factory=list)
    seed: int = 0
    manifest: dict = field(default_factory=dict)

    def partition(self, name: str) -> list[LabeledExample]:
        if name not in ("train", "test", "ood"):
            raise ValueError(f"unknown partition {name!r}")
        return getattr(self, name)

    def counts(self) -> dict[str, dict[str, int]]:
        out: dict[str, dict[str, int]] = {}
        for split in ("train", "test", "ood"):
            c = Counter(_label_name(e.label) for e in getattr(self, split))
            out[split] = dict(sorted(c.items()))
        return out

    def build_manifest(self, extra: dict | None = None) -> dict:
        manifest = {
            "seed": self.seed,
            "ruleset_version": RULESET_VERSION,
            "counts": self.counts(),
            "folds": {"k": (max(self.folds) + 1) if self.folds else 0},
        }
        if extra:
            manifest.update(extra)
        self.manifest = manifest
        return manifest


def _example_to_row(ex: LabeledExample, split: str, fold: int | None) -> dict:
    return {
        "text": ex.text,
        "label": _label_name(ex.label) if isinstance(ex.label, Category) else bool(ex.label),
        "repo": ex.repo_name,
        "created_at": ex.created_at.isoformat().replace("+00:00", "Z")
        if ex.created_at
        else None,
        "split": split,
        "fold": fold,
    }


def _example_from_row(row: dict) -> LabeledExample:
    label = row["label"]
    if isinstance(label, str):
        label = Category(label)
    return LabeledExample(
        text=row["text"],
        label=label,
        repo_name=row.get("repo", ""),
        created_at=parse_timestamp(row["created_at"]) if row.get("created_at") else None,
    )


def write_examples_jsonl(
    examples: Sequence[LabeledExample],
    path: str | Path,
    split: str = "train",
    folds: Sequence[int] | None = None,
) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for i, ex in enumerate(examples):
            fold = folds[i] if folds is not None else None
            fh.write(
                json.dumps(_example_to_row(ex, split, fold), ensure_ascii=False, sort_keys=True)
                + "\n"
            )


def read_examples_jsonl(path: str | Path) -> list[LabeledExample]:
    with open(path, "r", encoding="utf-8") as fh:
        return [_example_from_row(json.loads(line)) for line in fh if line.strip()]


def save_bundle(bundle: DatasetBundle, out_dir: str | Path) -> None:
    """Write dataset.jsonl (all partitions) plus the sidecar manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows: list[dict] = []
    for i, ex in enumerate(bundle.train):
        rows.append(_example_to_row(ex, "train", bundle.folds[i] if bundle.folds else None))
    rows.extend(_example_to_row(ex, "test", None) for ex in bundle.test)
    rows.extend(_example_to_row(ex, "ood", None) for ex in bundle.ood)
    with open(out / "dataset.jsonl", "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")
    if not bundle.manifest:
        bundle.build_manifest()
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(bundle.manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_bundle(bundle_dir: str | Path) -> DatasetBundle:
    bundle_dir = Path(bundle_dir)
    manifest = json.loads((bundle_dir / "manifest.json").read_text())
    train: list[LabeledExample] = []
    test: list[LabeledExample] = []
    ood: list[LabeledExample] = []
    folds: list[int] = []
    with open(bundle_dir / "dataset.jsonl", "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            row = json.loads(line)
            ex = _example_from_row(row)
            if row["split"] == "train":
                train.append(ex)
                folds.append(row["fold"] if row["fold"] is not None else 0)
            elif row["split"] == "test":
                test.append(ex)
            else:
                ood.append(ex)
    return DatasetBundle(
        train=train,
        test=test,
        ood=ood,
        folds=folds,
        seed=manifest.get("seed", 0),
        manifest=manifest,
    )
