"""Bundle file access: the dataset JSONL / manifest formats produced by the
primary pipeline are the only input surface of this package.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

# Canonical label order of the model-export contract (multiclass head).
CATEGORY_ORDER = [
    "Architecture", "Automation", "Build", "Code", "Defect", "Design",
    "Documentation", "Infrastructure", "People", "Process", "Requirement",
    "Service", "Test",
]


@dataclass
class Example:
    text: str
    label: bool | str
    repo: str = ""
    created_at: str | None = None
    fold: int | None = None


@dataclass
class Bundle:
    train: list[Example]
    test: list[Example]
    ood: list[Example]
    manifest: dict

    @property
    def folds(self) -> list[int]:
        return [e.fold if e.fold is not None else 0 for e in self.train]

    def is_multiclass(self) -> bool:
        sample = self.train or self.test or self.ood
        return bool(sample) and isinstance(sample[0].label, str)


def _example_from_row(row: dict) -> Example:
    return Example(
        text=row["text"],
        label=row["label"],
        repo=row.get("repo", ""),
        created_at=row.get("created_at"),
        fold=row.get("fold"),
    )


def load_bundle(bundle_dir: str | Path) -> Bundle:
    bundle_dir = Path(bundle_dir)
    manifest = json.loads((bundle_dir / "manifest.json").read_text())
    train: list[Example] = []
    test: list[Example] = []
    ood: list[Example] = []
    with open(bundle_dir / "dataset.jsonl", "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            row = json.loads(line)
            ex = _example_from_row(row)
            {"train": train, "test": test, "ood": ood}[row["split"]].append(ex)
    return Bundle(train=train, test=test, ood=ood, manifest=manifest)


def assign_folds(examples: list[Example], k: int, seed: int) -> list[int]:
    """Per-class seeded shuffle, position mod k: the bundle format's fold rule."""
    rng = random.Random(seed)
    folds = [0] * len(examples)
    groups: dict[str, list[int]] = {}
    for i, ex in enumerate(examples):
        key = ex.label if isinstance(ex.label, str) else ("positive" if ex.label else "negative")
        groups.setdefault(key, []).append(i)
    for key in sorted(groups):
        idxs = groups[key][:]
        if len(idxs) < k:
            raise ValueError(f"class {key!r} has {len(idxs)} examples, fewer than k={k}")
        rng.shuffle(idxs)
        for pos, i in enumerate(idxs):
            folds[i] = pos % k
    return folds


def write_eval_bundle(examples: list[Example], out_dir: str | Path, seed: int, note: str) -> Path:
    """Write examples as a test-only bundle the primary evaluate stage can read."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "dataset.jsonl", "w", encoding="utf-8") as fh:
        for ex in examples:
            row = {
                "text": ex.text,
                "label": ex.label,
                "repo": ex.repo,
                "created_at": ex.created_at,
                "split": "test",
                "fold": None,
            }
            fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")
    manifest = {
        "seed": seed,
        "note": note,
        "counts": {
            "train": {},
            "test": _label_counts(examples),
            "ood": {},
        },
    }
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return out


def _label_counts(examples: list[Example]) -> dict[str, int]:
    counts: dict[str, int] = {}
    for ex in examples:
        key = ex.label if isinstance(ex.label, str) else ("positive" if ex.label else "negative")
        counts[key] = counts.get(key, 0) + 1
    return dict(sorted(counts.items()))
