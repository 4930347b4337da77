"""Adapter for externally fine-tuned models published under the export
contract.

An export is a directory with:
  model.pt       TorchScript inference graph; forward(input_ids int64 [1, L])
                 -> logits float [1, 1] (binary) or [1, 13] (multiclass),
                 L capped at 512 (head-first truncation)
  tokenizer.json tokenizer config: vocabulary + merge rules + special tokens
  parity.jsonl   64 texts with the exporter's reference scores
  card.json      task name, category, label order, export timestamp

torch and tokenizers are imported lazily: the rest of the package works
without them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import ModelLoadError
from ..labeling import CATEGORIES

MAX_TOKENS = 512
N_CATEGORIES = len(CATEGORIES)

GRAPH_FILE = "model.pt"
TOKENIZER_FILE = "tokenizer.json"
PARITY_FILE = "parity.jsonl"
CARD_FILE = "card.json"


@dataclass
class ExportedClassifier:
    """A reloaded export satisfying the uniform scoring interface."""

    graph: object  # torch.jit.ScriptModule
    tokenizer: object  # tokenizers.Tokenizer
    card: dict
    kind: str  # "binary" | "multiclass"
    class_names: tuple[str, ...]
    threshold: float = 0.5

    def _logits(self, text: str) -> np.ndarray:
        import torch

        ids = self.tokenizer.encode(text).ids[:MAX_TOKENS]
        if not ids:
            ids = [0]
        with torch.no_grad():
            out = self.graph(torch.tensor([ids], dtype=torch.int64))
        return out.detach().numpy()[0]

    def score(self, text: str) -> float:
        if self.kind != "binary":
            raise TypeError("score() is for binary exports; use score_multi()")
        z = float(self._logits(text)[0])
        return 1.0 / (1.0 + np.exp(-z)) if z >= 0 else float(np.exp(z) / (1.0 + np.exp(z)))

    def score_multi(self, text: str) -> np.ndarray:
        if self.kind != "multiclass":
            raise TypeError("score_multi() is for multiclass exports; use score()")
        z = self._logits(text)
        ez = np.exp(z - z.max())
        return ez / ez.sum()

    def score_many(self, texts: Sequence[str]) -> np.ndarray:
        if self.kind == "binary":
            return np.asarray([self.score(t) for t in texts])
        return np.stack([self.score_multi(t) for t in texts])


def load_exported_model(path: str | Path, threshold: float = 0.5) -> ExportedClassifier:
    """Load and contract-check one export directory."""
    root = Path(path)
    if not root.is_dir():
        raise ModelLoadError(f"export path {root} is not a directory")
    for required in (GRAPH_FILE, TOKENIZER_FILE, CARD_FILE):
        if not (root / required).is_file():
            raise ModelLoadError(f"export contract violated: {required} missing in {root}")
    try:
        card = json.loads((root / CARD_FILE).read_text())
    except (json.JSONDecodeError, OSError) as exc:
        raise ModelLoadError(f"export contract violated: unreadable {CARD_FILE}: {exc}")
    task = card.get("task")
    if task not in ("td", "category", "multiclass"):
        raise ModelLoadError(f"export contract violated: unknown task {task!r} in {CARD_FILE}")
    kind = "multiclass" if task == "multiclass" else "binary"

    try:
        import torch
    except ImportError as exc:  # pragma: no cover - torch present in dev env
        raise ModelLoadError(f"torch is required to load exported graphs: {exc}")
    try:
        from tokenizers import Tokenizer
    except ImportError as exc:  # pragma: no cover
        raise ModelLoadError(f"tokenizers is required to load exported models: {exc}")

    try:
        graph = torch.jit.load(str(root / GRAPH_FILE), map_location="cpu")
        graph.eval()
    except Exception as exc:
        raise ModelLoadError(f"export contract violated: inference graph failed to load: {exc}")
    try:
        tokenizer = Tokenizer.from_file(str(root / TOKENIZER_FILE))
    except Exception as exc:
        raise ModelLoadError(f"export contract violated: tokenizer config failed to load: {exc}")
    tokenizer.enable_truncation(max_length=MAX_TOKENS)

    canonical = [c.value for c in CATEGORIES]
    if kind == "multiclass":
        label_order = card.get("label_order")
        if label_order != canonical:
            raise ModelLoadError(
                "export contract violated: card label_order does not match the "
                f"canonical category order {canonical}"
            )
        class_names = tuple(canonical)
    else:
        class_names = ()

    # Probe the head shape once so mismatches fail at load, not at scoring.
    probe_ids = tokenizer.encode("contract probe").ids[:MAX_TOKENS] or [0]
    try:
        with torch.no_grad():
            out = graph(torch.tensor([probe_ids], dtype=torch.int64))
    except Exception as exc:
        raise ModelLoadError(f"export contract violated: graph rejected probe input: {exc}")
    shape = tuple(out.shape)
    expected = 1 if kind == "binary" else N_CATEGORIES
    if len(shape) != 2 or shape[1] != expected:
        raise ModelLoadError(
            f"export contract violated: logit head shape {shape} does not match "
            f"task {task!r} (expected [1, {expected}])"
        )
    return ExportedClassifier(
        graph=graph, tokenizer=tokenizer, card=card, kind=kind,
        class_names=class_names, threshold=threshold,
    )


def check_parity(classifier: ExportedClassifier, parity_path: str | Path) -> float:
    """Max |adapter score - exporter reference score| over the parity fixture."""
    worst = 0.0
    with open(parity_path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            row = json.loads(line)
            if classifier.kind == "binary":
                got = classifier.score(row["text"])
                worst = max(worst, abs(got - float(row["score"])))
            else:
                got = classifier.score_multi(row["text"])
                ref = np.asarray(row["scores"], dtype=np.float64)
                worst = max(worst, float(np.abs(got - ref).max()))
    return worst
