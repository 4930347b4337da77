"""Publish a fine-tuned model under the model-export contract.

Contract directory:
  model.pt        traced inference graph, forward(input_ids int64 [1, L])
                  -> logits [1, 1] or [1, 13]
  tokenizer.json  vocabulary + merge rules + special tokens
  parity.jsonl    64 texts with this side's scores
  card.json       task name, category, label order, export timestamp,
                  training hyperparameters and protocol deviations

A self-check reloads the saved graph and compares scores on the parity
texts; the export is aborted (directory removed) beyond 1e-3.
"""

from __future__ import annotations

import json
import logging
import shutil
import warnings
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .data import CATEGORY_ORDER
from .modeling import LogitsGraph
from .trainer import FinetuneError, FinetuneResult

logger = logging.getLogger(__name__)

PARITY_TOLERANCE = 1e-3
MAX_TOKENS = 512


def _graph_scores(graph, tokenizer, texts: list[str], num_labels: int) -> np.ndarray:
    import torch

    out = []
    with torch.no_grad():
        for text in texts:
            ids = tokenizer.encode(text).ids[:MAX_TOKENS] or [0]
            logits = graph(torch.tensor([ids], dtype=torch.int64)).numpy()[0]
            if num_labels == 1:
                z = float(logits[0])
                out.append(1.0 / (1.0 + np.exp(-z)))
            else:
                ez = np.exp(logits - logits.max())
                out.append(ez / ez.sum())
    return np.asarray(out)


def export_model(result: FinetuneResult, out_dir: str | Path) -> Path:
    """Write the export directory; returns its path after the parity self-check."""
    if not result.trained:
        logger.warning("refusing to export: model still carries its base weights (epochs=0)")
        raise FinetuneError("refusing to export an untrained model (epochs=0)")
    import torch

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        result.model.eval()
        wrapper = LogitsGraph.build(result.model).eval()
        example = torch.tensor(
            [result.tokenizer.encode(result.parity_texts[0]).ids[:16] or [0]],
            dtype=torch.int64,
        )
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            traced = torch.jit.trace(wrapper, example)
        torch.jit.save(traced, str(out / "model.pt"))
        result.tokenizer.save(str(out / "tokenizer.json"))

        reference = _graph_scores(wrapper, result.tokenizer, result.parity_texts, result.num_labels)
        with open(out / "parity.jsonl", "w", encoding="utf-8") as fh:
            for text, score in zip(result.parity_texts, reference):
                if result.num_labels == 1:
                    row = {"text": text, "score": float(score)}
                else:
                    row = {"text": text, "scores": [float(v) for v in score]}
                fh.write(json.dumps(row, ensure_ascii=False) + "\n")

        card = {
            "task": result.task,
            "category": result.category,
            "label_order": CATEGORY_ORDER if result.task == "multiclass" else None,
            "exported_at": datetime.now(timezone.utc).isoformat(),
            **result.config,
        }
        (out / "card.json").write_text(json.dumps(card, indent=2, sort_keys=True) + "\n")

        reloaded = torch.jit.load(str(out / "model.pt"), map_location="cpu")
        reloaded.eval()
        roundtrip = _graph_scores(reloaded, result.tokenizer, result.parity_texts, result.num_labels)
        worst = float(np.abs(roundtrip - reference).max())
        if worst > PARITY_TOLERANCE:
            raise FinetuneError(
                f"export self-check failed: reloaded graph drifts {worst:.2e} > {PARITY_TOLERANCE}"
            )
    except BaseException:
        shutil.rmtree(out, ignore_errors=True)
        raise
    logger.info("exported %s model to %s (self-check max drift %.2e)", result.task, out, worst)
    return out
