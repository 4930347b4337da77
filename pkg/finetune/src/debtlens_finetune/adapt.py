"""Project-specific adaptation: continue fine-tuning on a seeded fraction of
one project's examples, reserving the rest as that project's evaluation split.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass
from pathlib import Path

from .data import Example, write_eval_bundle
from .trainer import FinetuneJob, FinetuneResult, _labels_for, _train_one, clone_result

logger = logging.getLogger(__name__)

DEFAULT_FRACTION = 0.30


@dataclass
class AdaptResult:
    result: FinetuneResult
    adapt_examples: list[Example]
    eval_examples: list[Example]
    eval_bundle_dir: Path | None
    manifest: dict


def project_adapt(
    base: FinetuneResult,
    project_examples: list[Example],
    fraction: float = DEFAULT_FRACTION,
    seed: int = 0,
    epochs: int = 5,
    batch_size: int = 16,
    learning_rate: float | None = None,
    eval_bundle_dir: str | Path | None = None,
) -> AdaptResult:
    """Adapted copy of the model plus the reserved evaluation split."""
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"adaptation fraction must be in (0, 1), got {fraction}")
    if not project_examples:
        raise ValueError("no project examples supplied")

    indices = list(range(len(project_examples)))
    random.Random(seed).shuffle(indices)
    n_adapt = int(fraction * len(indices))
    adapt_idx = sorted(indices[:n_adapt])
    eval_idx = sorted(indices[n_adapt:])
    adapt_examples = [project_examples[i] for i in adapt_idx]
    eval_examples = [project_examples[i] for i in eval_idx]

    adapted = clone_result(base)
    job = FinetuneJob(
        bundle_dir=".",  # not read; carries the training hyperparameters only
        task=base.task,
        category=base.category,
        epochs=epochs,
        seed=seed,
        batch_size=batch_size,
        learning_rate=learning_rate,
        max_length=base.max_length,
        run_cv=False,
    )
    lr = learning_rate or base.config["learning_rate"]
    texts = [e.text for e in adapt_examples]
    y = _labels_for(adapt_examples, base.task)
    _train_one(adapted.model, adapted.tokenizer, texts, y, job, lr, None, fold=None)
    adapted.config = dict(base.config, adapted_with={"fraction": fraction, "seed": seed})

    out_dir = None
    if eval_bundle_dir is not None:
        out_dir = write_eval_bundle(
            eval_examples, eval_bundle_dir, seed,
            note=f"project evaluation split ({1 - fraction:.0%} reserved)",
        )
    manifest = {
        "fraction": fraction,
        "seed": seed,
        "n_project": len(project_examples),
        "n_adapt": len(adapt_examples),
        "n_eval": len(eval_examples),
        "eval_bundle": str(out_dir) if out_dir else None,
    }
    if out_dir is not None:
        (Path(out_dir) / "adapt_manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n"
        )
    logger.info("project adaptation: %d adapt / %d eval", len(adapt_examples), len(eval_examples))
    return AdaptResult(
        result=adapted,
        adapt_examples=adapt_examples,
        eval_examples=eval_examples,
        eval_bundle_dir=out_dir,
        manifest=manifest,
    )
